#include "sas/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sas/math.hpp"
#include "sas/rng.hpp"

namespace sas {

namespace {

constexpr std::uint64_t kCvGammaTag = 0xcf6a33aULL;
constexpr std::uint64_t kCvBetaTag = 0xcfbe7aULL;

// gamma' W_i over a labeled row without materializing W.
double gamma_dot_w_labeled(const SemiSupervisedData& d, const Eigen::VectorXd& gamma,
                           Eigen::Index i) {
    return d.labeled_x.row(i).dot(gamma.head(d.x_dim())) +
           d.labeled_s.row(i).dot(gamma.tail(d.q()));
}

double gamma_dot_w_unlabeled(const SemiSupervisedData& d, const Eigen::VectorXd& gamma,
                             Eigen::Index i) {
    return d.unlabeled_x.row(i).dot(gamma.head(d.x_dim())) +
           d.unlabeled_s.row(i).dot(gamma.tail(d.q()));
}

PseudoLikContext gamma_context(const SemiSupervisedData& d, const LinkSpec& link,
                               const std::vector<Eigen::Index>& labeled_rows) {
    PseudoLikContext ctx;
    const auto m = static_cast<Eigen::Index>(labeled_rows.size());
    ctx.design.resize(m, d.w_dim());
    ctx.response.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = labeled_rows[static_cast<std::size_t>(r)];
        ctx.design.row(r).head(d.x_dim()) = d.labeled_x.row(i);
        ctx.design.row(r).tail(d.q()) = d.labeled_s.row(i);
        ctx.response[r] = d.labeled_y[i];
    }
    ctx.link = link;
    return ctx;
}

// Stacked prediction-model context: labeled rows keep Y, unlabeled rows get
// the imputed g(gamma' W). Labeled rows come first.
PseudoLikContext beta_context(const SemiSupervisedData& d, const LinkSpec& link,
                              const Eigen::VectorXd& gamma,
                              const std::vector<Eigen::Index>& labeled_rows,
                              const std::vector<Eigen::Index>& unlabeled_rows) {
    PseudoLikContext ctx;
    const auto nl = static_cast<Eigen::Index>(labeled_rows.size());
    const auto nu = static_cast<Eigen::Index>(unlabeled_rows.size());
    ctx.design.resize(nl + nu, d.x_dim());
    ctx.response.resize(nl + nu);
    for (Eigen::Index r = 0; r < nl; ++r) {
        const Eigen::Index i = labeled_rows[static_cast<std::size_t>(r)];
        ctx.design.row(r) = d.labeled_x.row(i);
        ctx.response[r] = d.labeled_y[i];
    }
    for (Eigen::Index r = 0; r < nu; ++r) {
        const Eigen::Index i = unlabeled_rows[static_cast<std::size_t>(r)];
        ctx.design.row(nl + r) = d.unlabeled_x.row(i);
        ctx.response[nl + r] = link.g(gamma_dot_w_unlabeled(d, gamma, i));
    }
    ctx.link = link;
    return ctx;
}

std::vector<Eigen::Index> all_rows(Eigen::Index count) {
    std::vector<Eigen::Index> v(static_cast<std::size_t>(count));
    std::iota(v.begin(), v.end(), Eigen::Index{0});
    return v;
}

// Rows outside the excluded folds, in ascending order.
std::vector<Eigen::Index> complement_rows(const std::vector<std::vector<Eigen::Index>>& folds,
                                          Eigen::Index count, std::initializer_list<int> exclude) {
    std::vector<char> drop(static_cast<std::size_t>(count), 0);
    for (int k : exclude)
        for (Eigen::Index i : folds[static_cast<std::size_t>(k)])
            drop[static_cast<std::size_t>(i)] = 1;
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i)
        if (!drop[static_cast<std::size_t>(i)]) rows.push_back(i);
    return rows;
}

double anchored_lambda(double c, Eigen::Index penalized_dim, Eigen::Index rows) {
    return c * std::sqrt(std::log(static_cast<double>(std::max<Eigen::Index>(penalized_dim, 2))) /
                         static_cast<double>(rows));
}

double resolve_lambda(const LambdaRule& rule, const PseudoLikContext& full_ctx,
                      Eigen::Index penalized_dim, std::uint64_t cv_seed,
                      const CrossFitOptions& opts) {
    switch (rule.mode) {
        case LambdaRule::Mode::fixed:
            if (rule.value < 0.0) throw ConfigError("lambda must be nonnegative");
            return rule.value;
        case LambdaRule::Mode::anchored:
            return anchored_lambda(rule.value, penalized_dim, full_ctx.rows());
        case LambdaRule::Mode::cv: {
            auto mask_dim = full_ctx.dim();
            PenaltySpec penalty = PenaltySpec::unpenalized_intercept(0.0, mask_dim);
            NullModel null = fit_null_model(full_ctx, penalty.penalty_mask, opts.solver);
            if (null.lambda_max <= 0.0) return 0.0; // response already explained by intercept
            auto grid = make_lambda_grid(null.lambda_max, opts.cv_grid_size);
            CvResult cv = select_lambda_cv(full_ctx, penalty.penalty_mask, grid, opts.cv_folds,
                                           cv_seed, opts.solver);
            return cv.lambda;
        }
    }
    throw ConfigError("unknown lambda rule");
}

// Fused accumulation into += X' diag(w/denom) X via a rank update on the
// sqrt-scaled block.
void add_weighted_gram(Eigen::MatrixXd& into, const Eigen::MatrixXd& block,
                       const Eigen::VectorXd& weights, double denom) {
    Eigen::MatrixXd scaled =
        block.array().colwise() * (weights.array() / denom).sqrt();
    into.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
}

} // namespace

PenalizedFit fit_imputation(const SemiSupervisedData& data, const LinkSpec& link,
                            double lambda_gamma, const SolverOptions& opts) {
    data.validate();
    PseudoLikContext ctx = gamma_context(data, link, all_rows(data.n()));
    return fit_penalized_pl(ctx, PenaltySpec::unpenalized_intercept(lambda_gamma, ctx.dim()),
                            opts);
}

Eigen::VectorXd impute_outcomes(const Eigen::VectorXd& gamma, const SemiSupervisedData& data,
                                const LinkSpec& link) {
    if (gamma.size() != data.w_dim())
        throw ShapeError("impute_outcomes: gamma dimension != p+q+1");
    Eigen::VectorXd lin = data.unlabeled_x * gamma.head(data.x_dim());
    if (data.q() > 0) lin.noalias() += data.unlabeled_s * gamma.tail(data.q());
    for (Eigen::Index i = 0; i < lin.size(); ++i) lin[i] = link.g(lin[i]);
    return lin;
}

PenalizedFit fit_target(const SemiSupervisedData& data, const Eigen::VectorXd& gamma,
                        const LinkSpec& link, double lambda_beta, const SolverOptions& opts) {
    data.validate();
    if (!data.supervised_only() && gamma.size() != data.w_dim())
        throw ShapeError("fit_target: gamma dimension != p+q+1");
    PseudoLikContext ctx = beta_context(data, link, gamma, all_rows(data.n()),
                                        all_rows(data.unlabeled_rows()));
    return fit_penalized_pl(ctx, PenaltySpec::unpenalized_intercept(lambda_beta, ctx.dim()),
                            opts);
}

bool CrossFitCore::all_converged() const {
    auto ok = [](const std::vector<PenalizedFit>& fits) {
        return std::all_of(fits.begin(), fits.end(),
                           [](const PenalizedFit& f) { return f.converged; });
    };
    const bool full_ok = beta_full.converged && (supervised || gamma_full.converged);
    return full_ok && ok(gamma_k) && ok(beta_k) && ok(gamma_kk) && ok(beta_kk);
}

CrossFitCore fit_crossfit_core(const SemiSupervisedData& data, const LinkSpec& link,
                               const CrossFitOptions& opts) {
    data.validate();
    if (opts.K < 3)
        throw ConfigError("fit_crossfit_core: K must be >= 3 (pairwise exclusion needs a "
                          "nonempty training remainder)");

    CrossFitCore core;
    core.link = link;
    core.supervised = data.supervised_only();
    core.partition = make_folds(data, opts.K, opts.seed);
    const int K = opts.K;
    const Eigen::Index n = data.n();
    const Eigen::Index N = data.total();

    // Penalty levels: resolved once on the full-data problems and reused by
    // every fold and pairwise fit.
    if (!core.supervised) {
        PseudoLikContext gamma_full_ctx = gamma_context(data, link, all_rows(n));
        core.lambda_gamma = resolve_lambda(opts.lambda_gamma, gamma_full_ctx, data.w_dim() - 1,
                                           derive_seed(opts.seed, kCvGammaTag), opts);
        core.gamma_full = fit_penalized_pl(
            gamma_full_ctx,
            PenaltySpec::unpenalized_intercept(core.lambda_gamma, gamma_full_ctx.dim()),
            opts.solver);
    }

    {
        PseudoLikContext beta_full_ctx =
            beta_context(data, link, core.gamma_full.coefficients, all_rows(n),
                         all_rows(data.unlabeled_rows()));
        core.lambda_beta = resolve_lambda(opts.lambda_beta, beta_full_ctx, data.p(),
                                          derive_seed(opts.seed, kCvBetaTag), opts);
        core.beta_full = fit_penalized_pl(
            beta_full_ctx,
            PenaltySpec::unpenalized_intercept(core.lambda_beta, beta_full_ctx.dim()),
            opts.solver);
    }

    switch (opts.lambda_u.mode) {
        case LambdaRule::Mode::fixed:
            core.lambda_u = opts.lambda_u.value;
            break;
        case LambdaRule::Mode::anchored: {
            Eigen::Index max_fold = 0;
            for (int k = 0; k < K; ++k)
                max_fold = std::max(max_fold, core.partition.fold_size(k));
            core.lambda_u = anchored_lambda(opts.lambda_u.value, data.p(), N - max_fold);
            break;
        }
        case LambdaRule::Mode::cv:
            throw ConfigError("lambda_u: cross-validation is not defined for the projection "
                              "program; use a fixed value or the anchored rule");
    }

    const auto& lab_folds = core.partition.labeled_folds;
    const auto& unlab_folds = core.partition.unlabeled_folds;

    // Single-exclusion fits.
    core.gamma_k.resize(static_cast<std::size_t>(K));
    core.beta_k.resize(static_cast<std::size_t>(K));
    SolverOptions warm_opts = opts.solver;
    for (int k = 0; k < K; ++k) {
        auto lab = complement_rows(lab_folds, n, {k});
        auto unlab = complement_rows(unlab_folds, data.unlabeled_rows(), {k});
        if (!core.supervised) {
            PseudoLikContext gctx = gamma_context(data, link, lab);
            warm_opts.warm_start = core.gamma_full.coefficients;
            core.gamma_k[static_cast<std::size_t>(k)] = fit_penalized_pl(
                gctx, PenaltySpec::unpenalized_intercept(core.lambda_gamma, gctx.dim()),
                warm_opts);
        }
        const Eigen::VectorXd& gk = core.supervised
                                        ? core.gamma_full.coefficients
                                        : core.gamma_k[static_cast<std::size_t>(k)].coefficients;
        PseudoLikContext bctx = beta_context(data, link, gk, lab, unlab);
        warm_opts.warm_start = core.beta_full.coefficients;
        core.beta_k[static_cast<std::size_t>(k)] = fit_penalized_pl(
            bctx, PenaltySpec::unpenalized_intercept(core.lambda_beta, bctx.dim()), warm_opts);
    }

    // Pairwise-exclusion fits.
    const std::size_t pairs = static_cast<std::size_t>(K * (K - 1) / 2);
    core.gamma_kk.resize(pairs);
    core.beta_kk.resize(pairs);
    for (int k = 0; k < K; ++k) {
        for (int l = k + 1; l < K; ++l) {
            const std::size_t idx = CrossFitCore::pair_index(k, l, K);
            auto lab = complement_rows(lab_folds, n, {k, l});
            auto unlab = complement_rows(unlab_folds, data.unlabeled_rows(), {k, l});
            if (lab.empty())
                throw ConfigError("fit_crossfit_core: pairwise exclusion leaves no labeled rows");
            if (!core.supervised) {
                PseudoLikContext gctx = gamma_context(data, link, lab);
                warm_opts.warm_start = core.gamma_k[static_cast<std::size_t>(k)].coefficients;
                core.gamma_kk[idx] = fit_penalized_pl(
                    gctx, PenaltySpec::unpenalized_intercept(core.lambda_gamma, gctx.dim()),
                    warm_opts);
            }
            const Eigen::VectorXd& gkk = core.supervised
                                             ? core.gamma_full.coefficients
                                             : core.gamma_kk[idx].coefficients;
            PseudoLikContext bctx = beta_context(data, link, gkk, lab, unlab);
            warm_opts.warm_start = core.beta_k[static_cast<std::size_t>(k)].coefficients;
            core.beta_kk[idx] = fit_penalized_pl(
                bctx, PenaltySpec::unpenalized_intercept(core.lambda_beta, bctx.dim()),
                warm_opts);
        }
    }

    // Per-fold Hessians over the fold complement: block k' contributes
    // g'(beta_{k,k'}' X_i) X_i X_i' for its labeled and unlabeled rows.
    core.hessians.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double denom = static_cast<double>(N - core.partition.fold_size(k));
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(data.x_dim(), data.x_dim());
        for (int l = 0; l < K; ++l) {
            if (l == k) continue;
            const Eigen::VectorXd& bkk = core.beta_pair(k, l).coefficients;
            const auto& lab = lab_folds[static_cast<std::size_t>(l)];
            const auto& unlab = unlab_folds[static_cast<std::size_t>(l)];
            const auto rows = static_cast<Eigen::Index>(lab.size() + unlab.size());
            Eigen::MatrixXd block(rows, data.x_dim());
            Eigen::Index r = 0;
            for (Eigen::Index i : lab) block.row(r++) = data.labeled_x.row(i);
            for (Eigen::Index i : unlab) block.row(r++) = data.unlabeled_x.row(i);
            Eigen::VectorXd w = block * bkk;
            for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = link.g_prime(w[j]);
            add_weighted_gram(H, block, w, denom);
        }
        H.triangularView<Eigen::StrictlyUpper>() = H.transpose();
        core.hessians.emplace_back(std::move(H));
    }
    return core;
}

CrossFitBundle bundle_for_xnew(const CrossFitCore& core, const Eigen::VectorXd& x_new,
                               const SolverOptions& opts) {
    if (core.hessians.empty()) throw ConfigError("bundle_for_xnew: core has no Hessians");
    if (x_new.size() != core.hessians.front().hessian().rows())
        throw ShapeError("bundle_for_xnew: x_new dimension != p+1");
    const double norm = x_new.norm();
    if (!(norm > 0.0) || !x_new.allFinite())
        throw ConfigError("bundle_for_xnew: x_new must be finite and nonzero");

    CrossFitBundle b;
    b.core = &core;
    b.x_new = x_new;
    b.x_std = x_new / norm;
    b.u_k.resize(static_cast<std::size_t>(core.partition.K));
    SolverOptions uopts = opts;
    for (int k = 0; k < core.partition.K; ++k) {
        if (k > 0) uopts.warm_start = b.u_k[static_cast<std::size_t>(k - 1)].coefficients;
        b.u_k[static_cast<std::size_t>(k)] =
            core.hessians[static_cast<std::size_t>(k)].solve(b.x_std, core.lambda_u, uopts);
    }
    return b;
}

OwningCrossFitBundle fit_crossfit_bundle(const SemiSupervisedData& data, const LinkSpec& link,
                                         const Eigen::VectorXd& x_new,
                                         const CrossFitOptions& opts) {
    OwningCrossFitBundle out;
    out.core = std::make_shared<CrossFitCore>(fit_crossfit_core(data, link, opts));
    out.bundle = bundle_for_xnew(*out.core, x_new, opts.solver);
    return out;
}

namespace {

// Fold label of every row, for row-order reductions that stay bit-identical
// under fold relabeling.
std::vector<int> fold_of(const std::vector<std::vector<Eigen::Index>>& folds,
                         Eigen::Index count) {
    std::vector<int> f(static_cast<std::size_t>(count), -1);
    for (std::size_t k = 0; k < folds.size(); ++k)
        for (Eigen::Index i : folds[k]) f[static_cast<std::size_t>(i)] = static_cast<int>(k);
    return f;
}

} // namespace

double debiased_estimate(const CrossFitBundle& bundle, const SemiSupervisedData& data) {
    const CrossFitCore& core = *bundle.core;
    const int K = core.partition.K;
    const Eigen::Index n = data.n();
    const Eigen::Index N = data.total();
    const double rho = data.rho();
    const LinkSpec& link = core.link;

    // Plug-in average over folds; sorted before summing so the value is
    // exactly invariant under fold relabeling.
    std::vector<double> plug(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        plug[static_cast<std::size_t>(k)] =
            bundle.x_std.dot(core.beta_k[static_cast<std::size_t>(k)].coefficients);
    std::sort(plug.begin(), plug.end());
    double term1 = 0.0;
    for (double v : plug) term1 += v;
    term1 /= static_cast<double>(K);

    const auto lab_fold = fold_of(core.partition.labeled_folds, n);
    double term3 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(lab_fold[static_cast<std::size_t>(i)]);
        const double ux = data.labeled_x.row(i).dot(bundle.u_k[k].coefficients);
        const double gb = link.g(data.labeled_x.row(i).dot(core.beta_k[k].coefficients));
        double resid;
        if (core.supervised) {
            resid = gb - data.labeled_y[i];
        } else {
            const double gg = link.g(gamma_dot_w_labeled(data, core.gamma_k[k].coefficients, i));
            resid = (1.0 - rho) * gg + rho * gb - data.labeled_y[i];
        }
        term3 += ux * resid;
    }
    term3 /= static_cast<double>(n);

    double term2 = 0.0;
    if (!core.supervised) {
        const auto unlab_fold = fold_of(core.partition.unlabeled_folds, data.unlabeled_rows());
        for (Eigen::Index i = 0; i < data.unlabeled_rows(); ++i) {
            const auto k = static_cast<std::size_t>(unlab_fold[static_cast<std::size_t>(i)]);
            const double ux = data.unlabeled_x.row(i).dot(bundle.u_k[k].coefficients);
            const double gb = link.g(data.unlabeled_x.row(i).dot(core.beta_k[k].coefficients));
            const double gg = link.g(gamma_dot_w_unlabeled(data, core.gamma_k[k].coefficients, i));
            term2 += ux * (gb - gg);
        }
        term2 /= static_cast<double>(N);
    }

    return term1 - term2 - term3;
}

double variance_estimate(const CrossFitBundle& bundle, const SemiSupervisedData& data) {
    const CrossFitCore& core = *bundle.core;
    const Eigen::Index n = data.n();
    const double rho = data.rho();
    const LinkSpec& link = core.link;

    const auto lab_fold = fold_of(core.partition.labeled_folds, n);
    double first = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(lab_fold[static_cast<std::size_t>(i)]);
        const double ux = data.labeled_x.row(i).dot(bundle.u_k[k].coefficients);
        const double gb = link.g(data.labeled_x.row(i).dot(core.beta_k[k].coefficients));
        double resid;
        if (core.supervised) {
            resid = gb - data.labeled_y[i];
        } else {
            const double gg = link.g(gamma_dot_w_labeled(data, core.gamma_k[k].coefficients, i));
            resid = (1.0 - rho) * gg + rho * gb - data.labeled_y[i];
        }
        first += ux * ux * resid * resid;
    }
    first /= static_cast<double>(n);

    double second = 0.0;
    if (!core.supervised) {
        const auto unlab_fold = fold_of(core.partition.unlabeled_folds, data.unlabeled_rows());
        for (Eigen::Index i = 0; i < data.unlabeled_rows(); ++i) {
            const auto k = static_cast<std::size_t>(unlab_fold[static_cast<std::size_t>(i)]);
            const double ux = data.unlabeled_x.row(i).dot(bundle.u_k[k].coefficients);
            const double gb = link.g(data.unlabeled_x.row(i).dot(core.beta_k[k].coefficients));
            const double gg = link.g(gamma_dot_w_unlabeled(data, core.gamma_k[k].coefficients, i));
            second += ux * ux * (gb - gg) * (gb - gg);
        }
        second *= rho * rho / static_cast<double>(n);
    }
    return first + second;
}

PredictionInterval confidence_interval(double theta_hat, double v_hat,
                                       const Eigen::VectorXd& x_new, Eigen::Index n,
                                       double alpha, const LinkSpec& link) {
    if (v_hat < 0.0) throw NumericalError("confidence_interval: negative variance");
    if (n < 1) throw ConfigError("confidence_interval: n must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("confidence_interval: alpha must be in (0,1)");
    const double norm = x_new.norm();
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double half = z * std::sqrt(v_hat / static_cast<double>(n));

    PredictionInterval pi;
    pi.theta_hat = theta_hat;
    pi.v_hat = v_hat;
    pi.alpha = alpha;
    pi.ci_linear = {norm * (theta_hat - half), norm * (theta_hat + half)};
    pi.ci_response = {link.g(pi.ci_linear.first), link.g(pi.ci_linear.second)};
    pi.point_response = link.g(norm * theta_hat);
    return pi;
}

} // namespace sas
