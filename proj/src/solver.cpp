#include "sas/solver.hpp"

#include <algorithm>
#include <cmath>

#include "sas/rng.hpp"

namespace sas {

void PenaltySpec::validate(Eigen::Index dim) const {
    if (lambda < 0.0) throw ConfigError("PenaltySpec: lambda must be nonnegative");
    if (!std::isfinite(lambda)) throw ConfigError("PenaltySpec: lambda must be finite");
    if (static_cast<Eigen::Index>(penalty_mask.size()) != dim)
        throw ShapeError("PenaltySpec: mask length != coefficient length");
}

namespace {

double penalty_l1(const Eigen::VectorXd& beta, const std::vector<bool>& mask) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (mask[static_cast<std::size_t>(j)]) s += std::abs(beta[j]);
    return s;
}

void prox_l1(Eigen::VectorXd& beta, const std::vector<bool>& mask, double t) {
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (mask[static_cast<std::size_t>(j)]) beta[j] = soft_threshold(beta[j], t);
}

double kkt_from_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                         const PenaltySpec& penalty) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        double v;
        if (!penalty.penalty_mask[static_cast<std::size_t>(j)]) {
            v = std::abs(grad[j]);
        } else if (beta[j] == 0.0) {
            v = std::max(std::abs(grad[j]) - penalty.lambda, 0.0);
        } else {
            v = std::abs(grad[j] + penalty.lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
        }
        worst = std::max(worst, v);
    }
    return worst;
}

// Spectral norm of (1/m) X'X by power iteration from a fixed start vector.
double gram_spectral_norm(const Eigen::MatrixXd& design, int steps = 20) {
    const Eigen::Index p = design.cols();
    const double m = static_cast<double>(design.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(p) / std::sqrt(static_cast<double>(p));
    Eigen::VectorXd xv(design.rows());
    double norm = 1.0;
    for (int it = 0; it < steps; ++it) {
        xv.noalias() = design * v;
        v.noalias() = design.transpose() * xv;
        v /= m;
        norm = v.norm();
        if (norm <= 0.0) return 1.0;
        v /= norm;
    }
    return norm;
}

// Fused objective + residual pass over precomputed linear predictors.
double objective_and_resid(const PseudoLikContext& ctx, const Eigen::VectorXd& lin,
                           Eigen::VectorXd& resid) {
    const Eigen::Index m = lin.size();
    resid.resize(m);
    auto g = ctx.link.g;
    auto G = ctx.link.G;
    const double* x = lin.data();
    const double* y = ctx.response.data();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        acc += G(x[i]) - y[i] * x[i];
        resid[i] = g(x[i]) - y[i];
    }
    return acc / static_cast<double>(m);
}

bool response_is_constant(const Eigen::VectorXd& y) {
    if (y.size() == 0) return false;
    return (y.array() == y[0]).all();
}

} // namespace

double kkt_residual_pl(const PseudoLikContext& ctx, const PenaltySpec& penalty,
                       const Eigen::VectorXd& coeffs) {
    return kkt_from_gradient(pl_gradient(ctx, coeffs), coeffs, penalty);
}

PenalizedFit fit_penalized_pl(const PseudoLikContext& ctx, const PenaltySpec& penalty,
                              const SolverOptions& opts) {
    ctx.validate();
    penalty.validate(ctx.dim());
    const Eigen::Index p = ctx.dim();
    const double lambda = penalty.lambda;
    const auto& mask = penalty.penalty_mask;

    Eigen::VectorXd x = opts.warm_start ? *opts.warm_start : Eigen::VectorXd::Zero(p);
    if (x.size() != p) throw ShapeError("fit_penalized_pl: warm start has wrong length");

    double lip = ctx.link.sup_g_prime * gram_spectral_norm(ctx.design);
    if (!(lip > 0.0) || !std::isfinite(lip)) lip = 1.0;

    Eigen::VectorXd lin(ctx.rows()), resid, grad(p);
    Eigen::VectorXd y = x, z(p), diff(p);

    lin.noalias() = ctx.design * x;
    double fx = objective_and_resid(ctx, lin, resid);
    double objx = fx + lambda * penalty_l1(x, mask);
    if (!std::isfinite(objx)) throw NumericalError("fit_penalized_pl: non-finite objective");

    double t = 1.0;
    int iter = 0;
    double kkt = std::numeric_limits<double>::infinity();
    bool converged = false;

    for (; iter < opts.max_iterations; ++iter) {
        // Gradient and value at the extrapolated point.
        lin.noalias() = ctx.design * y;
        const double fy = objective_and_resid(ctx, lin, resid);
        grad.noalias() = ctx.design.transpose() * resid;
        grad /= static_cast<double>(ctx.rows());

        // Backtracking on the quadratic upper bound at y.
        double fz;
        for (;;) {
            z = y - grad / lip;
            prox_l1(z, mask, lambda / lip);
            lin.noalias() = ctx.design * z;
            fz = detail::pl_objective_lin(ctx, z, lin);
            diff = z - y;
            const double bound = fy + grad.dot(diff) + 0.5 * lip * diff.squaredNorm();
            if (fz <= bound + 1e-12 * std::abs(bound)) break;
            lip *= 2.0;
            if (!std::isfinite(lip) || lip > 1e300)
                throw NumericalError("fit_penalized_pl: backtracking diverged");
        }
        if (!std::isfinite(fz)) throw NumericalError("fit_penalized_pl: non-finite objective");
        const double objz = fz + lambda * penalty_l1(z, mask);

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (objz <= objx) {
            // Accept and extrapolate.
            y = z + ((t - 1.0) / t_next) * (z - x);
            x.swap(z);
            objx = objz;
        } else {
            // Monotone restart: keep the best iterate, drop momentum.
            y = x;
            t = 1.0;
            if (opts.objective_trace) opts.objective_trace->push_back(objx);
            continue;
        }
        t = t_next;
        if (opts.objective_trace) opts.objective_trace->push_back(objx);

        if ((iter + 1) % 10 == 0 || iter + 1 == opts.max_iterations) {
            kkt = kkt_residual_pl(ctx, penalty, x);
            if (kkt <= opts.tolerance) {
                converged = true;
                ++iter;
                break;
            }
        }
    }

    PenalizedFit fit;
    fit.coefficients = x;
    fit.lambda = lambda;
    fit.kkt_residual = converged ? kkt : kkt_residual_pl(ctx, penalty, x);
    fit.converged = fit.kkt_residual <= opts.tolerance;
    fit.iterations = iter;
    fit.objective_value = pl_objective(ctx, x) + lambda * penalty_l1(x, mask);
    fit.warning_constant_response =
        ctx.link.kind != LinkKind::identity && response_is_constant(ctx.response);
    return fit;
}

NullModel fit_null_model(const PseudoLikContext& ctx, const std::vector<bool>& penalty_mask,
                         const SolverOptions& opts) {
    ctx.validate();
    if (static_cast<Eigen::Index>(penalty_mask.size()) != ctx.dim())
        throw ShapeError("fit_null_model: mask length != design columns");

    std::vector<Eigen::Index> free_cols;
    for (Eigen::Index j = 0; j < ctx.dim(); ++j)
        if (!penalty_mask[static_cast<std::size_t>(j)]) free_cols.push_back(j);
    if (free_cols.empty() || free_cols[0] != 0)
        throw ConfigError("fit_null_model: expects an unpenalized intercept column");

    PseudoLikContext sub;
    sub.design.resize(ctx.rows(), static_cast<Eigen::Index>(free_cols.size()));
    for (std::size_t c = 0; c < free_cols.size(); ++c)
        sub.design.col(static_cast<Eigen::Index>(c)) = ctx.design.col(free_cols[c]);
    sub.response = ctx.response;
    sub.link = ctx.link;

    SolverOptions null_opts;
    null_opts.tolerance = std::min(opts.tolerance, 1e-8);
    null_opts.max_iterations = opts.max_iterations;
    PenalizedFit sub_fit =
        fit_penalized_pl(sub, PenaltySpec{0.0, std::vector<bool>(free_cols.size(), false)},
                         null_opts);

    NullModel null;
    null.coefficients = Eigen::VectorXd::Zero(ctx.dim());
    for (std::size_t c = 0; c < free_cols.size(); ++c)
        null.coefficients[free_cols[c]] = sub_fit.coefficients[static_cast<Eigen::Index>(c)];

    const Eigen::VectorXd grad = pl_gradient(ctx, null.coefficients);
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < ctx.dim(); ++j)
        if (penalty_mask[static_cast<std::size_t>(j)]) lmax = std::max(lmax, std::abs(grad[j]));
    null.lambda_max = lmax;
    return null;
}

std::vector<double> make_lambda_grid(double lambda_max, int size, double ratio) {
    if (!(lambda_max > 0.0) || size < 1 || !(ratio > 0.0) || ratio > 1.0)
        throw ConfigError("make_lambda_grid: invalid parameters");
    std::vector<double> grid(static_cast<std::size_t>(size));
    if (size == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double step = std::log(ratio) / static_cast<double>(size - 1);
    for (int i = 0; i < size; ++i)
        grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(step * i);
    return grid;
}

void QuadraticProgramSpec::validate() const {
    if (hessian_weights.size() != design.rows())
        throw ShapeError("QuadraticProgramSpec: weights length != design rows");
    if (target.size() != design.cols())
        throw ShapeError("QuadraticProgramSpec: target length != design columns");
    if ((hessian_weights.array() < 0.0).any())
        throw NumericalError("QuadraticProgramSpec: negative hessian weight");
    if (lambda_u < 0.0) throw ConfigError("QuadraticProgramSpec: lambda_u must be nonnegative");
}

QuadraticSolver::QuadraticSolver(Eigen::MatrixXd hessian) : hessian_(std::move(hessian)) {
    if (hessian_.rows() != hessian_.cols())
        throw ShapeError("QuadraticSolver: hessian must be square");
}

QuadraticSolver::QuadraticSolver(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights) {
    if (weights.size() != design.rows())
        throw ShapeError("QuadraticSolver: weights length != design rows");
    hessian_.setZero(design.cols(), design.cols());
    accumulate_hessian(hessian_, design, weights, static_cast<double>(design.rows()));
}

void QuadraticSolver::accumulate_hessian(Eigen::MatrixXd& into, const Eigen::MatrixXd& design,
                                         const Eigen::VectorXd& weights, double denom) {
    into.noalias() +=
        design.transpose() * (weights / denom).asDiagonal() * design;
}

PenalizedFit QuadraticSolver::solve(const Eigen::VectorXd& target, double lambda_u,
                                    const SolverOptions& opts) const {
    const Eigen::Index p = hessian_.rows();
    if (target.size() != p) throw ShapeError("QuadraticSolver: target length mismatch");
    if (lambda_u < 0.0) throw ConfigError("QuadraticSolver: lambda_u must be nonnegative");

    Eigen::VectorXd u = opts.warm_start ? *opts.warm_start : Eigen::VectorXd::Zero(p);
    if (u.size() != p) throw ShapeError("QuadraticSolver: warm start has wrong length");

    const Eigen::VectorXd diag = hessian_.diagonal();
    Eigen::VectorXd hu = hessian_ * u;

    double kkt = std::numeric_limits<double>::infinity();
    bool converged = false;
    int sweep = 0;
    const int max_sweeps = std::max(1, opts.max_iterations);
    for (; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double uj = u[j];
            const double rho = target[j] - hu[j] + diag[j] * uj;
            double uj_new;
            if (diag[j] > 0.0) {
                uj_new = soft_threshold(rho, lambda_u) / diag[j];
            } else if (std::abs(rho) <= lambda_u) {
                uj_new = 0.0;
            } else {
                throw NumericalError("QuadraticSolver: unbounded coordinate (zero curvature)");
            }
            if (uj_new != uj) {
                hu += hessian_.col(j) * (uj_new - uj);
                u[j] = uj_new;
                max_delta = std::max(max_delta, std::abs(uj_new - uj));
            }
        }
        // Exact residual recomputation, so incremental drift never
        // masquerades as convergence.
        hu.noalias() = hessian_ * u;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double zeta = hu[j] - target[j];
            double v;
            if (u[j] == 0.0)
                v = std::max(std::abs(zeta) - lambda_u, 0.0);
            else
                v = std::abs(zeta + lambda_u * (u[j] > 0.0 ? 1.0 : -1.0));
            worst = std::max(worst, v);
        }
        kkt = worst;
        if (kkt <= opts.tolerance) {
            converged = true;
            ++sweep;
            break;
        }
        (void)max_delta;
    }
    if (!u.allFinite()) throw NumericalError("QuadraticSolver: non-finite solution");

    PenalizedFit fit;
    fit.coefficients = u;
    fit.lambda = lambda_u;
    fit.kkt_residual = kkt;
    fit.converged = converged;
    fit.iterations = sweep;
    fit.objective_value = 0.5 * u.dot(hessian_ * u) - u.dot(target) + lambda_u * u.lpNorm<1>();
    return fit;
}

PenalizedFit fit_penalized_quadratic(const QuadraticProgramSpec& spec,
                                     const SolverOptions& opts) {
    spec.validate();
    QuadraticSolver solver(spec.design, spec.hessian_weights);
    return solver.solve(spec.target, spec.lambda_u, opts);
}

double kkt_residual_quadratic(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& target,
                              double lambda_u, const Eigen::VectorXd& coeffs) {
    const Eigen::VectorXd zeta = hessian * coeffs - target;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
        double v;
        if (coeffs[j] == 0.0)
            v = std::max(std::abs(zeta[j]) - lambda_u, 0.0);
        else
            v = std::abs(zeta[j] + lambda_u * (coeffs[j] > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

CvResult select_lambda_cv(const PseudoLikContext& ctx, const std::vector<bool>& penalty_mask,
                          const std::vector<double>& grid, int folds, std::uint64_t seed,
                          const SolverOptions& opts) {
    ctx.validate();
    if (grid.empty()) throw ConfigError("select_lambda_cv: empty lambda grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
            throw ConfigError("select_lambda_cv: lambda grid entries must be finite nonnegative");
        if (i > 0 && grid[i] > grid[i - 1])
            throw ConfigError("select_lambda_cv: lambda grid must be sorted descending");
    }
    const Eigen::Index m = ctx.rows();
    if (folds < 2 || folds > m)
        throw ConfigError("select_lambda_cv: folds must be in [2, rows]");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(derive_seed(seed, /*purpose=*/0x5cf01d5u));
    rng.shuffle(order);

    std::vector<double> pooled(grid.size(), 0.0);

    for (int k = 0; k < folds; ++k) {
        std::vector<Eigen::Index> train_rows, val_rows;
        for (std::size_t idx = 0; idx < order.size(); ++idx) {
            if (static_cast<int>(idx % static_cast<std::size_t>(folds)) == k)
                val_rows.push_back(order[idx]);
            else
                train_rows.push_back(order[idx]);
        }
        PseudoLikContext train;
        train.design.resize(static_cast<Eigen::Index>(train_rows.size()), ctx.dim());
        train.response.resize(static_cast<Eigen::Index>(train_rows.size()));
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
            train.design.row(static_cast<Eigen::Index>(r)) = ctx.design.row(train_rows[r]);
            train.response[static_cast<Eigen::Index>(r)] = ctx.response[train_rows[r]];
        }
        train.link = ctx.link;

        SolverOptions fold_opts = opts;
        fold_opts.objective_trace = nullptr;
        std::optional<Eigen::VectorXd> warm;
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            fold_opts.warm_start = warm;
            PenalizedFit fit = fit_penalized_pl(
                train, PenaltySpec{grid[gi], penalty_mask}, fold_opts);
            warm = fit.coefficients;
            double loss = 0.0;
            for (Eigen::Index vi : val_rows) {
                const double x = ctx.design.row(vi).dot(fit.coefficients);
                loss += ctx.link.G(x) - ctx.response[vi] * x;
            }
            pooled[gi] += loss;
        }
    }

    CvResult result;
    result.grid = grid;
    result.losses.resize(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi)
        result.losses[gi] = pooled[gi] / static_cast<double>(m);
    std::size_t best = 0;
    for (std::size_t gi = 1; gi < grid.size(); ++gi)
        if (result.losses[gi] < result.losses[best]) best = gi;
    result.index = best;
    result.lambda = grid[best];
    return result;
}

} // namespace sas
