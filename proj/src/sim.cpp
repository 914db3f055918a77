#include "sas/sim.hpp"

#include <cmath>

#include "sas/math.hpp"
#include "sas/rng.hpp"
#include "sas/solver.hpp"

namespace sas {

namespace {

constexpr std::uint64_t kDataTag = 0xda7a0001ULL;
constexpr std::uint64_t kTestTag = 0x7e570002ULL;
constexpr std::uint64_t kOracleTag = 0x0aac0003ULL;
constexpr std::uint64_t kGammaTag = 0x0aac0004ULL;
constexpr std::uint64_t kXnewTag = 0x00e30005ULL;

struct GroupValues {
    double first;  // coordinate 1
    double second; // coordinates 2..s
    double third;  // coordinates s+1..p
};

Eigen::VectorXd expand_groups(const GroupValues& v, Eigen::Index p, Eigen::Index s) {
    Eigen::VectorXd out(p);
    out[0] = v.first;
    out.segment(1, s - 1).setConstant(v.second);
    out.segment(s, p - s).setConstant(v.third);
    return out;
}

// One simulated observation: covariates (without intercept), surrogates,
// latent outcome. Draw order per row is fixed (Z^x, Z^u, Z^s, then the
// outcome uniform) in both scenarios.
struct RowGenerator {
    const ScenarioConfig& cfg;
    Eigen::VectorXd alpha;
    Eigen::VectorXd xi; // empty for Scenario II
    double theta;
    double nu; // Scenario II only
    double mu_x, sigma_x, mu_s, sigma_s;
    double sqrt_1m_invp, inv_sqrt_p, inv_sqrt_pm1, alpha_sum;

    std::vector<double> zx, zs;

    explicit RowGenerator(const ScenarioConfig& c)
        : cfg(c),
          alpha(c.alpha()),
          theta(c.theta()),
          nu(c.scenario == Scenario::II ? c.nu() : 0.0),
          mu_x(c.mu_x()),
          sigma_x(c.sigma_x()),
          mu_s(c.mu_s()),
          sigma_s(c.sigma_s()) {
        if (c.scenario == Scenario::I) xi = c.xi();
        const double p = static_cast<double>(c.p);
        sqrt_1m_invp = std::sqrt(1.0 - 1.0 / p);
        inv_sqrt_p = 1.0 / std::sqrt(p);
        inv_sqrt_pm1 = 1.0 / std::sqrt(p - 1.0);
        alpha_sum = alpha.sum();
        zx.resize(static_cast<std::size_t>(c.p));
        zs.resize(static_cast<std::size_t>(c.q));
    }

    // x: length p (no intercept), s: length q.
    void draw(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> x, Eigen::Ref<Eigen::RowVectorXd> s,
              double& y) {
        const Eigen::Index p = cfg.p;
        const Eigen::Index q = cfg.q;
        for (Eigen::Index j = 0; j < p; ++j) zx[static_cast<std::size_t>(j)] = rng.normal(0, 5);
        const double zu = rng.normal(0, 5);
        for (Eigen::Index j = 0; j < q; ++j) zs[static_cast<std::size_t>(j)] = rng.normal(0, 5);
        const double uy = rng.uniform();

        double sum_x = 0.0;
        for (Eigen::Index j = 1; j < p; ++j) {
            const double v =
                (varsigma(zx[static_cast<std::size_t>(j)] * sqrt_1m_invp + zu * inv_sqrt_p) -
                 mu_x) /
                sigma_x;
            x[j] = v;
            sum_x += v;
        }
        // The leading covariate aggregates the others plus the shared
        // factor, giving it the densest precision-matrix row.
        x[0] = (varsigma(2.0 * sum_x * inv_sqrt_pm1 + zu / std::sqrt(2.0)) - mu_x) / sigma_x;

        for (Eigen::Index j = 1; j < q; ++j)
            s[j] = (varsigma(zs[static_cast<std::size_t>(j)]) - mu_x) / sigma_x;

        if (cfg.scenario == Scenario::I) {
            double v = 0.0;
            for (Eigen::Index j = 0; j < p; ++j)
                v += alpha[j] * zx[static_cast<std::size_t>(j)];
            y = uy < normal_cdf(v) ? 1.0 : 0.0;
            s[0] = (varsigma(zs[0] / 2.0 + theta * y) - mu_s) / sigma_s + xi.dot(x);
        } else {
            double comb = zu * inv_sqrt_p * alpha_sum;
            for (Eigen::Index j = 0; j < p; ++j)
                comb += alpha[j] * sqrt_1m_invp * zx[static_cast<std::size_t>(j)];
            s[0] = (varsigma(nu * zs[0] + comb) - mu_s) / sigma_s;
            y = uy < expit(theta * s[0]) ? 1.0 : 0.0;
        }
    }
};

} // namespace

void ScenarioConfig::validate() const {
    if (p < 31) throw ConfigError("ScenarioConfig: p must be >= 31 (dense block layout)");
    if (q < 2) throw ConfigError("ScenarioConfig: q must be >= 2");
    if (n < 1 || N <= n) throw ConfigError("ScenarioConfig: need 1 <= n < N");
}

Eigen::Index ScenarioConfig::group_boundary() const {
    return alpha_pattern == AlphaPattern::sparse3 ? 3 : 30;
}

Eigen::VectorXd ScenarioConfig::alpha() const {
    GroupValues v{};
    if (scenario == Scenario::I)
        v = alpha_pattern == AlphaPattern::sparse3 ? GroupValues{0.45, 0.318, 0.0}
                                                   : GroupValues{0.316, 0.059, 0.007};
    else
        v = alpha_pattern == AlphaPattern::sparse3 ? GroupValues{0.3, 0.212, 0.0}
                                                   : GroupValues{0.211, 0.039, 0.004};
    return expand_groups(v, p, group_boundary());
}

Eigen::VectorXd ScenarioConfig::xi() const {
    if (scenario != Scenario::I) throw ConfigError("xi: defined for Scenario I only");
    // Group loadings tuned so the population imputation model concentrates
    // on S_1 (the surrogate absorbs the covariate signal).
    GroupValues v{};
    const bool sparse = alpha_pattern == AlphaPattern::sparse3;
    const bool strong = strength == SurrogateStrength::strong;
    if (sparse && !strong) v = {-0.1184, 3.0296, -0.00151};
    if (sparse && strong) v = {-0.0807, 1.8448, -0.00048};
    if (!sparse && !strong) v = {-1.0101, 0.4835, 0.05311};
    if (!sparse && strong) v = {-0.6240, 0.2987, 0.03278};
    return expand_groups(v, p, group_boundary());
}

double ScenarioConfig::theta() const {
    if (scenario == Scenario::I) return strength == SurrogateStrength::strong ? 1.0 : 0.6;
    return strength == SurrogateStrength::strong ? 3.7 : 2.0;
}

double ScenarioConfig::nu() const {
    if (scenario != Scenario::II) throw ConfigError("nu: defined for Scenario II only");
    return strength == SurrogateStrength::strong ? 0.6 : 0.4;
}

double ScenarioConfig::mu_s() const {
    if (scenario == Scenario::I)
        return alpha_pattern == AlphaPattern::sparse3 ? 1.82 : 2.71;
    const bool sparse = alpha_pattern == AlphaPattern::sparse3;
    const bool strong = strength == SurrogateStrength::strong;
    if (sparse) return strong ? 1.2920 : 1.0044;
    return strong ? 1.2081 : 0.8995;
}

double ScenarioConfig::sigma_s() const {
    if (scenario == Scenario::I)
        return alpha_pattern == AlphaPattern::sparse3 ? 2.01 : 2.68;
    const bool sparse = alpha_pattern == AlphaPattern::sparse3;
    const bool strong = strength == SurrogateStrength::strong;
    if (sparse) return strong ? 1.9748 : 1.5391;
    return strong ? 1.8496 : 1.3798;
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
    ScenarioConfig cfg;
    std::string rest = name;
    auto take = [&rest](const std::string& tok) {
        if (rest.rfind(tok, 0) == 0) {
            rest = rest.substr(tok.size());
            return true;
        }
        return false;
    };
    if (take("I-"))
        cfg.scenario = Scenario::I;
    else if (take("II-"))
        cfg.scenario = Scenario::II;
    else
        throw ConfigError("unknown preset '" + name + "' (expected I-... or II-...)");
    if (take("sparse-"))
        cfg.alpha_pattern = AlphaPattern::sparse3;
    else if (take("dense-"))
        cfg.alpha_pattern = AlphaPattern::dense500;
    else
        throw ConfigError("unknown preset '" + name + "' (expected ...-sparse-... or ...-dense-...)");
    if (rest == "strong")
        cfg.strength = SurrogateStrength::strong;
    else if (rest == "moderate")
        cfg.strength = SurrogateStrength::moderate;
    else
        throw ConfigError("unknown preset '" + name + "' (expected ...-strong or ...-moderate)");
    return cfg;
}

std::string ScenarioConfig::preset_name() const {
    std::string s = scenario == Scenario::I ? "I-" : "II-";
    s += alpha_pattern == AlphaPattern::sparse3 ? "sparse-" : "dense-";
    s += strength == SurrogateStrength::strong ? "strong" : "moderate";
    return s;
}

double approx_sparsity(const Eigen::VectorXd& b) {
    const double l2 = b.squaredNorm();
    if (l2 <= 0.0) throw std::domain_error("approx_sparsity: zero vector");
    const double l1 = b.lpNorm<1>();
    return l1 * l1 / l2;
}

GeneratedData generate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    RowGenerator gen(cfg);
    Rng rng(derive_seed(cfg.seed, kDataTag));

    GeneratedData out;
    const Eigen::Index n = cfg.n;
    const Eigen::Index u = cfg.N - cfg.n;
    out.data.labeled_x.resize(n, cfg.p + 1);
    out.data.labeled_s.resize(n, cfg.q);
    out.data.labeled_y.resize(n);
    out.data.unlabeled_x.resize(u, cfg.p + 1);
    out.data.unlabeled_s.resize(u, cfg.q);
    out.unlabeled_y.resize(u);
    out.data.labeled_x.col(0).setOnes();
    out.data.unlabeled_x.col(0).setOnes();

    double y = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        gen.draw(rng, out.data.labeled_x.row(i).tail(cfg.p), out.data.labeled_s.row(i), y);
        out.data.labeled_y[i] = y;
    }
    for (Eigen::Index i = 0; i < u; ++i) {
        gen.draw(rng, out.data.unlabeled_x.row(i).tail(cfg.p), out.data.unlabeled_s.row(i), y);
        out.unlabeled_y[i] = y;
    }
    return out;
}

TestSet generate_test_set(const ScenarioConfig& cfg, Eigen::Index rows, std::uint64_t seed) {
    cfg.validate();
    RowGenerator gen(cfg);
    Rng rng(derive_seed(seed, kTestTag));
    TestSet ts;
    ts.x.resize(rows, cfg.p + 1);
    ts.x.col(0).setOnes();
    ts.y.resize(rows);
    Eigen::RowVectorXd srow(cfg.q);
    for (Eigen::Index i = 0; i < rows; ++i)
        gen.draw(rng, ts.x.row(i).tail(cfg.p), srow, ts.y[i]);
    return ts;
}

namespace {

// Unpenalized PL fit over column-standardized compressed features; the
// group sums are rescaled so the solver sees comparable column norms.
Eigen::VectorXd compressed_logit_fit(Eigen::MatrixXd design, const Eigen::VectorXd& response,
                                     double tol) {
    const Eigen::Index d = design.cols();
    Eigen::VectorXd scale(d);
    scale[0] = 1.0;
    for (Eigen::Index j = 1; j < d; ++j) {
        const double sd = std::sqrt(design.col(j).squaredNorm() /
                                    static_cast<double>(design.rows()));
        scale[j] = sd > 0.0 ? sd : 1.0;
        design.col(j) /= scale[j];
    }
    PseudoLikContext ctx{std::move(design), response, make_link(LinkKind::logit)};
    SolverOptions opts;
    opts.tolerance = tol;
    opts.max_iterations = 20000;
    PenalizedFit fit = fit_penalized_pl(
        ctx, PenaltySpec{0.0, std::vector<bool>(static_cast<std::size_t>(d), false)}, opts);
    if (!fit.converged)
        throw NumericalError("compressed_logit_fit: oracle fit did not converge");
    return fit.coefficients.array() / scale.array();
}

} // namespace

OracleBeta evaluate_oracle_beta(const ScenarioConfig& cfg, Eigen::Index eval_n,
                                std::uint64_t seed) {
    cfg.validate();
    if (eval_n < 100000)
        throw ConfigError("evaluate_oracle_beta: eval_n must be >= 1e5");
    RowGenerator gen(cfg);
    Rng rng(derive_seed(seed, kOracleTag));
    const Eigen::Index s = cfg.group_boundary();

    Eigen::MatrixXd design(eval_n, 4);
    Eigen::VectorXd response(eval_n);
    Eigen::RowVectorXd xrow(cfg.p), srow(cfg.q);
    double y = 0.0;
    for (Eigen::Index i = 0; i < eval_n; ++i) {
        gen.draw(rng, xrow, srow, y);
        design(i, 0) = 1.0;
        design(i, 1) = xrow[0];
        design(i, 2) = xrow.segment(1, s - 1).sum();
        design(i, 3) = xrow.segment(s, cfg.p - s).sum();
        response[i] = y;
    }
    Eigen::VectorXd eta = compressed_logit_fit(std::move(design), response, 1e-8);

    OracleBeta oracle;
    oracle.eta = {eta[0], eta[1], eta[2], eta[3]};
    oracle.evaluation_sample_size = eval_n;
    oracle.beta0.resize(cfg.p + 1);
    oracle.beta0[0] = eta[0];
    oracle.beta0.segment(1, cfg.p) = expand_groups({eta[1], eta[2], eta[3]}, cfg.p, s);
    return oracle;
}

Eigen::VectorXd evaluate_gamma_proxy(const ScenarioConfig& cfg, Eigen::Index eval_n,
                                     std::uint64_t seed) {
    cfg.validate();
    if (eval_n < 10000)
        throw ConfigError("evaluate_gamma_proxy: eval_n must be >= 1e4");
    RowGenerator gen(cfg);
    Rng rng(derive_seed(seed, kGammaTag));
    const Eigen::Index s = cfg.group_boundary();

    Eigen::MatrixXd design(eval_n, 6);
    Eigen::VectorXd response(eval_n);
    Eigen::RowVectorXd xrow(cfg.p), srow(cfg.q);
    double y = 0.0;
    for (Eigen::Index i = 0; i < eval_n; ++i) {
        gen.draw(rng, xrow, srow, y);
        design(i, 0) = 1.0;
        design(i, 1) = xrow[0];
        design(i, 2) = xrow.segment(1, s - 1).sum();
        design(i, 3) = xrow.segment(s, cfg.p - s).sum();
        design(i, 4) = srow[0];
        design(i, 5) = srow.tail(cfg.q - 1).sum();
        response[i] = y;
    }
    Eigen::VectorXd eta = compressed_logit_fit(std::move(design), response, 1e-7);

    Eigen::VectorXd gamma(cfg.p + cfg.q + 1);
    gamma[0] = eta[0];
    gamma.segment(1, cfg.p) = expand_groups({eta[1], eta[2], eta[3]}, cfg.p, s);
    gamma[cfg.p + 1] = eta[4];
    gamma.tail(cfg.q - 1).setConstant(eta[5]);
    return gamma;
}

XNewKind xnew_kind_from_name(const std::string& name) {
    if (name == "S") return XNewKind::S;
    if (name == "I") return XNewKind::I;
    if (name == "D") return XNewKind::D;
    if (name == "L") return XNewKind::L;
    if (name == "M") return XNewKind::M;
    if (name == "H") return XNewKind::H;
    throw ConfigError("unknown x_new kind '" + name + "' (expected S|I|D|L|M|H)");
}

const char* xnew_kind_name(XNewKind kind) {
    switch (kind) {
        case XNewKind::S: return "S";
        case XNewKind::I: return "I";
        case XNewKind::D: return "D";
        case XNewKind::L: return "L";
        case XNewKind::M: return "M";
        case XNewKind::H: return "H";
    }
    return "?";
}

Eigen::VectorXd make_xnew(XNewKind kind, const ScenarioConfig& cfg, const OracleBeta* oracle,
                          std::uint64_t seed) {
    cfg.validate();
    const Eigen::Index p = cfg.p;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p + 1);
    x[0] = 1.0;
    switch (kind) {
        case XNewKind::S:
            x[1] = 1.0;
            return x;
        case XNewKind::I:
            x.segment(1, 30).setConstant(0.183);
            return x;
        case XNewKind::D:
            x.segment(1, p).setConstant(0.045);
            return x;
        default:
            break;
    }
    if (oracle == nullptr)
        throw ConfigError("make_xnew: L/M/H kinds require the oracle beta0");
    const double target = kind == XNewKind::L ? 0.2 : (kind == XNewKind::M ? 0.5 : 0.7);

    RowGenerator gen(cfg);
    Rng rng(derive_seed(seed, kXnewTag, static_cast<std::uint64_t>(kind)));
    Eigen::RowVectorXd xrow(p), srow(cfg.q);
    double y = 0.0;
    for (int tries = 0; tries < 1000000; ++tries) {
        gen.draw(rng, xrow, srow, y);
        const double risk = expit(oracle->beta0[0] + xrow.dot(oracle->beta0.tail(p)));
        if (std::abs(risk - target) <= 0.02) {
            x.tail(p) = xrow;
            return x;
        }
    }
    throw NumericalError("make_xnew: no candidate within the risk band after 1e6 draws");
}

} // namespace sas
