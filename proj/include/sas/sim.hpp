#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "sas/data.hpp"
#include "sas/link.hpp"

namespace sas {

enum class Scenario { I, II };
enum class AlphaPattern { sparse3, dense500 };
enum class SurrogateStrength { moderate, strong };

// Data-generating configuration. Presets carry the published parameter
// patterns; p/q/n/N can be overridden for reduced-scale runs (the alpha and
// xi block patterns stretch with p).
struct ScenarioConfig {
    Scenario scenario = Scenario::I;
    AlphaPattern alpha_pattern = AlphaPattern::sparse3;
    SurrogateStrength strength = SurrogateStrength::strong;
    Eigen::Index p = 500;
    Eigen::Index q = 100;
    Eigen::Index n = 500;
    Eigen::Index N = 20000;
    std::uint64_t seed = 0;

    void validate() const;

    // Group boundary of the exchangeable covariate blocks (paper's s).
    Eigen::Index group_boundary() const;

    Eigen::VectorXd alpha() const;
    Eigen::VectorXd xi() const;    // Scenario I only
    double theta() const;          // I: surrogate shift; II: outcome slope
    double nu() const;             // Scenario II only
    double mu_x() const { return 1.80; }
    double sigma_x() const { return 2.74; }
    double mu_s() const;
    double sigma_s() const;

    // Preset names like "I-sparse-strong", "II-dense-moderate".
    static ScenarioConfig preset(const std::string& name);
    std::string preset_name() const;
};

// Floor of softplus: the zero-inflated discretization applied to latents.
inline double varsigma(double z) {
    if (!std::isfinite(z)) throw std::domain_error("varsigma: non-finite input");
    return std::floor(softplus(z));
}

// ||b||_1^2 / ||b||_2^2, a support-size lower bound: 1 <= S(b) <= ||b||_0.
double approx_sparsity(const Eigen::VectorXd& b);

struct GeneratedData {
    SemiSupervisedData data;
    // Latent outcomes of the unlabeled rows; oracle metrics only, never
    // visible to estimators.
    Eigen::VectorXd unlabeled_y;
};

GeneratedData generate_scenario(const ScenarioConfig& cfg);

// Independent test rows (X with intercept, latent Y) for AUC evaluation.
struct TestSet {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};
TestSet generate_test_set(const ScenarioConfig& cfg, Eigen::Index rows, std::uint64_t seed);

// Population target of the prediction working model, evaluated numerically
// on a large simulated sample through the exchangeable-group compression
// eta0 + eta1*X_1 + eta2*sum(group2) + eta3*sum(group3).
struct OracleBeta {
    Eigen::VectorXd beta0; // p+1 with intercept
    std::array<double, 4> eta{};
    Eigen::Index evaluation_sample_size = 0;
};
OracleBeta evaluate_oracle_beta(const ScenarioConfig& cfg, Eigen::Index eval_n,
                                std::uint64_t seed);

// Large-sample proxy of the population imputation coefficient, through the
// analogous compression with (S_1, remaining surrogates) appended. Returns
// the expanded p+q+1 vector (intercept first).
Eigen::VectorXd evaluate_gamma_proxy(const ScenarioConfig& cfg, Eigen::Index eval_n,
                                     std::uint64_t seed);

enum class XNewKind { S, I, D, L, M, H };
XNewKind xnew_kind_from_name(const std::string& name);
const char* xnew_kind_name(XNewKind kind);

// The six prediction points: deterministic S/I/D patterns, and L/M/H drawn
// from the covariate law until the oracle risk lands in target +- 0.02.
Eigen::VectorXd make_xnew(XNewKind kind, const ScenarioConfig& cfg, const OracleBeta* oracle,
                          std::uint64_t seed);

} // namespace sas
