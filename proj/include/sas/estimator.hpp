#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sas/data.hpp"
#include "sas/solver.hpp"

namespace sas {

// Penalty-level directive for one of the three penalized problems: a fixed
// value, 5-fold-style cross-validation over a lambda_max-anchored grid, or
// the rate-order anchor c * sqrt(log(dim)/rows).
struct LambdaRule {
    enum class Mode { fixed, cv, anchored } mode = Mode::cv;
    double value = 0.0; // fixed lambda, or the anchor constant c

    static LambdaRule fixed(double v) { return {Mode::fixed, v}; }
    static LambdaRule cv() { return {Mode::cv, 0.0}; }
    static LambdaRule anchored(double c) { return {Mode::anchored, c}; }
};

struct CrossFitOptions {
    int K = 5;
    std::uint64_t seed = 0;
    LambdaRule lambda_gamma = LambdaRule::cv();
    LambdaRule lambda_beta = LambdaRule::cv();
    LambdaRule lambda_u = LambdaRule::anchored(0.5);
    int cv_folds = 5;
    int cv_grid_size = 50;
    SolverOptions solver;
};

// Step (i): L1-penalized imputation fit of Y on W = (X, S) over the labeled
// block, intercept unpenalized.
PenalizedFit fit_imputation(const SemiSupervisedData& data, const LinkSpec& link,
                            double lambda_gamma, const SolverOptions& opts = {});

// Imputed outcomes g(gamma' W_i) over the unlabeled block.
Eigen::VectorXd impute_outcomes(const Eigen::VectorXd& gamma, const SemiSupervisedData& data,
                                const LinkSpec& link);

// Step (ii): penalized fit of the target model over all N rows, true Y on
// labeled rows and g(gamma' W) on unlabeled rows, each weighted 1/N.
PenalizedFit fit_target(const SemiSupervisedData& data, const Eigen::VectorXd& gamma,
                        const LinkSpec& link, double lambda_beta,
                        const SolverOptions& opts = {});

// All cross-fitted nuisance fits shared by every x_new direction: per-fold
// gamma/beta fits, pairwise-exclusion fits, and the per-fold quadratic
// solvers over the fold-complement Hessians.
struct CrossFitCore {
    FoldPartition partition;
    LinkSpec link;
    bool supervised = false;

    PenalizedFit gamma_full; // empty coefficients when supervised
    PenalizedFit beta_full;

    std::vector<PenalizedFit> gamma_k;
    std::vector<PenalizedFit> beta_k;
    std::vector<PenalizedFit> gamma_kk; // unordered pairs, see pair_index
    std::vector<PenalizedFit> beta_kk;

    std::vector<QuadraticSolver> hessians; // one per fold k over folds k' != k

    double lambda_gamma = 0.0;
    double lambda_beta = 0.0;
    double lambda_u = 0.0;

    static std::size_t pair_index(int k, int l, int K) {
        if (k > l) std::swap(k, l);
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(K) -
               static_cast<std::size_t>(k * (k + 1) / 2) + static_cast<std::size_t>(l - k - 1);
    }
    const PenalizedFit& beta_pair(int k, int l) const {
        return beta_kk[pair_index(k, l, partition.K)];
    }

    bool all_converged() const;
};

CrossFitCore fit_crossfit_core(const SemiSupervisedData& data, const LinkSpec& link,
                               const CrossFitOptions& opts);

// One x_new direction on top of a shared core: x_std = x_new/||x_new||_2 and
// the per-fold projection fits u_k.
struct CrossFitBundle {
    const CrossFitCore* core = nullptr;
    Eigen::VectorXd x_new;
    Eigen::VectorXd x_std;
    std::vector<PenalizedFit> u_k;
};

CrossFitBundle bundle_for_xnew(const CrossFitCore& core, const Eigen::VectorXd& x_new,
                               const SolverOptions& opts = {});

// Spec-level convenience: core plus the single x_new direction in one call.
struct OwningCrossFitBundle {
    std::shared_ptr<CrossFitCore> core;
    CrossFitBundle bundle;
};
OwningCrossFitBundle fit_crossfit_bundle(const SemiSupervisedData& data, const LinkSpec& link,
                                         const Eigen::VectorXd& x_new,
                                         const CrossFitOptions& opts);

// Cross-fitted one-step debiased estimator of x_std' beta_0.
double debiased_estimate(const CrossFitBundle& bundle, const SemiSupervisedData& data);

// Variance estimator paired with debiased_estimate.
double variance_estimate(const CrossFitBundle& bundle, const SemiSupervisedData& data);

struct PredictionInterval {
    double theta_hat = 0.0;
    double v_hat = 0.0;
    double alpha = 0.05;
    std::pair<double, double> ci_linear;   // on the ||x_new||_2 * x_std'beta scale
    std::pair<double, double> ci_response; // after the link map
    double point_response = 0.0;
};

PredictionInterval confidence_interval(double theta_hat, double v_hat,
                                       const Eigen::VectorXd& x_new, Eigen::Index n,
                                       double alpha, const LinkSpec& link);

inline double point_predict(const Eigen::VectorXd& beta, const Eigen::VectorXd& x_new,
                            const LinkSpec& link) {
    if (beta.size() != x_new.size())
        throw ShapeError("point_predict: dimension mismatch");
    return link.g(beta.dot(x_new));
}

} // namespace sas
