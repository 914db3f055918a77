#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sas/likelihood.hpp"

namespace sas {

// L1 penalty with a per-coordinate mask; mask=false leaves a coordinate
// unpenalized (the ||._{-1}||_1 convention for intercepts).
struct PenaltySpec {
    double lambda = 0.0;
    std::vector<bool> penalty_mask;

    static PenaltySpec unpenalized_intercept(double lambda, Eigen::Index dim) {
        PenaltySpec p;
        p.lambda = lambda;
        p.penalty_mask.assign(static_cast<std::size_t>(dim), true);
        if (dim > 0) p.penalty_mask[0] = false;
        return p;
    }
    static PenaltySpec all_penalized(double lambda, Eigen::Index dim) {
        PenaltySpec p;
        p.lambda = lambda;
        p.penalty_mask.assign(static_cast<std::size_t>(dim), true);
        return p;
    }
    void validate(Eigen::Index dim) const;
};

struct SolverOptions {
    double tolerance = 1e-6;
    int max_iterations = 10000;
    std::optional<Eigen::VectorXd> warm_start;
    // When set, the penalized objective after each accepted iterate is
    // appended here (used by descent-monotonicity tests).
    std::vector<double>* objective_trace = nullptr;
};

struct PenalizedFit {
    Eigen::VectorXd coefficients;
    double lambda = 0.0;
    double objective_value = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    // Set when the response was constant under a binary-type link; the fit
    // is still valid, the intercept just runs toward the boundary.
    bool warning_constant_response = false;
};

// Proximal map of t|.|: sign(z) * max(|z| - t, 0).
inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// Max violation of the subgradient optimality system at `coeffs`:
// penalized j: |grad_j| <= lambda when coeffs_j = 0, grad_j = -lambda*sign
// otherwise; unpenalized j: grad_j = 0.
double kkt_residual_pl(const PseudoLikContext& ctx, const PenaltySpec& penalty,
                       const Eigen::VectorXd& coeffs);

// Minimizes (1/m) sum_i { G(x_i) - y_i x_i } + lambda * ||coeffs_mask||_1 by
// accelerated proximal gradient with backtracking and monotone restarts.
PenalizedFit fit_penalized_pl(const PseudoLikContext& ctx, const PenaltySpec& penalty,
                              const SolverOptions& opts = {});

// Optimum of the unpenalized coordinates with all penalized coordinates held
// at zero (the "null model"), plus the smallest lambda that keeps every
// penalized coordinate at zero.
struct NullModel {
    Eigen::VectorXd coefficients;
    double lambda_max = 0.0;
};
NullModel fit_null_model(const PseudoLikContext& ctx, const std::vector<bool>& penalty_mask,
                         const SolverOptions& opts = {});

// Log-spaced descending grid from lambda_max down to ratio*lambda_max.
std::vector<double> make_lambda_grid(double lambda_max, int size = 50, double ratio = 0.01);

// Penalized quadratic program of the projection step:
//   min_u  (1/m) sum_i 1/2 w_i (X_i' u)^2  -  u' target  +  lambda_u ||u||_1
// with w_i = g'(beta' X_i) supplied per row and every coordinate penalized.
struct QuadraticProgramSpec {
    Eigen::VectorXd hessian_weights;
    Eigen::MatrixXd design;
    Eigen::VectorXd target;
    double lambda_u = 0.0;
    void validate() const;
};

// Coordinate-descent solver over a precomputed Hessian; reusable across
// several targets (one per x_new direction).
class QuadraticSolver {
public:
    explicit QuadraticSolver(Eigen::MatrixXd hessian);
    QuadraticSolver(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights);

    const Eigen::MatrixXd& hessian() const { return hessian_; }

    PenalizedFit solve(const Eigen::VectorXd& target, double lambda_u,
                       const SolverOptions& opts = {}) const;

    // Accumulate (1/m_total) sum w_i X_i X_i' of a row block into `into`,
    // for Hessians assembled across folds.
    static void accumulate_hessian(Eigen::MatrixXd& into, const Eigen::MatrixXd& design,
                                   const Eigen::VectorXd& weights, double denom);

private:
    Eigen::MatrixXd hessian_;
};

PenalizedFit fit_penalized_quadratic(const QuadraticProgramSpec& spec,
                                     const SolverOptions& opts = {});

double kkt_residual_quadratic(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& target,
                              double lambda_u, const Eigen::VectorXd& coeffs);

// Cross-validated penalty selection: minimizes the mean held-out unpenalized
// PL objective over a descending grid with warm starts; ties break toward
// the larger lambda.
struct CvResult {
    double lambda = 0.0;
    std::size_t index = 0;
    std::vector<double> grid;
    std::vector<double> losses;
};
CvResult select_lambda_cv(const PseudoLikContext& ctx, const std::vector<bool>& penalty_mask,
                          const std::vector<double>& grid, int folds, std::uint64_t seed,
                          const SolverOptions& opts = {});

} // namespace sas
