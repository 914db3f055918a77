#pragma once

#include <Eigen/Dense>

#include "sas/link.hpp"
#include "sas/errors.hpp"

namespace sas {

// Observations for one pseudo log-likelihood problem. The design carries an
// explicit leading intercept column of ones; the response holds observed or
// imputed outcomes on the link's mean scale.
struct PseudoLikContext {
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
    LinkSpec link;

    Eigen::Index rows() const { return design.rows(); }
    Eigen::Index dim() const { return design.cols(); }

    void validate() const {
        if (design.rows() != response.size())
            throw ShapeError("PseudoLikContext: design rows != response length");
        if (design.rows() == 0)
            throw ShapeError("PseudoLikContext: empty design");
        if ((design.col(0).array() != 1.0).any())
            throw ShapeError("PseudoLikContext: first design column must be all ones");
    }
};

// Pseudo log-likelihood of one observation, l(y, x) = y*x - G(x). Solvers
// minimize its negation averaged over rows.
inline double pl_loss(double y, double x, const LinkSpec& link) {
    if (!std::isfinite(y) || !std::isfinite(x))
        throw std::domain_error("pl_loss: non-finite input");
    return y * x - link.G(x);
}

// Average minimized objective (1/m) sum_i { G(x_i) - y_i x_i } at the given
// coefficients; its stationary point reproduces the GLM moment condition.
double pl_objective(const PseudoLikContext& ctx, const Eigen::VectorXd& coeffs);

// Gradient of pl_objective: (1/m) sum_i row_i { g(x_i) - y_i }.
Eigen::VectorXd pl_gradient(const PseudoLikContext& ctx, const Eigen::VectorXd& coeffs);

namespace detail {
// Buffer-reusing kernels for the solver hot path. `lin` receives the linear
// predictors; `resid` receives g(lin) - y.
double pl_objective_lin(const PseudoLikContext& ctx, const Eigen::VectorXd& coeffs,
                        Eigen::VectorXd& lin);
void pl_gradient_lin(const PseudoLikContext& ctx, const Eigen::VectorXd& lin,
                     Eigen::VectorXd& resid, Eigen::VectorXd& grad);
} // namespace detail

} // namespace sas
