#include "sas/likelihood.hpp"

namespace sas {

namespace detail {

double pl_objective_lin(const PseudoLikContext& ctx, const Eigen::VectorXd& coeffs,
                        Eigen::VectorXd& lin) {
    lin.noalias() = ctx.design * coeffs;
    const Eigen::Index m = lin.size();
    double acc = 0.0;
    const double* x = lin.data();
    const double* y = ctx.response.data();
    auto G = ctx.link.G;
    for (Eigen::Index i = 0; i < m; ++i) acc += G(x[i]) - y[i] * x[i];
    return acc / static_cast<double>(m);
}

void pl_gradient_lin(const PseudoLikContext& ctx, const Eigen::VectorXd& lin,
                     Eigen::VectorXd& resid, Eigen::VectorXd& grad) {
    const Eigen::Index m = lin.size();
    resid.resize(m);
    auto g = ctx.link.g;
    for (Eigen::Index i = 0; i < m; ++i) resid[i] = g(lin[i]) - ctx.response[i];
    grad.noalias() = ctx.design.transpose() * resid;
    grad /= static_cast<double>(m);
}

} // namespace detail

double pl_objective(const PseudoLikContext& ctx, const Eigen::VectorXd& coeffs) {
    if (coeffs.size() != ctx.design.cols())
        throw ShapeError("pl_objective: coefficient length != design columns");
    Eigen::VectorXd lin;
    const double v = detail::pl_objective_lin(ctx, coeffs, lin);
    if (!std::isfinite(v)) throw NumericalError("pl_objective: non-finite value");
    return v;
}

Eigen::VectorXd pl_gradient(const PseudoLikContext& ctx, const Eigen::VectorXd& coeffs) {
    if (coeffs.size() != ctx.design.cols())
        throw ShapeError("pl_gradient: coefficient length != design columns");
    Eigen::VectorXd lin = ctx.design * coeffs;
    Eigen::VectorXd resid, grad;
    detail::pl_gradient_lin(ctx, lin, resid, grad);
    return grad;
}

} // namespace sas
