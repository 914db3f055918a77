#pragma once

#include <string>

#include "sas/math.hpp"
#include "sas/errors.hpp"

namespace sas {

enum class LinkKind { logit, identity, probit };

// Working-model link bundle: mean function g, its derivative g', and the
// antiderivative G with G' = g. g is non-decreasing and g' is bounded by
// sup_g_prime, which solvers use for step-size initialization.
struct LinkSpec {
    LinkKind kind;
    double (*g)(double);
    double (*g_prime)(double);
    double (*G)(double);
    double sup_g_prime;

    const char* name() const {
        switch (kind) {
            case LinkKind::logit: return "logit";
            case LinkKind::identity: return "identity";
            case LinkKind::probit: return "probit";
        }
        return "?";
    }
};

namespace detail {
inline double logit_g(double x) { return expit(x); }
inline double logit_gp(double x) {
    const double m = expit(x);
    return m * (1.0 - m);
}
inline double logit_G(double x) { return softplus(x); }

inline double ident_g(double x) { return x; }
inline double ident_gp(double) { return 1.0; }
inline double ident_G(double x) { return 0.5 * x * x; }

inline double probit_g(double x) { return normal_cdf(x); }
inline double probit_gp(double x) { return normal_pdf(x); }
// Antiderivative of Phi with G(-inf) = 0.
inline double probit_G(double x) { return x * normal_cdf(x) + normal_pdf(x); }
} // namespace detail

inline LinkSpec make_link(LinkKind kind) {
    switch (kind) {
        case LinkKind::logit:
            return {kind, detail::logit_g, detail::logit_gp, detail::logit_G, 0.25};
        case LinkKind::identity:
            return {kind, detail::ident_g, detail::ident_gp, detail::ident_G, 1.0};
        case LinkKind::probit:
            return {kind, detail::probit_g, detail::probit_gp, detail::probit_G,
                    0.3989422804014326779399461};
    }
    throw ConfigError("unknown link kind");
}

inline LinkSpec make_link(const std::string& name) {
    if (name == "logit") return make_link(LinkKind::logit);
    if (name == "identity") return make_link(LinkKind::identity);
    if (name == "probit") return make_link(LinkKind::probit);
    throw ConfigError("unknown link: '" + name + "' (expected logit|identity|probit)");
}

} // namespace sas
