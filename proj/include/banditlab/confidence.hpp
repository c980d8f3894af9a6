#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>

#include "banditlab/errors.hpp"
#include "banditlab/linalg.hpp"

namespace banditlab {

/// {theta : |center - theta|_shape <= sqrt(radius_sq)}
struct ConfidenceEllipsoid {
    Vector center;
    Matrix shape;
    double radius_sq = 0.0;

    double distance(const Vector& theta) const {
        const Vector diff = center - theta;
        return std::sqrt(std::max(0.0, diff.dot(shape * diff)));
    }
};

namespace detail {
inline void require_open_unit(double delta, const char* who) {
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError(std::string(who) + ": delta must lie in (0,1)");
}
inline double sqrt_clamped(double v) { return std::sqrt(std::max(0.0, v)); }
}  // namespace detail

/// Optimistic value max_{theta in C} <x, theta> = <x, theta_hat> + sqrt(beta) |x|_{V^{-1}}.
inline double ucb_value(const Vector& x, const Estimate& est, double beta, const GramState& gram) {
    const double lev = gram.mahalanobis_sq(x);
    if (std::isinf(lev)) return std::numeric_limits<double>::infinity();
    return x.dot(est.theta_hat) + std::sqrt(std::max(0.0, beta)) * std::sqrt(lev);
}

/// OFUL radius (R sqrt(ln(|V| / (|lambda I| delta^2))) + sqrt(lambda) S)^2.
inline double oful_beta(const GramState& gram, double lambda, double delta, double r, double s) {
    detail::require_open_unit(delta, "oful_beta");
    if (!(lambda > 0.0) || gram.lambda() != lambda)
        throw ContractViolation("oful_beta: gram must be built with the given lambda > 0");
    const double d = static_cast<double>(gram.dim());
    const double log_ratio = gram.logdet_or_throw() - d * std::log(lambda) - 2.0 * std::log(delta);
    const double root = r * detail::sqrt_clamped(log_ratio) + std::sqrt(lambda) * s;
    return root * root;
}

/// delta_t = 6 delta / (pi^2 t^2), so that sum_t delta_t = delta.
inline double union_bound_delta(double delta, std::size_t t) {
    const double tt = static_cast<double>(t);
    return 6.0 * delta / (std::numbers::pi * std::numbers::pi * tt * tt);
}

/**
 * Norm-agnostic radius (R sqrt(ln(|V(lambda_t)| / (lambda_t^d delta_t^2))) + R sqrt(d))^2.
 * With `union_bound == false` delta_t is replaced by delta itself.
 */
inline double naoful_beta(const GramState& gram, double lambda_t, std::size_t t, double delta, double r,
                          int d, bool union_bound = true) {
    detail::require_open_unit(delta, "naoful_beta");
    if (t < 1) throw ContractViolation("naoful_beta: t must be >= 1");
    if (!(lambda_t > 0.0) || gram.lambda() != lambda_t)
        throw ContractViolation("naoful_beta: gram must be rebased to lambda_t > 0");
    const double delta_t = union_bound ? union_bound_delta(delta, t) : delta;
    const double dd = static_cast<double>(d);
    const double log_ratio = gram.logdet_or_throw() - dd * std::log(lambda_t) - 2.0 * std::log(delta_t);
    const double root = r * detail::sqrt_clamped(log_ratio) + r * std::sqrt(dd);
    return root * root;
}

/// OLS radius 8 R^2 (d ln 6 + ln(pi^2 t^2 / (6 delta))). Accepts any delta > 0.
inline double oful0_beta(std::size_t t, double delta, double r, int d) {
    if (!(delta > 0.0)) throw ConfigError("oful0_beta: delta must be > 0");
    if (t < 1) throw ContractViolation("oful0_beta: t must be >= 1");
    const double tt = static_cast<double>(t);
    const double inner = static_cast<double>(d) * std::log(6.0) +
                         std::log(std::numbers::pi * std::numbers::pi * tt * tt / (6.0 * delta));
    return 8.0 * r * r * inner;
}

/**
 * Post-warmup OLS radius
 *   (R (sqrt(ln(|Vbar_t| / (|Vbar_tau| delta^2))) + sqrt(d ln 4 + 4 ln(1/delta))))^2.
 * Accepts delta in (0,1].
 */
inline double olsoful_beta(const GramState& gram, double logdet_tau, double delta, double r, int d) {
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("olsoful_beta: delta must lie in (0,1]");
    const auto logdet = gram.logdet();
    if (!logdet) throw ContractViolation("olsoful_beta: Gram matrix is singular (warmup incomplete)");
    const double log_inv_delta = -std::log(delta);
    const double first = detail::sqrt_clamped(*logdet - logdet_tau + 2.0 * log_inv_delta);
    const double second = std::sqrt(static_cast<double>(d) * std::log(4.0) + 4.0 * log_inv_delta);
    const double root = r * (first + second);
    return root * root;
}

}  // namespace banditlab
