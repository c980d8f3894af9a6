#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "banditlab/confidence.hpp"
#include "banditlab/errors.hpp"
#include "banditlab/linalg.hpp"
#include "banditlab/schedule.hpp"

namespace banditlab {

/// Relative slack on lambda_t S*^2 <= R^2 d so that exact boundary cases (S* = t^{alpha/2}) count as met.
inline constexpr double kT0RelativeSlack = 1e-12;
/// Metric slack for ellipsoid membership.
inline constexpr double kCoverageSlack = 1e-9;

namespace detail {
inline bool t0_condition(const LambdaSchedule& schedule, std::uint64_t t, double s_star, double r, int d) {
    return schedule(t) * s_star * s_star <= r * r * static_cast<double>(d) * (1.0 + kT0RelativeSlack);
}
}  // namespace detail

/**
 * t0 = min{t >= 1 : sqrt(lambda_t) S* <= R sqrt(d)}; empty means never (within 2^62).
 * The condition is monotone in t for nonincreasing schedules, so a doubling
 * search followed by bisection finds the first t exactly.
 */
inline std::optional<std::uint64_t> t0_for_schedule(const LambdaSchedule& schedule, double s_star, double r, int d) {
    if (detail::t0_condition(schedule, 1, s_star, r, d)) return 1;
    constexpr std::uint64_t limit = std::uint64_t{1} << 62;
    std::uint64_t lo = 1, hi = 2;
    while (!detail::t0_condition(schedule, hi, s_star, r, d)) {
        if (hi >= limit) return std::nullopt;
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (detail::t0_condition(schedule, mid, s_star, r, d))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/**
 * Closed-form t0 for schedules whose scale is R^2 d:
 *   log_decay   ceil(exp(S*^{2/gamma}) - 1)
 *   poly_decay  ceil(S*^{2/alpha})
 *   exp_decay   ceil(ln^{1/q}(S*^2))
 *   piecewise   ceil(exp(ceil(2 ln S*) / alpha))
 * clamped to at least 1. Constant schedules have none.
 */
inline std::optional<std::uint64_t> t0_closed_form(const LambdaSchedule& schedule, double s_star) {
    const double target = s_star * s_star / (1.0 + kT0RelativeSlack);
    auto clamp_ceil = [](double x) -> std::optional<std::uint64_t> {
        if (!std::isfinite(x) || x > 4.6e18) return std::nullopt;
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(x)));
    };
    const double p = schedule.param;
    switch (schedule.kind) {
        case ScheduleKind::constant: return std::nullopt;
        case ScheduleKind::log_decay: return clamp_ceil(std::expm1(std::pow(target, 1.0 / p)));
        case ScheduleKind::poly_decay:
            if (p == 0.0) return target <= 1.0 ? std::optional<std::uint64_t>(1) : std::nullopt;
            return clamp_ceil(std::pow(target, 1.0 / p));
        case ScheduleKind::exp_decay:
            if (target <= 1.0) return 1;
            return clamp_ceil(std::pow(std::log(target), 1.0 / p));
        case ScheduleKind::piecewise_poly: {
            if (target <= 1.0) return 1;
            if (p == 0.0) return std::nullopt;
            return clamp_ceil(std::exp(std::ceil(std::log(target)) / p));
        }
    }
    return std::nullopt;
}

/// Bound (2d / ln 2) ln(1 + 1 / (lambda ln 2)) on the number of steps with leverage > 1.
inline double epc_bound(int d, double lambda) {
    if (!(lambda > 0.0)) throw ContractViolation("epc_bound: lambda must be > 0");
    const double ln2 = std::numbers::ln2;
    return (2.0 * d / ln2) * std::log1p(1.0 / (lambda * ln2));
}

/// Standard elliptical potential bound 2d ln(1 + T / (d lambda)).
inline double elliptical_potential_bound(int d, std::size_t horizon, double lambda) {
    return 2.0 * d * std::log1p(static_cast<double>(horizon) / (d * lambda));
}

struct PotentialCount {
    std::size_t count = 0;       ///< steps with |x_t|^2_{V_{t-1}^{-1}} > 1
    double unflagged_sum = 0.0;  ///< sum of the leverages that are <= 1
};

/// Walks the sequence once with V_{t-1}(lambda) containing every earlier vector.
inline PotentialCount elliptical_potential(const std::vector<Vector>& xs, double lambda) {
    if (!(lambda > 0.0)) throw ContractViolation("elliptical_potential: lambda must be > 0");
    PotentialCount out;
    if (xs.empty()) return out;
    GramState gram(xs.front().size(), lambda);
    for (const auto& x : xs) {
        const double lev = gram.mahalanobis_sq(x);
        if (lev > 1.0)
            ++out.count;
        else
            out.unflagged_sum += lev;
        gram.update(x, 0.0);
    }
    return out;
}

inline std::size_t epc_count(const std::vector<Vector>& xs, double lambda) {
    return elliptical_potential(xs, lambda).count;
}

/// The 19-point grid {0.05, ..., 0.95} standing in for the infimum over eta in (0,1).
inline constexpr std::array<double, 19> kEtaGrid = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50,
                                                    0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};

/**
 * Upper bound on X implied by X <= a ln(1 + b X):
 *   min_eta (1 / (1 - eta)) a ln((a / (2 eta)) (1/X + b)).
 * The witness must be positive and satisfy the implicit inequality.
 */
inline double solve_implicit_log(double a, double b, double x_witness) {
    if (!(a > 0.0) || !(b > 0.0) || !(x_witness > 0.0))
        throw ContractViolation("solve_implicit_log: a, b and the witness must be positive");
    if (x_witness > a * std::log1p(b * x_witness) * (1.0 + 1e-12))
        throw ContractViolation("solve_implicit_log: witness violates X <= a ln(1 + bX)");
    double best = std::numeric_limits<double>::infinity();
    for (const double eta : kEtaGrid) {
        const double value = a * std::log((a / (2.0 * eta)) * (1.0 / x_witness + b)) / (1.0 - eta);
        best = std::min(best, value);
    }
    return best;
}

/**
 * High-probability NAOFUL regret bound evaluated at every horizon t = 1..T.
 * For t < t0 every step may cost 2 S*, giving 2 t S*. From t0 on:
 *   2 (t0 - 1) S*
 *   + 2 sqrt(n betabar_t) sqrt(2d ln(1 + n / (d lambda_t)))
 *   + 4 S* (d / ln 2) ln(1 + 1 / (lambda_t ln 2)),
 * with n = t - (t0 - 1) and
 *   sqrt(betabar_t) = R sqrt(2d ln(t^2 pi^2 (1 + t / lambda_t) / (6 delta))) + R sqrt(d).
 */
inline std::vector<double> naoful_regret_bound(const LambdaSchedule& schedule, double s_star, double r, int d,
                                               double delta, std::size_t horizon) {
    if (horizon < 1) throw ContractViolation("naoful_regret_bound: horizon must be >= 1");
    detail::require_open_unit(delta, "naoful_regret_bound");
    const auto t0 = t0_for_schedule(schedule, s_star, r, d);
    const double dd = static_cast<double>(d);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    std::vector<double> bound(horizon);
    for (std::size_t t = 1; t <= horizon; ++t) {
        const double tt = static_cast<double>(t);
        if (!t0 || t < *t0) {
            bound[t - 1] = 2.0 * tt * s_star;
            continue;
        }
        const double head = 2.0 * static_cast<double>(*t0 - 1) * s_star;
        const double n = tt - static_cast<double>(*t0 - 1);
        const double lambda = schedule(t);
        const double sqrt_beta =
            r * std::sqrt(2.0 * dd * std::log(tt * tt * pi2 * (1.0 + tt / lambda) / (6.0 * delta))) + r * std::sqrt(dd);
        const double body = 2.0 * std::sqrt(n) * sqrt_beta * std::sqrt(2.0 * dd * std::log1p(n / (dd * lambda)));
        const double tail = 4.0 * s_star * (dd / std::numbers::ln2) * std::log1p(1.0 / (lambda * std::numbers::ln2));
        bound[t - 1] = head + body + tail;
    }
    return bound;
}

inline bool coverage_check(const Vector& theta_star, const ConfidenceEllipsoid& ell) {
    return ell.distance(theta_star) <= std::sqrt(std::max(0.0, ell.radius_sq)) + kCoverageSlack;
}

/// lambda_t |theta*|_{V_t(lambda_t)^{-1}} <= R sqrt(d).
inline bool t0_prime_holds(double lambda_t, const Matrix& v_inv, const Vector& theta_star, double r, int d) {
    const double norm = std::sqrt(std::max(0.0, theta_star.dot(v_inv * theta_star)));
    return lambda_t * norm <= r * std::sqrt(static_cast<double>(d));
}

struct GramSnapshot {
    double lambda = 0.0;
    Matrix v_inv;
};

/// First t (1-based) along the trajectory at which t0_prime_holds; empty if never.
inline std::optional<std::size_t> t0_prime_diagnostic(const std::vector<GramSnapshot>& snapshots,
                                                      const Vector& theta_star, double r, int d) {
    for (std::size_t i = 0; i < snapshots.size(); ++i)
        if (t0_prime_holds(snapshots[i].lambda, snapshots[i].v_inv, theta_star, r, d)) return i + 1;
    return std::nullopt;
}

}  // namespace banditlab
