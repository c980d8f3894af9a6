#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "banditlab/environment.hpp"
#include "banditlab/errors.hpp"
#include "banditlab/linalg.hpp"

namespace banditlab {

inline constexpr double kDegenerateDirection = 1e-12;

/**
 * Betke-Henk / Kumar-Yildirim point selection with Gram-Schmidt directions.
 *
 * Returns indices into `arms`, in selection order and without repeats. Sets
 * with at most 2d arms are returned whole. Otherwise direction b_i starts from
 * e_i, is orthogonalized against the spread vectors v_j = p_j - q_j found so
 * far, and contributes argmax/argmin_x <b_i, x> (lowest index on ties).
 * Directions that vanish, or along which every arm projects equally, are
 * skipped; the leverage loop in olsoful_warmup completes the rank.
 */
inline std::vector<std::size_t> ky_sampling(const ArmSet& arms) {
    if (arms.size() == 0) throw ContractViolation("ky_sampling: empty arm set");
    const Eigen::Index d = arms[0].size();
    std::vector<std::size_t> selected;
    if (arms.size() <= static_cast<std::size_t>(2 * d)) {
        for (std::size_t i = 0; i < arms.size(); ++i) selected.push_back(i);
        return selected;
    }

    auto add = [&selected](std::size_t idx) {
        if (std::find(selected.begin(), selected.end(), idx) == selected.end()) selected.push_back(idx);
    };

    std::vector<Vector> spread_perp;
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector direction = Vector::Unit(d, i);
        for (const auto& vp : spread_perp) direction -= (vp.dot(direction) / vp.squaredNorm()) * vp;
        if (direction.norm() <= kDegenerateDirection) continue;

        std::size_t p = 0, q = 0;
        double hi = direction.dot(arms[0]), lo = hi;
        for (std::size_t k = 1; k < arms.size(); ++k) {
            const double proj = direction.dot(arms[k]);
            if (proj > hi) { hi = proj; p = k; }
            if (proj < lo) { lo = proj; q = k; }
        }
        const Vector spread = arms[p] - arms[q];
        if (spread.norm() <= kDegenerateDirection) continue;
        add(p);
        add(q);

        Vector perp = spread;
        for (const auto& vp : spread_perp) perp -= (vp.dot(spread) / vp.squaredNorm()) * vp;
        if (perp.norm() > kDegenerateDirection) spread_perp.push_back(perp);
    }
    return selected;
}

struct WarmupResult {
    std::vector<std::size_t> pulls;      ///< KY arms first, then leverage pulls
    std::size_t ky_count = 0;
    std::size_t tau = 0;
    std::optional<double> logdet_tau;    ///< empty if the arms do not span R^d
    double max_leverage = 0.0;           ///< guard value at exit, <= 1
};

/// Upper limit on the warmup length, 10 d ln(d + 2) + 2d.
inline std::size_t warmup_length_guard(Eigen::Index d) {
    const double dd = static_cast<double>(d);
    return static_cast<std::size_t>(std::floor(10.0 * dd * std::log(dd + 2.0) + 2.0 * dd));
}

/// Largest leverage among the arms and its (lowest) index; +infinity for unseen directions.
inline std::pair<std::size_t, double> max_leverage(const ArmSet& arms, const GramState& gram) {
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t k = 0; k < arms.size(); ++k) {
        const double lev = gram.mahalanobis_sq(arms[k]);
        if (lev > best_value) {
            best_value = lev;
            best = k;
        }
    }
    return {best, best_value};
}

/**
 * Two-stage OLSOFUL warmup: pull every KY arm, then keep pulling the arm of
 * largest leverage |x|^2_{Vbar^{-1}} until no arm exceeds 1. The guard is
 * evaluated on a freshly recomputed (pseudo)inverse at every iteration.
 */
inline WarmupResult olsoful_warmup(const ArmSet& arms) {
    WarmupResult result;
    result.pulls = ky_sampling(arms);
    result.ky_count = result.pulls.size();

    const Eigen::Index d = arms[0].size();
    GramState gram(d, 0.0);
    for (const std::size_t idx : result.pulls) gram.update(arms[idx], 0.0);

    const std::size_t guard = warmup_length_guard(d);
    while (true) {
        gram.refresh();
        const auto [idx, lev] = max_leverage(arms, gram);
        if (lev <= 1.0) {
            result.max_leverage = lev;
            break;
        }
        if (result.pulls.size() >= guard)
            throw ContractViolation("olsoful_warmup: warmup exceeded " + std::to_string(guard) +
                                    " pulls without reaching max leverage <= 1");
        result.pulls.push_back(idx);
        gram.update(arms[idx], 0.0);
    }
    result.tau = result.pulls.size();
    result.logdet_tau = gram.logdet();
    return result;
}

}  // namespace banditlab
