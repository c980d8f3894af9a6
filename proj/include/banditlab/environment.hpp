#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "banditlab/errors.hpp"
#include "banditlab/linalg.hpp"

namespace banditlab {

using Rng = std::mt19937_64;

inline constexpr double kArmNormSlack = 1e-12;

/// Arms available at one step, in a fixed order (index-based tie-breaking depends on it).
struct ArmSet {
    std::vector<Vector> arms;
    std::size_t t = 0;

    std::size_t size() const { return arms.size(); }
    const Vector& operator[](std::size_t i) const { return arms[i]; }
};

/// X_t = {(1,0), (0, min(cap, scale * growth^t))}.
struct GrowingSecondArm {
    double scale = 1e-10;
    double growth = 1.5;
    double cap = 1.0;

    double second_coordinate(std::size_t t) const {
        return std::min(cap, scale * std::pow(growth, static_cast<double>(t)));
    }
};

struct FixedArms {
    std::vector<Vector> arms;
};

class Environment {
public:
    using ArmSource = std::variant<GrowingSecondArm, FixedArms>;

    Environment(std::string id, Vector theta_star, double noise_r, ArmSource source,
                std::size_t horizon = 100)
        : id_(std::move(id)), theta_star_(std::move(theta_star)), noise_r_(noise_r),
          source_(std::move(source)), horizon_(horizon) {
        if (!(noise_r_ >= 0.0)) throw ConfigError("environment " + id_ + ": noise level must be >= 0");
        if (horizon_ < 1) throw ConfigError("environment " + id_ + ": horizon must be >= 1");
        if (const auto* fixed = std::get_if<FixedArms>(&source_)) {
            if (fixed->arms.empty()) throw ConfigError("environment " + id_ + ": arm set is empty");
            for (const auto& x : fixed->arms) {
                if (x.size() != theta_star_.size())
                    throw ConfigError("environment " + id_ + ": arm dimension does not match theta_star");
                if (x.norm() > 1.0 + kArmNormSlack)
                    throw ConfigError("environment " + id_ + ": arm with norm > 1");
            }
        } else if (theta_star_.size() != 2) {
            throw ConfigError("environment " + id_ + ": growing-arm instances are two-dimensional");
        }
    }

    const std::string& id() const { return id_; }
    const Vector& theta_star() const { return theta_star_; }
    Eigen::Index dim() const { return theta_star_.size(); }
    double noise_r() const { return noise_r_; }
    double s_star() const { return theta_star_.norm(); }
    std::size_t horizon() const { return horizon_; }
    double reward_shift() const { return reward_shift_; }
    void set_reward_shift(double shift) { reward_shift_ = shift; }
    void set_horizon(std::size_t horizon) { horizon_ = horizon; }
    const ArmSource& source() const { return source_; }

    bool has_fixed_arms() const { return std::holds_alternative<FixedArms>(source_); }

    ArmSet arm_set_at(std::size_t t) const {
        if (t < 1) throw ContractViolation("arm_set_at: t must be >= 1");
        if (const auto* fixed = std::get_if<FixedArms>(&source_)) return ArmSet{fixed->arms, t};
        const auto& growing = std::get<GrowingSecondArm>(source_);
        Vector a1(2), a2(2);
        a1 << 1.0, 0.0;
        a2 << 0.0, growing.second_coordinate(t);
        return ArmSet{{a1, a2}, t};
    }

    /// Noisy reward x^T theta* + shift + R z with z ~ N(0,1). One normal is always drawn.
    double sample_reward(const Vector& x, Rng& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        const double z = normal(rng);
        return x.dot(theta_star_) + reward_shift_ + noise_r_ * z;
    }

    double best_value(std::size_t t) const {
        const ArmSet arms = arm_set_at(t);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& x : arms.arms) best = std::max(best, x.dot(theta_star_));
        return best;
    }

    std::size_t best_arm_index(std::size_t t) const {
        const ArmSet arms = arm_set_at(t);
        std::size_t best = 0;
        for (std::size_t i = 1; i < arms.size(); ++i)
            if (arms[i].dot(theta_star_) > arms[best].dot(theta_star_)) best = i;
        return best;
    }

    /// Noiseless gap max_{x' in X_t} <x', theta*> - <x, theta*>; x must belong to X_t.
    double instantaneous_regret(std::size_t t, const Vector& x) const {
        const ArmSet arms = arm_set_at(t);
        const bool member = std::any_of(arms.arms.begin(), arms.arms.end(), [&](const Vector& a) {
            return a.size() == x.size() && (a.array() == x.array()).all();
        });
        if (!member) throw ContractViolation("instantaneous_regret: arm is not in X_t");
        return best_value(t) - x.dot(theta_star_);
    }

private:
    std::string id_;
    Vector theta_star_;
    double noise_r_;
    ArmSource source_;
    std::size_t horizon_;
    double reward_shift_ = 0.0;
};

/// The three synthetic two-arm instances "a", "b", "c" (unit Gaussian noise).
inline Environment make_table2_instance(std::string_view name, std::size_t horizon = 100) {
    GrowingSecondArm growing{1e-10, 1.5, 1.0};
    Vector theta(2);
    if (name == "a") {
        theta << 1.0, 0.0;
    } else if (name == "b") {
        theta << 1.0, 100.0;
    } else if (name == "c") {
        growing.cap = 0.05;
        theta << 1.0, 100.0;
    } else {
        throw ConfigError("unknown instance '" + std::string(name) + "' (expected a, b or c)");
    }
    return Environment(std::string(name), theta, 1.0, growing, horizon);
}

/// Noiseless canonical-basis instance with theta* = s_star * e_d.
inline Environment make_appendixA_instance(Eigen::Index d, double s_star, std::size_t horizon = 100) {
    if (d < 2) throw ConfigError("appendixA instance needs d >= 2");
    if (!(s_star > 0.0)) throw ConfigError("appendixA instance needs s_star > 0");
    FixedArms arms;
    for (Eigen::Index i = 0; i < d; ++i) arms.arms.push_back(Vector::Unit(d, i));
    return Environment("appendixA", s_star * Vector::Unit(d, d - 1), 0.0, arms, horizon);
}

/// Points drawn uniformly on the unit sphere in R^d.
inline std::vector<Vector> random_sphere_arms(std::size_t count, Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vector> arms;
    arms.reserve(count);
    while (arms.size() < count) {
        Vector x(d);
        for (Eigen::Index i = 0; i < d; ++i) x(i) = normal(rng);
        const double n = x.norm();
        if (n == 0.0) continue;
        arms.push_back(x / n);
    }
    return arms;
}

/// Fixed random spherical arm set with a random theta* of the requested norm.
inline Environment make_random_sphere_instance(std::string id, std::size_t n_arms, Eigen::Index d,
                                               double theta_norm, double noise_r, std::uint64_t seed,
                                               std::size_t horizon = 100) {
    Rng rng(seed);
    FixedArms arms{random_sphere_arms(n_arms, d, rng)};
    Vector theta = random_sphere_arms(1, d, rng).front() * theta_norm;
    return Environment(std::move(id), theta, noise_r, std::move(arms), horizon);
}

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a, used to turn instance/algorithm labels into stable ids.
inline std::uint64_t stable_id(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t instance_id,
                              std::uint64_t algorithm_id, std::uint64_t repetition) {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ instance_id);
    h = mix64(h ^ algorithm_id);
    return mix64(h ^ repetition);
}

struct StepRecord {
    std::size_t t = 0;
    std::size_t arm_index = 0;
    Vector x;
    double reward = 0.0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
    std::optional<bool> covered;
};

struct RegretTrace {
    std::string instance;
    std::string algorithm;
    std::uint64_t seed = 0;
    std::size_t repetition = 0;
    std::vector<StepRecord> steps;

    double final_regret() const { return steps.empty() ? 0.0 : steps.back().cum_regret; }
};

}  // namespace banditlab
