#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "banditlab/confidence.hpp"
#include "banditlab/environment.hpp"
#include "banditlab/errors.hpp"
#include "banditlab/linalg.hpp"
#include "banditlab/schedule.hpp"
#include "banditlab/warmup.hpp"

namespace banditlab {

/**
 * Argmax with configurable tie-breaking. Without a priority list the lowest
 * index wins; otherwise indices listed in `priority` are preferred in that
 * order, followed by the remaining indices in ascending order.
 */
struct TieBreaking {
    std::vector<std::size_t> priority;

    std::size_t argmax(const std::vector<double>& values) const {
        if (values.empty()) throw ContractViolation("argmax over an empty arm set");
        std::optional<std::size_t> best;
        auto consider = [&](std::size_t i) {
            if (i >= values.size()) return;
            if (!best || values[i] > values[*best]) best = i;
        };
        std::vector<bool> seen(values.size(), false);
        for (const std::size_t i : priority) {
            if (i < values.size() && !seen[i]) {
                seen[i] = true;
                consider(i);
            }
        }
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!seen[i]) consider(i);
        return *best;
    }
};

/**
 * Optimistic policy over a finite arm set: each step computes an estimate and
 * a squared radius beta, scores every arm by ucb_value and pulls the argmax.
 * Subclasses supply the radius (and may force choices during a warmup).
 */
class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string_view kind() const = 0;

    /// Chooses the arm for step t = steps() + 1.
    std::size_t select(const ArmSet& arms) {
        if (arms.size() == 0) throw ContractViolation("select: empty arm set");
        const std::size_t t = steps_ + 1;
        ucb_.clear();
        if (const auto forced = forced_choice(t, arms)) {
            ellipsoid_active_ = false;
            beta_ = std::numeric_limits<double>::quiet_NaN();
            return *forced;
        }
        beta_ = prepare(t);
        estimate_ = solve_estimate(gram_);
        ellipsoid_active_ = true;
        ucb_.reserve(arms.size());
        for (const auto& x : arms.arms) ucb_.push_back(ucb_value(x, estimate_, beta_, gram_));
        return tie_.argmax(ucb_);
    }

    void observe(const Vector& x, double y) {
        gram_.update(x, y);
        ++steps_;
    }

    std::size_t steps() const { return steps_; }
    const GramState& gram() const { return gram_; }
    const Estimate& estimate() const { return estimate_; }
    /// Radius used by the last select (NaN for forced warmup pulls).
    double beta() const { return beta_; }
    double lambda() const { return gram_.lambda(); }
    const std::vector<double>& last_ucb() const { return ucb_; }

    /// Ellipsoid used by the last select; empty for forced pulls.
    std::optional<ConfidenceEllipsoid> ellipsoid() const {
        if (!ellipsoid_active_) return std::nullopt;
        return ConfidenceEllipsoid{estimate_.theta_hat, gram_.v(), beta_};
    }

protected:
    Policy(Eigen::Index d, double lambda, TieBreaking tie)
        : gram_(d, lambda), estimate_{Vector::Zero(d), lambda == 0.0}, tie_(std::move(tie)) {}

    virtual double prepare(std::size_t t) = 0;
    virtual std::optional<std::size_t> forced_choice(std::size_t, const ArmSet&) { return std::nullopt; }

    GramState gram_;

private:
    Estimate estimate_;
    TieBreaking tie_;
    std::vector<double> ucb_;
    double beta_ = 0.0;
    bool ellipsoid_active_ = false;
    std::size_t steps_ = 0;
};

/// Fixed-lambda OFUL with a known norm bound S.
class Oful final : public Policy {
public:
    struct Config {
        double lambda = 1.0;
        double s = 1.0;
        double r = 1.0;
        double delta = 0.01;
        TieBreaking tie{};
    };

    Oful(Eigen::Index d, Config config) : Policy(d, check(config).lambda, config.tie), config_(config) {}

    std::string_view kind() const override { return "oful"; }
    const Config& config() const { return config_; }

private:
    static const Config& check(const Config& c) {
        if (!(c.lambda > 0.0)) throw ConfigError("oful: lambda must be > 0");
        if (!(c.s >= 0.0)) throw ConfigError("oful: S must be >= 0");
        if (!(c.r >= 0.0)) throw ConfigError("oful: R must be >= 0");
        detail::require_open_unit(c.delta, "oful");
        return c;
    }

    double prepare(std::size_t) override { return oful_beta(gram_, config_.lambda, config_.delta, config_.r, config_.s); }

    Config config_;
};

/// Norm-agnostic OFUL: decaying lambda_t and an S-free radius.
class Naoful final : public Policy {
public:
    struct Config {
        LambdaSchedule schedule = LambdaSchedule::poly_decay(1.0, 1.0, 1);
        double r = 1.0;
        double delta = 0.01;
        /// false replaces delta_t by delta (reduces to OFUL under a constant schedule)
        bool union_bound = true;
        TieBreaking tie{};
    };

    Naoful(Eigen::Index d, Config config)
        : Policy(d, check(config).schedule(1), config.tie), config_(std::move(config)), d_(static_cast<int>(d)) {}

    std::string_view kind() const override { return "naoful"; }
    const Config& config() const { return config_; }
    /// Number of dense rebases performed so far.
    std::size_t rebase_count() const { return rebases_; }

private:
    static const Config& check(const Config& c) {
        if (!(c.r > 0.0)) throw ConfigError("naoful: R must be > 0");
        detail::require_open_unit(c.delta, "naoful");
        return c;
    }

    double prepare(std::size_t t) override {
        const double lambda_t = config_.schedule(t);
        if (lambda_t != gram_.lambda()) {
            gram_.rebase(lambda_t);
            ++rebases_;
        }
        return naoful_beta(gram_, lambda_t, t, config_.delta, config_.r, d_, config_.union_bound);
    }

    Config config_;
    int d_;
    std::size_t rebases_ = 0;
};

/// Unregularized OFUL with the minimum-norm OLS estimate; out-of-range arms score +infinity.
class Oful0 final : public Policy {
public:
    struct Config {
        double r = 1.0;
        double delta = 0.01;
        TieBreaking tie{};
    };

    Oful0(Eigen::Index d, Config config) : Policy(d, 0.0, check(config).tie), config_(config), d_(static_cast<int>(d)) {}

    std::string_view kind() const override { return "oful0"; }

private:
    static const Config& check(const Config& c) {
        if (!(c.r >= 0.0)) throw ConfigError("oful0: R must be >= 0");
        detail::require_open_unit(c.delta, "oful0");
        return c;
    }

    double prepare(std::size_t t) override { return oful0_beta(t, config_.delta, config_.r, d_); }

    Config config_;
    int d_;
};

/// Fixed-arm-set OLS OFUL: KY warmup, leverage warmup, then optimism with the OLS radius.
class Olsoful final : public Policy {
public:
    enum class Phase { ky, leverage, main };

    struct Config {
        double r = 1.0;
        double delta = 0.01;
        TieBreaking tie{};
    };

    Olsoful(const ArmSet& arms, Config config)
        : Policy(check(arms, config), 0.0, config.tie), config_(config), arm_count_(arms.size()),
          warmup_(olsoful_warmup(arms)), d_(static_cast<int>(arms[0].size())) {}

    std::string_view kind() const override { return "olsoful"; }
    const WarmupResult& warmup() const { return warmup_; }
    std::size_t tau() const { return warmup_.tau; }

    /// Phase of the next step.
    Phase phase() const {
        const std::size_t next = steps();
        if (next < warmup_.ky_count) return Phase::ky;
        if (next < warmup_.tau) return Phase::leverage;
        return Phase::main;
    }

private:
    static Eigen::Index check(const ArmSet& arms, const Config& c) {
        if (arms.size() == 0) throw ConfigError("olsoful: empty arm set");
        if (!(c.r >= 0.0)) throw ConfigError("olsoful: R must be >= 0");
        detail::require_open_unit(c.delta, "olsoful");
        return arms[0].size();
    }

    std::optional<std::size_t> forced_choice(std::size_t t, const ArmSet& arms) override {
        if (arms.size() != arm_count_) throw ContractViolation("olsoful: arm set changed");
        if (t <= warmup_.tau) return warmup_.pulls[t - 1];
        return std::nullopt;
    }

    double prepare(std::size_t) override {
        if (!warmup_.logdet_tau)
            throw ContractViolation("olsoful: arms do not span R^d, Vbar_tau is singular");
        return olsoful_beta(gram_, *warmup_.logdet_tau, config_.delta, config_.r, d_);
    }

    Config config_;
    std::size_t arm_count_;
    WarmupResult warmup_;
    int d_;
};

}  // namespace banditlab
