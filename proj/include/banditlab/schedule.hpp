#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "banditlab/errors.hpp"

namespace banditlab {

enum class ScheduleKind { constant, log_decay, poly_decay, exp_decay, piecewise_poly };

/**
 * Nonincreasing regularizer sequence t -> lambda_t used by NAOFUL.
 *
 *   constant        lambda
 *   log_decay       R^2 d / ln^gamma(1 + t)
 *   poly_decay      R^2 d / t^alpha
 *   exp_decay       R^2 d / exp(t^q)
 *   piecewise_poly  R^2 d * exp(-floor(alpha ln t))
 *
 * `param` holds lambda, gamma, alpha or q depending on the kind.
 */
struct LambdaSchedule {
    ScheduleKind kind = ScheduleKind::poly_decay;
    double param = 1.0;
    double r = 1.0;
    int d = 1;

    static LambdaSchedule constant(double lambda) { return checked({ScheduleKind::constant, lambda, 1.0, 1}); }
    static LambdaSchedule log_decay(double gamma, double r, int d) { return checked({ScheduleKind::log_decay, gamma, r, d}); }
    static LambdaSchedule poly_decay(double alpha, double r, int d) { return checked({ScheduleKind::poly_decay, alpha, r, d}); }
    static LambdaSchedule exp_decay(double q, double r, int d) { return checked({ScheduleKind::exp_decay, q, r, d}); }
    static LambdaSchedule piecewise_poly(double alpha, double r, int d) { return checked({ScheduleKind::piecewise_poly, alpha, r, d}); }

    double scale() const { return r * r * static_cast<double>(d); }

    double operator()(std::size_t t) const {
        if (t < 1) throw ContractViolation("LambdaSchedule: t must be >= 1");
        const double tt = static_cast<double>(t);
        switch (kind) {
            case ScheduleKind::constant: return param;
            case ScheduleKind::log_decay: return scale() / std::pow(std::log1p(tt), param);
            case ScheduleKind::poly_decay: return scale() / std::pow(tt, param);
            case ScheduleKind::exp_decay: return scale() / std::exp(std::pow(tt, param));
            case ScheduleKind::piecewise_poly: return scale() * std::exp(-std::floor(param * std::log(tt)));
        }
        return param;
    }

    std::string describe() const {
        switch (kind) {
            case ScheduleKind::constant: return "constant(" + std::to_string(param) + ")";
            case ScheduleKind::log_decay: return "log_decay(gamma=" + std::to_string(param) + ")";
            case ScheduleKind::poly_decay: return "poly_decay(alpha=" + std::to_string(param) + ")";
            case ScheduleKind::exp_decay: return "exp_decay(q=" + std::to_string(param) + ")";
            case ScheduleKind::piecewise_poly: return "piecewise_poly(alpha=" + std::to_string(param) + ")";
        }
        return "?";
    }

    /// Throws ConfigError when the parameters violate lambda_t > 0 or monotonicity.
    static LambdaSchedule checked(LambdaSchedule s) {
        if (s.kind == ScheduleKind::constant) {
            if (!(s.param > 0.0)) throw ConfigError("constant schedule needs lambda > 0");
            return s;
        }
        if (!(s.r > 0.0)) throw ConfigError("decaying schedules need R > 0");
        if (s.d < 1) throw ConfigError("decaying schedules need d >= 1");
        switch (s.kind) {
            case ScheduleKind::log_decay:
                if (!(s.param > 0.0)) throw ConfigError("log_decay needs gamma > 0");
                break;
            case ScheduleKind::poly_decay:
            case ScheduleKind::piecewise_poly:
                if (!(s.param >= 0.0)) throw ConfigError("polynomial decay needs alpha >= 0");
                break;
            case ScheduleKind::exp_decay:
                if (!(s.param > 0.0 && s.param < 1.0)) throw ConfigError("exp_decay needs q in (0,1)");
                break;
            default: break;
        }
        return s;
    }
};

}  // namespace banditlab
