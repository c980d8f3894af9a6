#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "banditlab/analysis.hpp"
#include "banditlab/environment.hpp"
#include "banditlab/harness/runner.hpp"
#include "banditlab/linalg.hpp"
#include "banditlab/policies.hpp"

namespace banditlab::verify {

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::vector<std::string> lines;

    void check(bool ok, const std::string& line) {
        passed = passed && ok;
        lines.push_back((ok ? "ok   " : "FAIL ") + line);
    }
};

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- linalg

/// Incremental inverse/logdet against dense recomputation on random unit-ball sequences.
inline SuiteResult linalg_suite(std::size_t sequences = 100, Eigen::Index d = 8, std::size_t length = 1000,
                                double lambda = 0.3, std::uint64_t seed = 7) {
    SuiteResult res{"linalg"};
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst_inv = 0.0, worst_logdet = 0.0, worst_telescope = 0.0;
    for (std::size_t s = 0; s < sequences; ++s) {
        GramState gram(d, lambda);
        Matrix dense = Matrix::Identity(d, d) * lambda;
        double telescope = static_cast<double>(d) * std::log(lambda);
        for (std::size_t k = 0; k < length; ++k) {
            Vector x = random_sphere_arms(1, d, rng).front() * std::pow(unif(rng), 1.0 / static_cast<double>(d));
            telescope += std::log1p(gram.mahalanobis_sq(x));
            gram.update(x, 0.0);
            dense += x * x.transpose();
        }
        const Eigen::FullPivLU<Matrix> lu(dense);
        worst_inv = std::max(worst_inv, (gram.v_inv() - lu.inverse()).cwiseAbs().maxCoeff());
        worst_logdet = std::max(worst_logdet, std::abs(*gram.logdet() - std::log(lu.determinant())));
        worst_telescope = std::max(worst_telescope, std::abs(*gram.logdet() - telescope));
    }
    res.check(worst_inv <= 1e-8, "max |V^-1 incremental - dense| = " + fmt(worst_inv) + " (<= 1e-8)");
    res.check(worst_logdet <= 1e-6, "max |logdet incremental - dense| = " + fmt(worst_logdet) + " (<= 1e-6)");
    res.check(worst_telescope <= 1e-6, "max |logdet - telescoped increments| = " + fmt(worst_telescope) + " (<= 1e-6)");
    return res;
}

// ---------------------------------------------------------------- epc

struct EpcCase {
    int d = 1;
    double lambda = 1.0;
    std::string family;
    std::vector<Vector> xs;
};

/**
 * Vector sequences for the elliptical-potential checks: d in 1..8,
 * lambda in {0.1, 0.5, 1, 2}, four families (uniform sphere, uniform ball,
 * cycling basis vectors, and a greedy adversary that always plays the unit
 * eigenvector of the smallest eigenvalue of V).
 */
inline EpcCase epc_case(std::size_t k, std::size_t length, std::uint64_t seed) {
    static constexpr double lambdas[] = {0.1, 0.5, 1.0, 2.0};
    static constexpr const char* families[] = {"sphere", "ball", "basis-cycle", "greedy"};
    EpcCase c;
    c.d = static_cast<int>(1 + k % 8);
    c.lambda = lambdas[(k / 8) % 4];
    const std::size_t family = (k / 32) % 4;
    c.family = families[family];
    Rng rng(mix64(seed ^ k));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix v = Matrix::Identity(c.d, c.d) * c.lambda;
    for (std::size_t t = 0; t < length; ++t) {
        Vector x;
        switch (family) {
            case 0: x = random_sphere_arms(1, c.d, rng).front(); break;
            case 1: x = random_sphere_arms(1, c.d, rng).front() * std::pow(unif(rng), 1.0 / c.d); break;
            case 2: x = Vector::Unit(c.d, static_cast<Eigen::Index>(t % c.d)); break;
            default: {
                const Eigen::SelfAdjointEigenSolver<Matrix> eig(v);
                x = eig.eigenvectors().col(0);
                v += x * x.transpose();
            }
        }
        c.xs.push_back(std::move(x));
    }
    return c;
}

inline SuiteResult epc_suite(std::size_t sequences = 500, std::size_t length = 2000, std::uint64_t seed = 11) {
    SuiteResult res{"epc"};
    std::size_t count_violations = 0, potential_violations = 0;
    double tightest = 0.0;
    for (std::size_t k = 0; k < sequences; ++k) {
        const EpcCase c = epc_case(k, length, seed);
        const PotentialCount pc = elliptical_potential(c.xs, c.lambda);
        const double bound = epc_bound(c.d, c.lambda);
        if (static_cast<double>(pc.count) > bound) ++count_violations;
        tightest = std::max(tightest, static_cast<double>(pc.count) / bound);
        if (pc.unflagged_sum > elliptical_potential_bound(c.d, length, c.lambda)) ++potential_violations;
    }
    res.check(count_violations == 0, "epc_count <= epc_bound on " + std::to_string(sequences) +
                                         " sequences, violations = " + std::to_string(count_violations) +
                                         " (largest count/bound = " + fmt(tightest) + ")");
    res.check(potential_violations == 0, "unflagged potential <= 2d ln(1 + T/(d lambda)), violations = " +
                                             std::to_string(potential_violations));
    return res;
}

// ---------------------------------------------------------------- solvelog

/// Largest X with X <= a ln(1 + bX) by bisection; 0 when ab <= 1. Returns the feasible bracket end.
inline double implicit_log_fixed_point(double a, double b) {
    if (a * b <= 1.0) return 0.0;
    auto gap = [&](double x) { return a * std::log1p(b * x) - x; };
    double lo = 0.0, hi = 1.0;
    while (gap(hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    if (lo == 0.0) lo = hi * 1e-300;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gap(mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

inline std::vector<double> solvelog_a_grid() {
    std::vector<double> a;
    for (int i = 1; i <= 50; ++i) a.push_back(i);
    return a;
}

inline std::vector<double> solvelog_b_grid() { return {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0}; }

inline SuiteResult solvelog_suite() {
    SuiteResult res{"solvelog"};
    std::size_t cells = 0, trivial = 0, violations = 0;
    for (const double a : solvelog_a_grid()) {
        for (const double b : solvelog_b_grid()) {
            ++cells;
            const double x = implicit_log_fixed_point(a, b);
            if (x == 0.0) {
                ++trivial;
                continue;
            }
            if (solve_implicit_log(a, b, x) < x) ++violations;
        }
    }
    res.check(violations == 0, "bound >= fixed point on " + std::to_string(cells) + " cells (" +
                                   std::to_string(trivial) + " with ab <= 1 have only X = 0), violations = " +
                                   std::to_string(violations));
    return res;
}

// ---------------------------------------------------------------- coverage

struct CoverageStats {
    std::size_t runs = 0;
    std::size_t runs_with_miss = 0;
    double miss_fraction() const { return runs ? static_cast<double>(runs_with_miss) / runs : 0.0; }
};

/// NAOFUL with lambda_t = R^2 d / t^alpha; a run misses if theta* leaves the ellipsoid at any t >= t0.
inline CoverageStats naoful_coverage(const Environment& env, double alpha, double delta, std::size_t seeds,
                                     std::size_t horizon, std::uint64_t master_seed) {
    CoverageStats stats;
    const int d = static_cast<int>(env.dim());
    const double r = env.noise_r();
    const LambdaSchedule schedule = LambdaSchedule::poly_decay(alpha, r, d);
    const auto t0 = t0_for_schedule(schedule, env.s_star(), r, d);
    for (std::size_t s = 0; s < seeds; ++s) {
        Naoful policy(d, Naoful::Config{schedule, r, delta, true, {}});
        const auto cell = harness::run_episode(env, policy, run_seed(master_seed, stable_id(env.id()), stable_id("naoful"), s), horizon);
        bool miss = false;
        for (const auto& step : cell.trace.steps)
            if (t0 && step.t >= *t0 && step.covered && !*step.covered) miss = true;
        ++stats.runs;
        stats.runs_with_miss += miss ? 1 : 0;
    }
    return stats;
}

/// OLSOFUL; a run misses if theta* leaves the OLS ellipsoid at any post-warmup step.
inline CoverageStats olsoful_coverage(const Environment& env, double delta, std::size_t seeds, std::size_t horizon,
                                      std::uint64_t master_seed) {
    CoverageStats stats;
    for (std::size_t s = 0; s < seeds; ++s) {
        Olsoful policy(env.arm_set_at(1), Olsoful::Config{env.noise_r(), delta, {}});
        const auto cell = harness::run_episode(env, policy, run_seed(master_seed, stable_id(env.id()), stable_id("olsoful"), s), horizon);
        bool miss = false;
        for (const auto& step : cell.trace.steps)
            if (step.t > policy.tau() && step.covered && !*step.covered) miss = true;
        ++stats.runs;
        stats.runs_with_miss += miss ? 1 : 0;
    }
    return stats;
}

/// Random fixed instance used for the OLSOFUL coverage check: 20 spherical arms in R^4, |theta*| = 5.
inline Environment olsoful_coverage_instance() { return make_random_sphere_instance("sphere20d4", 20, 4, 5.0, 1.0, 2024); }

inline SuiteResult coverage_suite(std::size_t seeds = 200, std::size_t horizon = 100, double delta = 0.05) {
    SuiteResult res{"coverage"};
    const auto naoful = naoful_coverage(make_table2_instance("a"), 2.0, delta, seeds, horizon, 99);
    res.check(naoful.miss_fraction() <= delta + 0.03,
              "NAOFUL(alpha=2) on instance a: miss fraction " + fmt(naoful.miss_fraction()) + " (<= " + fmt(delta + 0.03) + ")");
    const auto ols = olsoful_coverage(olsoful_coverage_instance(), delta, seeds, horizon, 99);
    res.check(ols.miss_fraction() <= 2.0 * delta + 0.03,
              "OLSOFUL on 20-arm d=4 instance: miss fraction " + fmt(ols.miss_fraction()) + " (<= " +
                  fmt(2.0 * delta + 0.03) + ")");
    return res;
}

}  // namespace banditlab::verify
