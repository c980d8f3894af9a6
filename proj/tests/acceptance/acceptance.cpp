// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "banditlab/banditlab.hpp"
#include "banditlab/verify.hpp"

using namespace banditlab;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

int failures = 0;

void criterion(int n, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0.0 && secs >= limit_seconds) {
        out.ok = false;
        out.detail += " (over the " + verify::fmt(limit_seconds) + " s budget)";
    }
    if (!out.ok) ++failures;
    std::printf("[%s] criterion %d: %s; %s [%.3f s]\n", out.ok ? "PASS" : "FAIL", n, title, out.detail.c_str(), secs);
    std::fflush(stdout);
}

Outcome from_suite(const verify::SuiteResult& r) {
    std::string detail;
    for (const auto& l : r.lines) detail += (detail.empty() ? "" : "; ") + l;
    return {r.passed, detail};
}

Outcome appendix_a_trace() {
    const Environment env = make_appendixA_instance(5, 1.0);
    Oful policy(5, Oful::Config{1.0, env.s_star(), 0.0, 0.01, TieBreaking{{0, 1, 2, 3, 4}}});
    const auto cell = harness::run_episode(env, policy, 1, env.horizon());
    bool order = true;
    for (const auto& s : cell.trace.steps) order &= s.arm_index == (s.t <= 5 ? s.t - 1 : 4u);
    const double regret = cell.trace.final_regret();
    return {order && regret == 4.0,
            "pulls e1..e4 then e5: " + std::string(order ? "yes" : "no") + ", cumulative regret " + verify::fmt(regret)};
}

Outcome fig1_orderings() {
    const auto config = harness::default_fig1_config();
    const auto cells = harness::run_experiment(config, 1);
    std::vector<RegretTrace> traces;
    for (const auto& c : cells) traces.push_back(c.trace);
    std::map<std::pair<std::string, std::string>, std::vector<double>> mean;
    for (const auto& row : harness::aggregate(traces)) mean[{row.instance, row.algorithm}].push_back(row.mean);
    auto final_of = [&](const char* inst, const char* alg) { return mean.at({inst, alg}).back(); };

    bool ok = true;
    std::string detail;
    for (const char* alg : {"OFUL", "NAOFUL1", "NAOFUL2"}) {
        const double ratio = final_of("a", "OFUL0") / final_of("a", alg);
        ok &= ratio >= 2.0;
        detail += "a: OFUL0/" + std::string(alg) + " = " + verify::fmt(ratio) + "; ";
    }
    for (const char* alg : {"NAOFUL1", "NAOFUL2"}) {
        const double ratio = final_of("c", "OFUL") / final_of("c", alg);
        ok &= ratio >= 2.0;
        detail += "c: OFUL/" + std::string(alg) + " = " + verify::fmt(ratio) + "; ";
    }
    const auto& curve = mean.at({"b", "OFUL0"});
    const double at46 = curve[45];
    const double growth = curve.back() - at46;
    ok &= growth <= 0.05 * at46;
    detail += "b: OFUL0 " + verify::fmt(at46) + " at t=46, +" + verify::fmt(growth) + " by t=" + std::to_string(curve.size());
    return {ok, detail};
}

Outcome warmup_sets() {
    const Eigen::Index d = 8;
    const std::size_t guard = warmup_length_guard(d);
    std::size_t bad = 0, longest = 0;
    double worst_dense = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(mix64(0xacce55 + s));
        const ArmSet arms{random_sphere_arms(50, d, rng), 1};
        const WarmupResult w = olsoful_warmup(arms);
        Matrix v = Matrix::Zero(d, d);
        for (const auto i : w.pulls) v += arms[i] * arms[i].transpose();
        const Matrix inv = Eigen::FullPivLU<Matrix>(v).inverse();
        double dense = 0.0;
        for (const auto& x : arms.arms) dense = std::max(dense, x.dot(inv * x));
        worst_dense = std::max(worst_dense, dense);
        longest = std::max(longest, w.tau);
        if (!(w.max_leverage <= 1.0) || dense > 1.0 + 1e-9 || w.tau > guard) ++bad;
    }
    return {bad == 0, std::to_string(bad) + " violating sets; max dense leverage " + verify::fmt(worst_dense) +
                          ", longest tau " + std::to_string(longest) + " (guard " + std::to_string(guard) + ")"};
}

// Maximum of <x, theta> over {theta : (theta - c)' V (theta - c) <= beta}, found by sampling the
// ellipsoid boundary and refining with a shrinking random-step hill climb.
double sampled_ucb(const Vector& x, const Vector& c, const Matrix& v, double beta, Rng& rng) {
    const Eigen::Index d = x.size();
    const Matrix l = Eigen::LLT<Matrix>(v).matrixL();
    std::normal_distribution<double> normal(0.0, 1.0);
    auto value = [&](const Vector& u) {
        const Vector theta = c + std::sqrt(beta) * l.transpose().triangularView<Eigen::Upper>().solve(u);
        return x.dot(theta);
    };
    auto draw = [&] {
        Vector u(d);
        for (Eigen::Index i = 0; i < d; ++i) u[i] = normal(rng);
        return Vector(u / u.norm());
    };
    Vector best = draw();
    double best_value = value(best);
    for (int k = 0; k < 20000; ++k) {
        const Vector u = draw();
        if (const double f = value(u); f > best_value) best = u, best_value = f;
    }
    double step = 0.5;
    for (int k = 0; k < 20000 && step > 1e-9; ++k) {
        Vector u = best + step * draw();
        u /= u.norm();
        if (const double f = value(u); f > best_value) {
            best = u;
            best_value = f;
        } else if (k % 50 == 49) {
            step *= 0.7;
        }
    }
    return best_value;
}

Outcome linalg_and_ucb() {
    const auto suite = verify::linalg_suite();
    Rng rng(505);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    double worst = 0.0;
    for (int e = 0; e < 50; ++e) {
        const Eigen::Index d = 2 + e % 5;
        GramState gram(d, 0.2 + 0.1 * (e % 7));
        Rng data(mix64(e));
        for (const auto& x : random_sphere_arms(3 * d, d, data)) gram.update(x, unif(rng));
        const Estimate est = solve_estimate(gram);
        const double beta = 0.5 + 4.0 * (unif(rng) + 1.0);
        Vector x(d);
        for (Eigen::Index i = 0; i < d; ++i) x[i] = unif(rng);
        const double closed = ucb_value(x, est, beta, gram);
        const double sampled = sampled_ucb(x, est.theta_hat, gram.v(), beta, rng);
        worst = std::max(worst, std::abs(closed - sampled) / std::abs(closed));
    }
    std::string detail;
    for (const auto& l : suite.lines) detail += l + "; ";
    detail += "UCB vs sampled ellipsoid max: worst relative gap " + verify::fmt(worst) + " over 50 ellipsoids";
    return {suite.passed && worst <= 1e-4, detail};
}

Outcome bound_sanity() {
    const double delta = 0.01;
    std::size_t violations = 0;
    std::string detail;
    for (const char* name : {"a", "b", "c"}) {
        const Environment env = make_table2_instance(name);
        const int d = static_cast<int>(env.dim());
        const double r = env.noise_r();
        const auto schedule = LambdaSchedule::poly_decay(2.0, r, d);
        const auto bound = naoful_regret_bound(schedule, env.s_star(), r, d, delta, env.horizon());
        double tightest = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            Naoful policy(d, Naoful::Config{schedule, r, delta, true, {}});
            const auto cell = harness::run_episode(env, policy, run_seed(8, stable_id(name), stable_id("naoful2"), s),
                                                   env.horizon());
            for (const auto& step : cell.trace.steps) {
                if (step.cum_regret > bound[step.t - 1]) ++violations;
                tightest = std::max(tightest, step.cum_regret / bound[step.t - 1]);
            }
        }
        detail += std::string(name) + ": max regret/bound " + verify::fmt(tightest) + "; ";
    }
    detail += std::to_string(violations) + " violations";
    return {violations == 0, detail};
}

Outcome reduction() {
    const std::vector<Environment> envs = {make_table2_instance("a"), make_table2_instance("b"),
                                           make_table2_instance("c"),
                                           make_random_sphere_instance("sphere12d3", 12, 3, 1.0, 0.5, 31)};
    const double lambdas[] = {0.25, 1.0, 4.0};
    std::size_t mismatched = 0;
    for (std::uint64_t run = 0; run < 20; ++run) {
        const Environment& env = envs[run % envs.size()];
        const double lambda = lambdas[run % 3];
        const double r = env.noise_r();
        const double delta = 0.05;
        const auto d = env.dim();
        Naoful na(d, Naoful::Config{LambdaSchedule::constant(lambda), r, delta, false, {}});
        Oful of(d, Oful::Config{lambda, r * std::sqrt(static_cast<double>(d)) / std::sqrt(lambda), r, delta, {}});
        const std::uint64_t seed = run_seed(9, stable_id(env.id()), 0, run);
        const auto a = harness::run_episode(env, na, seed, env.horizon());
        const auto b = harness::run_episode(env, of, seed, env.horizon());
        for (std::size_t t = 0; t < a.trace.steps.size(); ++t) {
            if (a.trace.steps[t].arm_index != b.trace.steps[t].arm_index) {
                ++mismatched;
                break;
            }
        }
    }
    return {mismatched == 0, std::to_string(mismatched) + " of 20 runs with differing index sequences"};
}

}  // namespace

int main() {
    criterion(1, "appendixA golden trace", 1.0, appendix_a_trace);
    criterion(2, "three-instance regret orderings", 30.0, fig1_orderings);
    criterion(3, "elliptical potential count", 60.0, [] { return from_suite(verify::epc_suite()); });
    criterion(4, "confidence coverage", 120.0, [] { return from_suite(verify::coverage_suite()); });
    criterion(5, "OLSOFUL warmup", 60.0, warmup_sets);
    criterion(6, "linear-algebra oracles", 60.0, linalg_and_ucb);
    criterion(7, "implicit-log dominance", 10.0, [] { return from_suite(verify::solvelog_suite()); });
    criterion(8, "NAOFUL regret bound sanity", 0.0, bound_sanity);
    criterion(9, "NAOFUL to OFUL reduction", 0.0, reduction);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
