#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "banditlab/analysis.hpp"
#include "banditlab/environment.hpp"
#include "banditlab/harness/config.hpp"
#include "banditlab/policies.hpp"

namespace banditlab::harness {

struct CellResult {
    RegretTrace trace;
    std::size_t instance_index = 0;
    std::size_t algorithm_index = 0;
    std::optional<std::uint64_t> t0;        ///< NAOFUL only
    std::optional<std::size_t> t0_prime;    ///< NAOFUL only, diagnostic
    std::optional<std::size_t> tau;         ///< OLSOFUL only
};

/**
 * Plays one episode. Every step records the ellipsoid coverage of theta*
 * for the set the policy actually used, before the reward is revealed.
 */
inline CellResult run_episode(const Environment& env, Policy& policy, std::uint64_t seed, std::size_t horizon) {
    CellResult cell;
    cell.trace.seed = seed;
    cell.trace.steps.reserve(horizon);
    Rng rng(seed);

    const auto* naoful = dynamic_cast<const Naoful*>(&policy);
    if (naoful) {
        const auto& cfg = naoful->config();
        cell.t0 = t0_for_schedule(cfg.schedule, env.s_star(), cfg.r, static_cast<int>(env.dim()));
    }
    if (const auto* ols = dynamic_cast<const Olsoful*>(&policy)) cell.tau = ols->tau();

    double cum = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
        const ArmSet arms = env.arm_set_at(t);
        const std::size_t index = policy.select(arms);
        const Vector& x = arms[index];

        StepRecord rec;
        rec.t = t;
        rec.arm_index = index;
        rec.x = x;
        rec.beta = policy.beta();
        rec.lambda = policy.lambda();
        if (const auto ell = policy.ellipsoid()) rec.covered = coverage_check(env.theta_star(), *ell);
        rec.reward = env.sample_reward(x, rng);
        rec.inst_regret = env.instantaneous_regret(t, x);
        cum += rec.inst_regret;
        rec.cum_regret = cum;

        policy.observe(x, rec.reward);
        if (naoful && !cell.t0_prime &&
            t0_prime_holds(policy.lambda(), policy.gram().v_inv(), env.theta_star(), naoful->config().r,
                           static_cast<int>(env.dim())))
            cell.t0_prime = t;
        cell.trace.steps.push_back(std::move(rec));
    }
    return cell;
}

/// Seed for one (instance, algorithm, repetition) cell.
inline std::uint64_t cell_seed(const ExperimentConfig& config, std::size_t instance, std::size_t algorithm,
                               std::size_t repetition) {
    return run_seed(config.master_seed, stable_id(config.instances[instance].label),
                    stable_id(config.algorithms[algorithm].label), repetition);
}

/**
 * Runs every (instance, algorithm, repetition) cell on `threads` workers.
 * Results come back in (instance, algorithm, repetition) order regardless of
 * completion order.
 */
inline std::vector<CellResult> run_experiment(const ExperimentConfig& config, unsigned threads = 1) {
    if (auto violations = validate(config); !violations.empty()) throw ConfigViolations(std::move(violations));

    struct Job {
        std::size_t instance, algorithm, repetition;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < config.instances.size(); ++i)
        for (std::size_t j = 0; j < config.algorithms.size(); ++j)
            for (std::size_t k = 0; k < config.repetitions; ++k) jobs.push_back({i, j, k});

    std::vector<CellResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        while (true) {
            const std::size_t n = next.fetch_add(1);
            if (n >= jobs.size()) return;
            const Job& job = jobs[n];
            try {
                const auto& inst = config.instances[job.instance];
                const auto& alg = config.algorithms[job.algorithm];
                const Environment env = make_environment(inst, config.horizon);
                auto policy = make_policy(alg, env, config.delta);
                CellResult cell = run_episode(env, *policy, cell_seed(config, job.instance, job.algorithm, job.repetition),
                                              config.horizon);
                cell.trace.instance = inst.label;
                cell.trace.algorithm = alg.label;
                cell.trace.repetition = job.repetition;
                cell.instance_index = job.instance;
                cell.algorithm_index = job.algorithm;
                results[n] = std::move(cell);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
    if (count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < count; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace banditlab::harness
