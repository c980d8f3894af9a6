#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "banditlab/analysis.hpp"
#include "banditlab/environment.hpp"
#include "banditlab/errors.hpp"
#include "banditlab/harness/config.hpp"
#include "banditlab/harness/runner.hpp"

namespace banditlab::harness {

inline constexpr const char* kTracesHeader =
    "instance,algorithm,seed,t,arm_index,reward,inst_regret,cum_regret,beta,lambda,covered";
inline constexpr const char* kSummaryHeader = "instance,algorithm,t,mean_cum_regret,std_cum_regret";
inline constexpr const char* kBoundsHeader = "instance,algorithm,t,t0,bound";

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

struct SummaryRow {
    std::string instance;
    std::string algorithm;
    std::size_t t = 0;
    double mean = 0.0;
    double std = 0.0;
};

/**
 * Per-(instance, algorithm, t) sample mean and standard deviation (n - 1
 * denominator, 0 for a single trace) of cumulative regret. Values are summed
 * in sorted order so the result does not depend on repetition order.
 */
inline std::vector<SummaryRow> aggregate(const std::vector<RegretTrace>& traces) {
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<const RegretTrace*>> groups;
    for (const auto& tr : traces) {
        auto key = std::make_pair(tr.instance, tr.algorithm);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&tr);
    }

    std::vector<SummaryRow> rows;
    for (const auto& key : order) {
        const auto& group = groups[key];
        const std::size_t horizon = group.front()->steps.size();
        for (const auto* tr : group)
            if (tr->steps.size() != horizon)
                throw ContractViolation("aggregate: traces of " + key.first + "/" + key.second + " differ in length");
        std::vector<double> values(group.size());
        for (std::size_t t = 0; t < horizon; ++t) {
            for (std::size_t k = 0; k < group.size(); ++k) values[k] = group[k]->steps[t].cum_regret;
            std::sort(values.begin(), values.end());
            const double n = static_cast<double>(values.size());
            double sum = 0.0;
            for (const double v : values) sum += v;
            const double mean = sum / n;
            double sq = 0.0;
            for (const double v : values) sq += (v - mean) * (v - mean);
            const double sd = values.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
            rows.push_back({key.first, key.second, group.front()->steps[t].t, mean, sd});
        }
    }
    return rows;
}

struct BoundRow {
    std::string instance;
    std::string algorithm;
    std::size_t t = 0;
    std::optional<std::uint64_t> t0;
    double bound = 0.0;
};

/// NAOFUL regret-bound overlays for every (instance, NAOFUL algorithm) pair.
inline std::vector<BoundRow> bound_overlays(const ExperimentConfig& config) {
    std::vector<BoundRow> rows;
    for (const auto& inst : config.instances) {
        const Environment env = make_environment(inst, config.horizon);
        for (const auto& alg : config.algorithms) {
            if (alg.name != "naoful") continue;
            const double r = alg.r.value_or(env.noise_r());
            const int d = static_cast<int>(env.dim());
            const LambdaSchedule schedule = make_schedule(alg, r, d);
            const double delta = alg.delta.value_or(config.delta);
            const auto t0 = t0_for_schedule(schedule, env.s_star(), r, d);
            const auto bound = naoful_regret_bound(schedule, env.s_star(), r, d, delta, config.horizon);
            for (std::size_t t = 1; t <= config.horizon; ++t) rows.push_back({inst.label, alg.label, t, t0, bound[t - 1]});
        }
    }
    return rows;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["experiment"] = {{"horizon", c.horizon},      {"repetitions", c.repetitions}, {"master_seed", c.master_seed},
                       {"delta", c.delta},          {"output_dir", c.output_dir},   {"bounds", c.bounds}};
    j["instances"] = nlohmann::json::array();
    for (const auto& s : c.instances) {
        nlohmann::json e = {{"name", s.name}, {"label", s.label}, {"reward_shift", s.reward_shift}};
        if (s.name == "appendixA") {
            e["dim"] = s.dim;
            e["s_star"] = s.s_star;
        }
        if (s.name == "custom") {
            e["noise"] = s.noise;
            if (s.random_arms > 0) {
                e["random_arms"] = s.random_arms;
                e["dim"] = s.dim;
                e["arm_seed"] = s.arm_seed;
                e["theta_norm"] = s.theta_norm;
            } else {
                e["arms"] = s.arms;
                e["theta_star"] = s.theta_star;
            }
        }
        j["instances"].push_back(e);
    }
    j["algorithms"] = nlohmann::json::array();
    for (const auto& a : c.algorithms) {
        nlohmann::json e = {{"name", a.name}, {"label", a.label}};
        if (a.name == "oful") {
            e["lambda"] = a.lambda;
            e["s"] = a.s;
        }
        if (a.name == "naoful") {
            e["schedule"] = a.schedule;
            if (a.schedule == "poly" || a.schedule == "piecewise") e["alpha"] = a.alpha;
            if (a.schedule == "log") e["gamma"] = a.gamma;
            if (a.schedule == "exp") e["q"] = a.q;
            if (a.schedule == "constant") e["lambda"] = a.lambda;
            e["union_bound"] = a.union_bound;
        }
        if (a.r) e["r"] = *a.r;
        e["delta"] = a.delta.value_or(c.delta);
        if (!a.tie_priority.empty()) e["tie_priority"] = a.tie_priority;
        j["algorithms"].push_back(e);
    }
    return j;
}

namespace detail {
inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}
inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}
}  // namespace detail

inline void write_traces_csv(const std::filesystem::path& path, const std::vector<RegretTrace>& traces) {
    auto out = detail::open_output(path);
    out << kTracesHeader << '\n';
    for (const auto& tr : traces) {
        for (const auto& s : tr.steps) {
            out << tr.instance << ',' << tr.algorithm << ',' << tr.seed << ',' << s.t << ',' << s.arm_index << ','
                << format_number(s.reward) << ',' << format_number(s.inst_regret) << ','
                << format_number(s.cum_regret) << ',' << format_number(s.beta) << ',' << format_number(s.lambda) << ','
                << (s.covered ? (*s.covered ? "1" : "0") : "") << '\n';
        }
    }
    detail::finish(out, path);
}

inline void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    auto out = detail::open_output(path);
    out << kSummaryHeader << '\n';
    for (const auto& r : rows)
        out << r.instance << ',' << r.algorithm << ',' << r.t << ',' << format_number(r.mean) << ','
            << format_number(r.std) << '\n';
    detail::finish(out, path);
}

inline void write_bounds_csv(const std::filesystem::path& path, const std::vector<BoundRow>& rows) {
    auto out = detail::open_output(path);
    out << kBoundsHeader << '\n';
    for (const auto& r : rows)
        out << r.instance << ',' << r.algorithm << ',' << r.t << ',' << (r.t0 ? std::to_string(*r.t0) : "") << ','
            << format_number(r.bound) << '\n';
    detail::finish(out, path);
}

struct RunInfo {
    double wall_clock_seconds = 0.0;
    unsigned threads = 1;
};

/**
 * Writes traces.csv, summary.csv, run.json and (when config.bounds) bounds.csv
 * into `out_dir`, creating it if needed. Throws IoError on any failure.
 */
inline void write_outputs(const std::filesystem::path& out_dir, const std::vector<CellResult>& cells,
                          const ExperimentConfig& config, const RunInfo& info) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

    std::vector<RegretTrace> traces;
    traces.reserve(cells.size());
    for (const auto& c : cells) traces.push_back(c.trace);

    write_traces_csv(out_dir / "traces.csv", traces);
    write_summary_csv(out_dir / "summary.csv", aggregate(traces));
    if (config.bounds) write_bounds_csv(out_dir / "bounds.csv", bound_overlays(config));

    nlohmann::json manifest;
    manifest["artifact"] = "banditlab";
    manifest["version"] = BANDITLAB_VERSION;
    manifest["config"] = config_to_json(config);
    manifest["wall_clock_seconds"] = info.wall_clock_seconds;
    manifest["threads"] = info.threads;
    manifest["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json e = {{"instance", c.trace.instance},
                            {"algorithm", c.trace.algorithm},
                            {"repetition", c.trace.repetition},
                            {"seed", c.trace.seed},
                            {"final_regret", c.trace.final_regret()}};
        if (c.t0) e["t0"] = *c.t0;
        if (c.t0_prime) e["t0_prime"] = *c.t0_prime;
        if (c.tau) e["tau"] = *c.tau;
        manifest["cells"].push_back(e);
    }
    const auto path = out_dir / "run.json";
    auto out = detail::open_output(path);
    out << manifest.dump(2) << '\n';
    detail::finish(out, path);
}

}  // namespace banditlab::harness
