#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <toml.hpp>

#include "banditlab/environment.hpp"
#include "banditlab/errors.hpp"
#include "banditlab/policies.hpp"
#include "banditlab/schedule.hpp"

namespace banditlab::harness {

/// Instance names: a | b | c | appendixA | custom.
struct InstanceSpec {
    std::string name;
    std::string label;
    // appendixA
    int dim = 5;
    double s_star = 1.0;
    // custom: explicit arms/theta_star, or random_arms spherical arms of dimension `dim`
    std::vector<std::vector<double>> arms;
    std::vector<double> theta_star;
    std::size_t random_arms = 0;
    std::uint64_t arm_seed = 1;
    double theta_norm = 1.0;
    double noise = 1.0;
    double reward_shift = 0.0;
};

/// Algorithm names: oful | naoful | olsoful | oful0.
struct AlgorithmSpec {
    std::string name;
    std::string label;
    double lambda = 1.0;
    double s = 1.0;
    std::optional<double> r;      ///< defaults to the instance noise level
    std::optional<double> delta;  ///< defaults to the experiment delta
    std::string schedule = "poly";
    double alpha = 1.0;
    double gamma = 1.0;
    double q = 0.5;
    bool union_bound = true;
    std::vector<std::size_t> tie_priority;
};

struct ExperimentConfig {
    std::vector<InstanceSpec> instances;
    std::vector<AlgorithmSpec> algorithms;
    std::size_t horizon = 100;
    std::size_t repetitions = 10;
    std::uint64_t master_seed = 20240607;
    double delta = 0.01;
    std::string output_dir = "out";
    bool bounds = false;
};

/// Thrown with one violation per line.
class ConfigViolations : public ConfigError {
public:
    explicit ConfigViolations(std::vector<std::string> lines) : ConfigError(join(lines)), lines_(std::move(lines)) {}
    const std::vector<std::string>& lines() const { return lines_; }

private:
    static std::string join(const std::vector<std::string>& lines) {
        std::string out;
        for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
        return out;
    }
    std::vector<std::string> lines_;
};

/// OFUL(lambda=1, S=1), NAOFUL with alpha 1 and 2, OFUL0 on instances a, b, c; T=100, 10 repetitions.
inline ExperimentConfig default_fig1_config() {
    ExperimentConfig c;
    for (const char* name : {"a", "b", "c"}) c.instances.push_back(InstanceSpec{.name = name, .label = name});
    c.algorithms.push_back(AlgorithmSpec{.name = "oful", .label = "OFUL", .lambda = 1.0, .s = 1.0});
    c.algorithms.push_back(AlgorithmSpec{.name = "naoful", .label = "NAOFUL1", .schedule = "poly", .alpha = 1.0});
    c.algorithms.push_back(AlgorithmSpec{.name = "naoful", .label = "NAOFUL2", .schedule = "poly", .alpha = 2.0});
    c.algorithms.push_back(AlgorithmSpec{.name = "oful0", .label = "OFUL0"});
    c.output_dir = "fig1";
    return c;
}

inline Environment make_environment(const InstanceSpec& spec, std::size_t horizon) {
    if (spec.name == "a" || spec.name == "b" || spec.name == "c") {
        Environment env = make_table2_instance(spec.name, horizon);
        env.set_reward_shift(spec.reward_shift);
        return env;
    }
    if (spec.name == "appendixA") {
        Environment env = make_appendixA_instance(spec.dim, spec.s_star, horizon);
        env.set_reward_shift(spec.reward_shift);
        return env;
    }
    if (spec.name != "custom") throw ConfigError("unknown instance name '" + spec.name + "'");
    const std::string id = spec.label.empty() ? spec.name : spec.label;
    if (spec.random_arms > 0) {
        Environment env = make_random_sphere_instance(id, spec.random_arms, spec.dim, spec.theta_norm, spec.noise,
                                                      spec.arm_seed, horizon);
        env.set_reward_shift(spec.reward_shift);
        return env;
    }
    if (spec.arms.empty() || spec.theta_star.empty())
        throw ConfigError("custom instance needs either random_arms or both arms and theta_star");
    FixedArms arms;
    for (const auto& row : spec.arms) arms.arms.push_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
    Vector theta = Eigen::Map<const Vector>(spec.theta_star.data(), static_cast<Eigen::Index>(spec.theta_star.size()));
    Environment env(id, theta, spec.noise, std::move(arms), horizon);
    env.set_reward_shift(spec.reward_shift);
    return env;
}

inline LambdaSchedule make_schedule(const AlgorithmSpec& spec, double r, int d) {
    if (spec.schedule == "constant") return LambdaSchedule::constant(spec.lambda);
    if (spec.schedule == "log") return LambdaSchedule::log_decay(spec.gamma, r, d);
    if (spec.schedule == "poly") return LambdaSchedule::poly_decay(spec.alpha, r, d);
    if (spec.schedule == "exp") return LambdaSchedule::exp_decay(spec.q, r, d);
    if (spec.schedule == "piecewise") return LambdaSchedule::piecewise_poly(spec.alpha, r, d);
    throw ConfigError("unknown schedule '" + spec.schedule + "' (constant|log|poly|exp|piecewise)");
}

inline std::unique_ptr<Policy> make_policy(const AlgorithmSpec& spec, const Environment& env, double default_delta) {
    const double r = spec.r.value_or(env.noise_r());
    const double delta = spec.delta.value_or(default_delta);
    const Eigen::Index d = env.dim();
    const TieBreaking tie{spec.tie_priority};
    if (spec.name == "oful") return std::make_unique<Oful>(d, Oful::Config{spec.lambda, spec.s, r, delta, tie});
    if (spec.name == "naoful") {
        return std::make_unique<Naoful>(
            d, Naoful::Config{make_schedule(spec, r, static_cast<int>(d)), r, delta, spec.union_bound, tie});
    }
    if (spec.name == "oful0") return std::make_unique<Oful0>(d, Oful0::Config{r, delta, tie});
    if (spec.name == "olsoful") {
        if (!env.has_fixed_arms()) throw ConfigError("olsoful requires a fixed-arm instance");
        return std::make_unique<Olsoful>(env.arm_set_at(1), Olsoful::Config{r, delta, tie});
    }
    throw ConfigError("unknown algorithm '" + spec.name + "' (oful|naoful|olsoful|oful0)");
}

/// Every violation found, one message each; empty means valid.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> out;
    if (c.horizon < 1) out.push_back("experiment.horizon must be >= 1");
    if (c.repetitions < 1) out.push_back("experiment.repetitions must be >= 1");
    if (!(c.delta > 0.0 && c.delta < 1.0)) out.push_back("experiment.delta must lie in (0,1)");
    if (c.instances.empty()) out.push_back("no [[instances]] given");
    if (c.algorithms.empty()) out.push_back("no [[algorithms]] given");

    std::set<std::string> labels;
    std::vector<std::optional<Environment>> envs;
    for (std::size_t i = 0; i < c.instances.size(); ++i) {
        const auto& inst = c.instances[i];
        const std::string where = "instances[" + std::to_string(i) + "]";
        if (!labels.insert(inst.label).second) out.push_back(where + ": duplicate label '" + inst.label + "'");
        try {
            envs.emplace_back(make_environment(inst, std::max<std::size_t>(c.horizon, 1)));
        } catch (const std::exception& e) {
            out.push_back(where + ": " + e.what());
            envs.emplace_back(std::nullopt);
        }
    }

    labels.clear();
    for (std::size_t j = 0; j < c.algorithms.size(); ++j) {
        const auto& alg = c.algorithms[j];
        const std::string where = "algorithms[" + std::to_string(j) + "] (" + alg.label + ")";
        if (!labels.insert(alg.label).second) out.push_back(where + ": duplicate label");
        if (alg.delta && !(*alg.delta > 0.0 && *alg.delta < 1.0)) out.push_back(where + ": delta must lie in (0,1)");
        if (alg.name == "naoful") {
            if (alg.schedule == "poly" || alg.schedule == "piecewise") {
                if (!(alg.alpha >= 0.0)) out.push_back(where + ": alpha must be >= 0");
            } else if (alg.schedule == "log") {
                if (!(alg.gamma > 0.0)) out.push_back(where + ": gamma must be > 0");
            } else if (alg.schedule == "exp") {
                if (!(alg.q > 0.0 && alg.q < 1.0)) out.push_back(where + ": q must lie in (0,1)");
            } else if (alg.schedule == "constant") {
                if (!(alg.lambda > 0.0)) out.push_back(where + ": lambda must be > 0");
            } else {
                out.push_back(where + ": unknown schedule '" + alg.schedule + "'");
            }
        }
        if (alg.name == "oful" && !(alg.lambda > 0.0)) out.push_back(where + ": lambda must be > 0");
        for (std::size_t i = 0; i < envs.size(); ++i) {
            if (!envs[i]) continue;
            try {
                make_policy(alg, *envs[i], c.delta > 0.0 && c.delta < 1.0 ? c.delta : 0.5);
            } catch (const std::exception& e) {
                out.push_back(where + " on instance '" + c.instances[i].label + "': " + e.what());
            }
        }
    }
    return out;
}

namespace detail {

class TableReader {
public:
    TableReader(const toml::table& table, std::string where, std::vector<std::string>& errors)
        : table_(table), where_(std::move(where)), errors_(errors) {}

    template <typename T>
    void read(const char* key, T& out) {
        used_.insert(key);
        const toml::node* node = table_.get(key);
        if (!node) return;
        if constexpr (std::is_same_v<T, bool>) {
            if (auto v = node->value<bool>()) { out = *v; return; }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (auto v = node->value<std::string>()) { out = *v; return; }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (auto v = node->value<double>()) { out = *v; return; }
        } else if constexpr (std::is_integral_v<T>) {
            if (auto v = node->value<std::int64_t>()) {
                if (*v < 0 && std::is_unsigned_v<T>) {
                    errors_.push_back(where_ + "." + key + ": must be nonnegative");
                    return;
                }
                out = static_cast<T>(*v);
                return;
            }
        }
        errors_.push_back(where_ + "." + key + ": wrong type");
    }

    template <typename T>
    void read(const char* key, std::optional<T>& out) {
        if (!table_.get(key)) {
            used_.insert(key);
            return;
        }
        T value{};
        read(key, value);
        out = value;
    }

    void read(const char* key, std::vector<double>& out) {
        used_.insert(key);
        const toml::node* node = table_.get(key);
        if (!node) return;
        const auto* arr = node->as_array();
        if (!arr) { errors_.push_back(where_ + "." + key + ": expected an array of numbers"); return; }
        out.clear();
        for (const auto& el : *arr) {
            if (auto v = el.value<double>()) out.push_back(*v);
            else { errors_.push_back(where_ + "." + key + ": expected numbers"); return; }
        }
    }

    void read(const char* key, std::vector<std::size_t>& out) {
        used_.insert(key);
        const toml::node* node = table_.get(key);
        if (!node) return;
        const auto* arr = node->as_array();
        if (!arr) { errors_.push_back(where_ + "." + key + ": expected an array of integers"); return; }
        out.clear();
        for (const auto& el : *arr) {
            auto v = el.value<std::int64_t>();
            if (!v || *v < 0) { errors_.push_back(where_ + "." + key + ": expected nonnegative integers"); return; }
            out.push_back(static_cast<std::size_t>(*v));
        }
    }

    void read(const char* key, std::vector<std::vector<double>>& out) {
        used_.insert(key);
        const toml::node* node = table_.get(key);
        if (!node) return;
        const auto* arr = node->as_array();
        if (!arr) { errors_.push_back(where_ + "." + key + ": expected an array of arrays"); return; }
        out.clear();
        for (const auto& row : *arr) {
            const auto* inner = row.as_array();
            if (!inner) { errors_.push_back(where_ + "." + key + ": expected an array of arrays"); return; }
            std::vector<double> values;
            for (const auto& el : *inner) {
                if (auto v = el.value<double>()) values.push_back(*v);
                else { errors_.push_back(where_ + "." + key + ": expected numbers"); return; }
            }
            out.push_back(std::move(values));
        }
    }

    void reject_unknown() {
        for (const auto& [key, _] : table_)
            if (!used_.count(std::string(key.str())))
                errors_.push_back(where_ + ": unknown key '" + std::string(key.str()) + "'");
    }

private:
    const toml::table& table_;
    std::string where_;
    std::vector<std::string>& errors_;
    std::set<std::string> used_;
};

}  // namespace detail

/// Parses TOML text with [experiment], [[instances]] and [[algorithms]]; throws ConfigViolations.
inline ExperimentConfig parse_config(std::string_view text, std::string_view source = "config") {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigViolations({msg.str()});
    }

    ExperimentConfig c;
    std::vector<std::string> errors;
    for (const auto& [key, _] : root) {
        const std::string k(key.str());
        if (k != "experiment" && k != "instances" && k != "algorithms") errors.push_back("unknown section '" + k + "'");
    }

    if (const auto* exp = root["experiment"].as_table()) {
        detail::TableReader r(*exp, "experiment", errors);
        r.read("horizon", c.horizon);
        r.read("repetitions", c.repetitions);
        std::int64_t seed = static_cast<std::int64_t>(c.master_seed);
        r.read("master_seed", seed);
        c.master_seed = static_cast<std::uint64_t>(seed);
        r.read("delta", c.delta);
        r.read("output_dir", c.output_dir);
        r.read("bounds", c.bounds);
        r.reject_unknown();
    } else if (root.contains("experiment")) {
        errors.push_back("[experiment] must be a table");
    }

    if (const auto* arr = root["instances"].as_array()) {
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const auto* tbl = (*arr)[i].as_table();
            const std::string where = "instances[" + std::to_string(i) + "]";
            if (!tbl) { errors.push_back(where + ": expected a table"); continue; }
            InstanceSpec s;
            detail::TableReader r(*tbl, where, errors);
            r.read("name", s.name);
            r.read("label", s.label);
            r.read("dim", s.dim);
            r.read("s_star", s.s_star);
            r.read("arms", s.arms);
            r.read("theta_star", s.theta_star);
            r.read("random_arms", s.random_arms);
            r.read("arm_seed", s.arm_seed);
            r.read("theta_norm", s.theta_norm);
            r.read("noise", s.noise);
            r.read("reward_shift", s.reward_shift);
            r.reject_unknown();
            if (s.label.empty()) s.label = s.name;
            c.instances.push_back(std::move(s));
        }
    }

    if (const auto* arr = root["algorithms"].as_array()) {
        for (std::size_t j = 0; j < arr->size(); ++j) {
            const auto* tbl = (*arr)[j].as_table();
            const std::string where = "algorithms[" + std::to_string(j) + "]";
            if (!tbl) { errors.push_back(where + ": expected a table"); continue; }
            AlgorithmSpec s;
            detail::TableReader r(*tbl, where, errors);
            r.read("name", s.name);
            r.read("label", s.label);
            r.read("lambda", s.lambda);
            r.read("s", s.s);
            r.read("r", s.r);
            r.read("delta", s.delta);
            r.read("schedule", s.schedule);
            r.read("alpha", s.alpha);
            r.read("gamma", s.gamma);
            r.read("q", s.q);
            r.read("union_bound", s.union_bound);
            r.read("tie_priority", s.tie_priority);
            r.reject_unknown();
            if (s.label.empty()) s.label = s.name;
            c.algorithms.push_back(std::move(s));
        }
    }

    if (!errors.empty()) throw ConfigViolations(std::move(errors));
    if (auto violations = validate(c); !violations.empty()) throw ConfigViolations(std::move(violations));
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigViolations({"cannot read config file '" + path.string() + "'"});
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

}  // namespace banditlab::harness
