#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "banditlab/banditlab.hpp"

namespace {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kIoError = 3 };

int run_and_write(banditlab::harness::ExperimentConfig config, const std::optional<std::string>& out,
                  const std::optional<std::uint64_t>& seed, unsigned threads) {
    using namespace banditlab::harness;
    if (out) config.output_dir = *out;
    if (seed) config.master_seed = *seed;
    const auto start = std::chrono::steady_clock::now();
    const auto cells = run_experiment(config, threads);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    write_outputs(config.output_dir, cells, config, RunInfo{elapsed.count(), threads});
    std::cout << "wrote " << cells.size() << " traces to " << config.output_dir << '\n';
    return kOk;
}

int run_verify(const std::string& suite) {
    using namespace banditlab::verify;
    std::vector<SuiteResult> results;
    if (suite == "linalg" || suite == "all") results.push_back(linalg_suite());
    if (suite == "epc" || suite == "all") results.push_back(epc_suite());
    if (suite == "solvelog" || suite == "all") results.push_back(solvelog_suite());
    if (suite == "coverage" || suite == "all") results.push_back(coverage_suite());
    bool ok = true;
    for (const auto& r : results) {
        std::cout << "[" << r.name << "] " << (r.passed ? "PASS" : "FAIL") << '\n';
        for (const auto& line : r.lines) std::cout << "  " << line << '\n';
        ok = ok && r.passed;
    }
    return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"banditlab: linear bandit simulations and checks"};
    app.set_version_flag("--version", std::string(BANDITLAB_VERSION));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    auto* run = app.add_subcommand("run", "run an experiment described by a TOML config");
    run->add_option("--config", config_path, "experiment config (TOML)")->required();
    run->add_option("--out", out_dir, "output directory (overrides experiment.output_dir)");
    run->add_option("--seed", seed, "master seed (overrides experiment.master_seed)");
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "run the verification suites");
    verify->add_option("--suite", suite, "suite to run")
        ->check(CLI::IsMember({"epc", "solvelog", "coverage", "linalg", "all"}));

    std::optional<std::string> fig_out;
    auto* fig1 = app.add_subcommand("reproduce-fig1", "run the default three-instance comparison");
    fig1->add_option("--out", fig_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return run_and_write(banditlab::harness::load_config(config_path), out_dir, seed, threads);
        if (*verify) return run_verify(suite);
        if (*fig1) return run_and_write(banditlab::harness::default_fig1_config(), fig_out, std::nullopt, 1);
    } catch (const banditlab::harness::ConfigViolations& e) {
        std::cerr << "invalid config:\n";
        for (const auto& line : e.lines()) std::cerr << "  " << line << '\n';
        return kConfigError;
    } catch (const banditlab::ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kConfigError;
    } catch (const banditlab::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kVerifyFailed;
    }
    return kOk;
}
