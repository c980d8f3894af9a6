#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "banditlab/harness/config.hpp"
#include "banditlab/harness/output.hpp"
#include "banditlab/harness/runner.hpp"

using namespace banditlab;
using namespace banditlab::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("banditlab_test_" + name);
    fs::remove_all(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BANDITLAB_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig = R"(
[experiment]
horizon = 30
repetitions = 3
master_seed = 42
delta = 0.05

[[instances]]
name = "b"

[[instances]]
name = "custom"
label = "pair"
arms = [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]]
theta_star = [0.2, 0.5]
noise = 0.5

[[algorithms]]
name = "oful"
label = "OFUL"

[[algorithms]]
name = "naoful"
label = "NA2"
alpha = 2.0

[[algorithms]]
name = "oful0"
)";

}  // namespace

TEST(Config, ParsesSections) {
    const ExperimentConfig c = parse_config(kSmallConfig);
    EXPECT_EQ(c.horizon, 30u);
    EXPECT_EQ(c.repetitions, 3u);
    EXPECT_EQ(c.master_seed, 42u);
    EXPECT_EQ(c.delta, 0.05);
    ASSERT_EQ(c.instances.size(), 2u);
    EXPECT_EQ(c.instances[0].label, "b");
    EXPECT_EQ(c.instances[1].label, "pair");
    EXPECT_EQ(c.instances[1].arms.size(), 3u);
    ASSERT_EQ(c.algorithms.size(), 3u);
    EXPECT_EQ(c.algorithms[1].alpha, 2.0);
    EXPECT_EQ(c.algorithms[2].label, "oful0");
}

TEST(Config, ReportsEveryViolation) {
    const char* bad = R"(
[experiment]
horizon = 0
repetitions = 0
delta = 1.5
colour = "red"

[[instances]]
name = "zzz"

[[algorithms]]
name = "naoful"
schedule = "exp"
q = 2.0
)";
    try {
        parse_config(bad);
        FAIL() << "expected ConfigViolations";
    } catch (const ConfigViolations& e) {
        const auto& lines = e.lines();
        auto has = [&](const std::string& needle) {
            return std::any_of(lines.begin(), lines.end(), [&](const auto& l) { return l.find(needle) != std::string::npos; });
        };
        EXPECT_TRUE(has("colour"));
    }
    // Unknown keys stop parsing before validation; drop it and check the rest.
    std::string fixed = bad;
    fixed.erase(fixed.find("colour"), std::string("colour = \"red\"").size());
    try {
        parse_config(fixed);
        FAIL() << "expected ConfigViolations";
    } catch (const ConfigViolations& e) {
        const auto& lines = e.lines();
        auto has = [&](const std::string& needle) {
            return std::any_of(lines.begin(), lines.end(), [&](const auto& l) { return l.find(needle) != std::string::npos; });
        };
        EXPECT_TRUE(has("horizon"));
        EXPECT_TRUE(has("repetitions"));
        EXPECT_TRUE(has("delta"));
        EXPECT_TRUE(has("zzz"));
        EXPECT_TRUE(has("q must lie in (0,1)"));
    }
}

TEST(Config, RejectsBadValues) {
    EXPECT_THROW(parse_config("[experiment]\nhorizon = \"ten\"\n[[instances]]\nname=\"a\"\n[[algorithms]]\nname=\"oful\"\n"),
                 ConfigViolations);
    EXPECT_THROW(parse_config("not toml ["), ConfigViolations);
    EXPECT_THROW(parse_config("[[instances]]\nname=\"a\"\n[[algorithms]]\nname=\"naoful\"\nalpha=-1.0\n"), ConfigViolations);
    EXPECT_THROW(parse_config("[[instances]]\nname=\"a\"\n[[algorithms]]\nname=\"naoful\"\nschedule=\"log\"\ngamma=0.0\n"),
                 ConfigViolations);
    EXPECT_THROW(parse_config("[[instances]]\nname=\"a\"\n[[algorithms]]\nname=\"olsoful\"\n"), ConfigViolations);
    EXPECT_THROW(parse_config("[[instances]]\nname=\"a\"\n[[algorithms]]\nname=\"oful\"\ndelta=0.0\n"), ConfigViolations);
    EXPECT_THROW(parse_config("[[instances]]\nname=\"a\"\n[[instances]]\nname=\"a\"\n[[algorithms]]\nname=\"oful\"\n"),
                 ConfigViolations);
}

TEST(Config, AllSchedulesAndInstanceKinds) {
    const char* text = R"(
[[instances]]
name = "appendixA"
dim = 4
s_star = 2.0

[[instances]]
name = "custom"
label = "sphere"
random_arms = 12
dim = 3
arm_seed = 5
theta_norm = 2.0

[[algorithms]]
name = "naoful"
label = "c"
r = 1.0
schedule = "constant"
lambda = 0.5
[[algorithms]]
name = "naoful"
label = "l"
r = 1.0
schedule = "log"
gamma = 2.0
[[algorithms]]
name = "naoful"
label = "e"
r = 1.0
schedule = "exp"
q = 0.5
[[algorithms]]
name = "naoful"
label = "p"
r = 1.0
schedule = "piecewise"
alpha = 1.0
union_bound = false
[[algorithms]]
name = "olsoful"
r = 1.0
[[algorithms]]
name = "oful"
label = "adv"
tie_priority = [3, 2, 1, 0]
r = 0.5
)";
    ExperimentConfig c = parse_config(text);
    c.horizon = 15;
    c.repetitions = 1;
    const auto cells = run_experiment(c, 1);
    EXPECT_EQ(cells.size(), 12u);
    for (const auto& cell : cells) EXPECT_EQ(cell.trace.steps.size(), 15u);
}

TEST(Experiment, SingleCellSingleStep) {
    ExperimentConfig c;
    c.instances.push_back({.name = "a", .label = "a"});
    c.algorithms.push_back({.name = "oful", .label = "OFUL"});
    c.horizon = 1;
    c.repetitions = 1;
    const auto cells = run_experiment(c);
    ASSERT_EQ(cells.size(), 1u);
    ASSERT_EQ(cells[0].trace.steps.size(), 1u);
    EXPECT_EQ(cells[0].trace.instance, "a");
    EXPECT_EQ(cells[0].trace.algorithm, "OFUL");
}

TEST(Experiment, Fig1ConfigHasOneHundredTwentyTraces) {
    const auto cells = run_experiment(default_fig1_config(), 2);
    ASSERT_EQ(cells.size(), 120u);
    std::map<std::pair<std::string, std::string>, int> per_cell;
    for (const auto& cell : cells) {
        EXPECT_EQ(cell.trace.steps.size(), 100u);
        ++per_cell[{cell.trace.instance, cell.trace.algorithm}];
    }
    EXPECT_EQ(per_cell.size(), 12u);
    for (const auto& [key, n] : per_cell) EXPECT_EQ(n, 10);
}

TEST(Experiment, InvalidConfigThrows) {
    ExperimentConfig c;
    EXPECT_THROW(run_experiment(c), ConfigViolations);
}

TEST(Experiment, TracesSatisfyRegretInvariants) {
    const auto cells = run_experiment(parse_config(kSmallConfig), 1);
    for (const auto& cell : cells) {
        double prev = 0.0;
        for (const auto& s : cell.trace.steps) {
            EXPECT_GE(s.inst_regret, -1e-9);
            EXPECT_EQ(s.cum_regret, prev + s.inst_regret);
            prev = s.cum_regret;
        }
    }
}

TEST(Experiment, NaofulCellsReportT0) {
    const auto cells = run_experiment(parse_config(kSmallConfig), 1);
    for (const auto& cell : cells) {
        if (cell.trace.algorithm == "NA2") {
            ASSERT_TRUE(cell.t0);
        } else {
            EXPECT_FALSE(cell.t0);
        }
    }
}

TEST(Aggregate, IdenticalTracesHaveZeroStd) {
    RegretTrace tr{"i", "a", 1, 0, {}};
    for (std::size_t t = 1; t <= 5; ++t) tr.steps.push_back(StepRecord{.t = t, .cum_regret = 0.3 * t});
    const auto rows = aggregate({tr, tr, tr});
    ASSERT_EQ(rows.size(), 5u);
    for (const auto& r : rows) EXPECT_EQ(r.std, 0.0);
}

TEST(Aggregate, TwoPointFormula) {
    RegretTrace a{"i", "a", 1, 0, {StepRecord{.t = 1, .cum_regret = 0.0}}};
    RegretTrace b{"i", "a", 2, 1, {StepRecord{.t = 1, .cum_regret = 2.0}}};
    const auto rows = aggregate({a, b});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].mean, 1.0);
    EXPECT_NEAR(rows[0].std, std::sqrt(2.0), 1e-15);
    EXPECT_EQ(aggregate({a})[0].std, 0.0);
}

TEST(Aggregate, PermutationInvariant) {
    auto cells = run_experiment(parse_config(kSmallConfig), 1);
    std::vector<RegretTrace> traces;
    for (const auto& c : cells) traces.push_back(c.trace);
    const auto base = aggregate(traces);
    std::vector<RegretTrace> shuffled = traces;
    std::reverse(shuffled.begin(), shuffled.end());
    // Restore group order but keep repetitions reversed within each group.
    std::stable_sort(shuffled.begin(), shuffled.end(), [&](const RegretTrace& x, const RegretTrace& y) {
        auto rank = [&](const RegretTrace& r) {
            for (std::size_t i = 0; i < traces.size(); ++i)
                if (traces[i].instance == r.instance && traces[i].algorithm == r.algorithm) return i;
            return traces.size();
        };
        return rank(x) < rank(y);
    });
    const auto other = aggregate(shuffled);
    ASSERT_EQ(base.size(), other.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        EXPECT_EQ(base[i].mean, other[i].mean);
        EXPECT_EQ(base[i].std, other[i].std);
    }
}

TEST(Output, Headers) {
    EXPECT_STREQ(kTracesHeader, "instance,algorithm,seed,t,arm_index,reward,inst_regret,cum_regret,beta,lambda,covered");
    EXPECT_STREQ(kSummaryHeader, "instance,algorithm,t,mean_cum_regret,std_cum_regret");
}

TEST(Output, NumbersRoundTrip) {
    for (const double v : {0.1, 1.0 / 3.0, 5.767e-9, 12345.678901234567, -2.5, 0.0}) {
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
    EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Output, EmptyTraceCollectionWritesHeadersOnly) {
    const fs::path dir = scratch("empty");
    ExperimentConfig c = default_fig1_config();
    write_outputs(dir, {}, c, RunInfo{});
    EXPECT_EQ(slurp(dir / "traces.csv"), std::string(kTracesHeader) + "\n");
    EXPECT_EQ(slurp(dir / "summary.csv"), std::string(kSummaryHeader) + "\n");
    EXPECT_TRUE(fs::exists(dir / "run.json"));
}

TEST(Output, FilesAreConsistent) {
    const fs::path dir = scratch("files");
    ExperimentConfig c = parse_config(kSmallConfig);
    c.bounds = true;
    const auto cells = run_experiment(c, 1);
    write_outputs(dir, cells, c, RunInfo{0.5, 1});

    const auto traces = lines_of(slurp(dir / "traces.csv"));
    ASSERT_EQ(traces.size(), 1u + 2 * 3 * 3 * 30);
    EXPECT_EQ(traces[0], kTracesHeader);
    std::map<std::string, double> last_cum;
    for (std::size_t i = 1; i < traces.size(); ++i) {
        const auto f = split(traces[i]);
        ASSERT_EQ(f.size(), 11u) << traces[i];
        const std::string key = f[0] + "/" + f[1] + "/" + f[2];
        const double prev = f[3] == "1" ? 0.0 : last_cum[key];
        EXPECT_EQ(std::stod(f[7]), prev + std::stod(f[6]));
        last_cum[key] = std::stod(f[7]);
        EXPECT_TRUE(f[10].empty() || f[10] == "0" || f[10] == "1");
    }

    // Summary schema as read by the plotter: header, then per (instance, algorithm) rows t = 1..T.
    const auto summary = lines_of(slurp(dir / "summary.csv"));
    ASSERT_EQ(summary.size(), 1u + 2 * 3 * 30);
    EXPECT_EQ(summary[0], kSummaryHeader);
    std::map<std::string, std::size_t> next_t;
    for (std::size_t i = 1; i < summary.size(); ++i) {
        const auto f = split(summary[i]);
        ASSERT_EQ(f.size(), 5u);
        const std::size_t t = std::stoul(f[2]);
        EXPECT_EQ(t, ++next_t[f[0] + "/" + f[1]]);
        EXPECT_TRUE(std::isfinite(std::stod(f[3])));
        EXPECT_GE(std::stod(f[4]), 0.0);
    }

    const auto bounds = lines_of(slurp(dir / "bounds.csv"));
    EXPECT_EQ(bounds[0], kBoundsHeader);
    EXPECT_EQ(bounds.size(), 1u + 2 * 30);

    const auto manifest = nlohmann::json::parse(slurp(dir / "run.json"));
    EXPECT_EQ(manifest["artifact"], "banditlab");
    EXPECT_EQ(manifest["version"], BANDITLAB_VERSION);
    EXPECT_EQ(manifest["wall_clock_seconds"], 0.5);
    EXPECT_EQ(manifest["config"]["experiment"]["master_seed"], 42);
    EXPECT_EQ(manifest["cells"].size(), 18u);
}

TEST(Output, DeterministicAcrossRunsAndThreadCounts) {
    ExperimentConfig c = parse_config(kSmallConfig);
    const fs::path d1 = scratch("det1"), d2 = scratch("det2");
    write_outputs(d1, run_experiment(c, 1), c, RunInfo{});
    write_outputs(d2, run_experiment(c, 4), c, RunInfo{});
    EXPECT_EQ(slurp(d1 / "traces.csv"), slurp(d2 / "traces.csv"));
    EXPECT_EQ(slurp(d1 / "summary.csv"), slurp(d2 / "summary.csv"));
    c.master_seed = 43;
    const fs::path d3 = scratch("det3");
    write_outputs(d3, run_experiment(c, 1), c, RunInfo{});
    EXPECT_NE(slurp(d1 / "traces.csv"), slurp(d3 / "traces.csv"));
}

TEST(Output, UnwritableDirectoryIsIoError) {
    const fs::path blocker = scratch("blocker");
    std::ofstream(blocker) << "x";
    EXPECT_THROW(write_outputs(blocker / "sub", {}, default_fig1_config(), RunInfo{}), IoError);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    const fs::path good = dir / "good.toml";
    std::ofstream(good) << kSmallConfig;
    const fs::path bad = dir / "bad.toml";
    std::ofstream(bad) << "[experiment]\nhorizon = 0\n";
    const fs::path blocker = dir / "blocker";
    std::ofstream(blocker) << "x";

    EXPECT_EQ(run_cli("run --config " + good.string() + " --out " + (dir / "out").string() + " --seed 7 --threads 2"), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "run.json"));
    EXPECT_EQ(manifest["config"]["experiment"]["master_seed"], 7);
    EXPECT_EQ(manifest["threads"], 2);

    EXPECT_EQ(run_cli("run --config " + bad.string()), 2);
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.toml").string()), 2);
    EXPECT_EQ(run_cli("run"), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("verify --suite nope"), 2);
    EXPECT_EQ(run_cli("run --config " + good.string() + " --out " + (blocker / "sub").string()), 3);
    EXPECT_EQ(run_cli("verify --suite solvelog"), 0);
    EXPECT_EQ(run_cli("reproduce-fig1 --out " + (dir / "fig1").string()), 0);
    EXPECT_EQ(lines_of(slurp(dir / "fig1" / "traces.csv")).size(), 1u + 120 * 100);
}
