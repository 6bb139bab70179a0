#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "vvc/cli/config.hpp"
#include "vvc/cli/experiment.hpp"
#include "vvc/cli/report.hpp"

using namespace vvc;
using namespace vvc::cli;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "vvc_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// A short day and small networks so a run takes well under a second per seed.
ExperimentConfig smoke(const fs::path& dir, Algorithm a = Algorithm::macsac) {
    ExperimentConfig c;
    c.name = "smoke";
    c.algorithm = a;
    c.episodes = 2;
    c.seeds = {1, 2};
    c.profile.steps = 8;
    c.hyper.hidden = 16;
    c.hyper.batch = 4;
    c.output.dir = dir.string();
    c.output.final_window = 1;
    return c;
}

struct ScopedEnv {
    ScopedEnv(const char* name, const std::string& value) : name_(name) {
        if (const char* old = std::getenv(name)) old_ = old;
        ::setenv(name, value.c_str(), 1);
    }
    ~ScopedEnv() {
        if (old_.empty()) {
            ::unsetenv(name_);
        } else {
            ::setenv(name_, old_.c_str(), 1);
        }
    }
    const char* name_;
    std::string old_;
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VVC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---- config ---------------------------------------------------------------------------------------

TEST_CASE("empty config yields the documented defaults", "[cli][config]") {
    const auto c = parse_config(std::string{});
    CHECK(c == ExperimentConfig{});
    CHECK(c.hyper.hidden == 256);
    CHECK(c.hyper.layers == 2);
    CHECK(c.hyper.eta == 0.995);
    CHECK(c.hyper.lr == 1e-3);
    CHECK(c.hyper.buffer == 400000);
    CHECK(c.profile.steps == 96);
}

TEST_CASE("config round trip is idempotent and lossless", "[cli][config]") {
    const std::string text = R"([experiment]
name = roundtrip
algorithm = maddpg
episodes = 40
episode_offset = 7
seeds = 3, 5, 9

[profile]
seed = 42
load_noise = 0.013
pv_peak = 0.75

[schedule]
t_s = 8
t_u = 8
m = 1
comm_delay = 2
drop_prob = 0.3

[hyper]
alpha = 0.1, 0.2, 0.3, 0.4
gamma = 0.9
noise = 0.1
precision = double

[output]
dir = somewhere
final_window = 5
)";
    const auto c = parse_config(text);
    CHECK(c.algorithm == Algorithm::maddpg);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 5, 9});
    CHECK(c.hyper.alpha == std::vector<double>{0.1, 0.2, 0.3, 0.4});
    CHECK(c.schedule.comm_delay == 2);
    const auto once = serialize_config(c);
    const auto again = parse_config(once);
    CHECK(again == c);
    CHECK(serialize_config(again) == once);
}

TEST_CASE("validation names the offending field", "[cli][config]") {
    const auto field_of = [](const std::string& text) -> std::string {
        try {
            (void)parse_config(text);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return "";
    };
    CHECK(field_of("[hyper]\ngamma = 1.5\n") == "hyper.gamma");
    CHECK(field_of("[hyper]\ngama = 0.5\n") == "hyper.gama");
    CHECK(field_of("[hyper]\nhidden = -4\n") == "hyper.hidden");
    CHECK(field_of("[hyper]\nlr = fast\n") == "hyper.lr");
    CHECK(field_of("[hyper]\nalpha = 0.1, -0.2\n") == "hyper.alpha");
    CHECK(field_of("[hyper]\nbatch = 128\nbuffer = 64\n") == "hyper.buffer");
    CHECK(field_of("[experiment]\nseeds =\n") == "experiment.seeds");
    CHECK(field_of("[experiment]\nseeds = 1, 1\n") == "experiment.seeds");
    CHECK(field_of("[experiment]\nalgorithm = ppo\n") == "experiment.algorithm");
    CHECK(field_of("[experiment]\nnetwork = /no/such/case.json\n") == "experiment.network");
    CHECK(field_of("[schedule]\nt_s = 4\nm = 5\n") == "schedule.m");
    CHECK(field_of("[schedule]\ndrop_prob = 2\n") == "schedule.drop_prob");
    CHECK(field_of("[output]\nfinal_window = 11\n") == "output.final_window");
    CHECK(field_of("[hyper]\nlearn_lambda = maybe\n") == "hyper.learn_lambda");
    CHECK(field_of("[experiment]\nepisodes = 10\n") == "");
}

TEST_CASE("output root override applies to relative directories only", "[cli][config]") {
    ExperimentConfig c;
    c.output.dir = "runs/a";
    {
        ScopedEnv env(kOutputRootVar, "/tmp/override");
        CHECK(output_dir(c) == fs::path("/tmp/override/runs/a"));
        c.output.dir = "/abs/b";
        CHECK(output_dir(c) == fs::path("/abs/b"));
    }
    ::unsetenv(kOutputRootVar);
    c.output.dir = "runs/a";
    CHECK(output_dir(c) == fs::path("runs/a"));
}

// ---- experiment runner ----------------------------------------------------------------------------

TEST_CASE("macsac smoke run writes every artifact per seed", "[cli][run]") {
    const auto dir = scratch("smoke");
    const auto c = smoke(dir);
    const auto s = run_experiment(c);
    REQUIRE(s.seed_results.size() == 2);
    CHECK(s.seeds.size() == c.seeds.size());
    for (const auto& r : s.seed_results) {
        CHECK(r.ok);
        const auto sd = dir / ("seed_" + std::to_string(r.seed));
        CHECK(fs::exists(sd / "steps.csv"));
        CHECK(fs::exists(sd / "episodes.csv"));
        CHECK(fs::exists(sd / "events.jsonl"));
        CHECK(fs::exists(sd / "train.csv"));
        CHECK(fs::exists(sd / "checkpoint.json"));
        CHECK(r.episodes.size() == 2);
        CHECK(r.min_lambda >= 0.0);
    }
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "config.ini"));
    CHECK(parse_config(slurp(dir / "config.ini")) == c);
    CHECK(s.final_loss_mw.std.has_value());
    CHECK(*s.final_loss_mw.std >= 0.0);
    CHECK(s.per_episode.size() == 2);
}

TEST_CASE("reruns produce byte-identical metric files and event logs", "[cli][run]") {
    for (auto algo : {Algorithm::macsac, Algorithm::maddpg, Algorithm::csac}) {
        const auto a = scratch("det_a");
        const auto b = scratch("det_b");
        auto ca = smoke(a, algo);
        ca.schedule = oldc::OldcSchedule{1, 2, 2, 1, 1, 0.3};
        auto cb = ca;
        cb.output.dir = b.string();
        run_experiment(ca);
        run_experiment(cb);
        for (const auto* f : {"steps.csv", "episodes.csv", "events.jsonl", "train.csv", "checkpoint.json"}) {
            INFO(algorithm_name(algo) << " " << f);
            CHECK(slurp(a / "seed_2" / f) == slurp(b / "seed_2" / f));
        }
        CHECK(slurp(a / "episodes.csv") == slurp(b / "episodes.csv"));
    }
}

TEST_CASE("a seed's outputs do not depend on its siblings", "[cli][run]") {
    const auto both = scratch("iso_both");
    const auto alone = scratch("iso_alone");
    auto c = smoke(both);
    run_experiment(c);
    c.seeds = {2};
    c.output.dir = alone.string();
    run_experiment(c);
    for (const auto* f : {"steps.csv", "events.jsonl", "train.csv"}) {
        CHECK(slurp(both / "seed_2" / f) == slurp(alone / "seed_2" / f));
    }
}

TEST_CASE("summary statistics are recomputable from the per-step CSVs", "[cli][run]") {
    const auto dir = scratch("recompute");
    auto c = smoke(dir);
    c.episodes = 3;
    c.output.final_window = 2;
    run_experiment(c);
    const auto s = load_summary(dir / "summary.json");
    std::vector<double> finals;
    std::vector<std::vector<EpisodeRow>> per_seed;
    for (auto seed : c.seeds) {
        const auto rows = episode_rows(read_steps_csv(dir / ("seed_" + std::to_string(seed)) / "steps.csv"));
        finals.push_back(final_window_means(rows, 2).first);
        per_seed.push_back(rows);
    }
    const auto mean = (finals[0] + finals[1]) / 2.0;
    const auto sd = std::abs(finals[0] - finals[1]) / std::sqrt(2.0);
    CHECK(s.final_loss_mw.mean == Catch::Approx(mean).epsilon(1e-12));
    CHECK(*s.final_loss_mw.std == Catch::Approx(sd).epsilon(1e-9).margin(1e-15));
    REQUIRE(s.per_episode.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
        CHECK(s.per_episode[e].loss_mw.min == std::min(per_seed[0][e].loss_mw, per_seed[1][e].loss_mw));
        CHECK(s.per_episode[e].loss_mw.max == std::max(per_seed[0][e].loss_mw, per_seed[1][e].loss_mw));
    }
}

TEST_CASE("a failing seed is recorded without aborting its siblings", "[cli][run]") {
    const auto dir = scratch("failing");
    const auto c = smoke(dir);
    // A plain file where seed 1's directory should go makes that seed fail to write.
    std::ofstream(dir / "seed_1") << "occupied";
    const auto s = run_experiment(c);
    REQUIRE(s.seed_results.size() == 2);
    CHECK_FALSE(s.seed_results[0].ok);
    CHECK_FALSE(s.seed_results[0].error.empty());
    CHECK(s.seed_results[1].ok);
    CHECK(fs::exists(dir / "seed_2" / "steps.csv"));
    CHECK(s.final_loss_mw.mean == s.seed_results[1].final_loss_mw);
}

TEST_CASE("vvo summary is deterministic and has no std fields", "[cli][run]") {
    const auto dir = scratch("vvo");
    auto c = smoke(dir, Algorithm::vvo);
    c.episodes = 1;
    c.profile.steps = 3;
    const auto s = run_experiment(c);
    CHECK(s.deterministic);
    CHECK(s.seed_results.size() == 1);
    CHECK_FALSE(s.final_loss_mw.std.has_value());
    CHECK_FALSE(s.final_vvr.std.has_value());
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK_FALSE(j["final"]["loss_mw"].contains("std"));
    CHECK(s.final_loss_mw.mean > 0.0);
    // The oracle never loses to doing nothing on the same steps.
    const auto rows = read_steps_csv(dir / "seed_1" / "steps.csv");
    REQUIRE(rows.size() == 3);
}

TEST_CASE("avvo runs per seed and never beats vvo on the same day", "[cli][run]") {
    const auto dv = scratch("cmp_vvo");
    const auto da = scratch("cmp_avvo");
    auto cv = smoke(dv, Algorithm::vvo);
    cv.episodes = 1;
    cv.profile.steps = 4;
    auto ca = cv;
    ca.algorithm = Algorithm::avvo;
    ca.output.dir = da.string();
    const auto sv = run_experiment(cv);
    const auto sa = run_experiment(ca);
    CHECK(sa.seed_results.size() == 2);
    CHECK(sa.final_loss_mw.std.has_value());
    const auto objective = [&](const Stat& loss, const Stat& vvr) { return loss.mean + cv.oracle.penalty * vvr.mean; };
    CHECK(objective(sv.final_loss_mw, sv.final_vvr) <= objective(sa.final_loss_mw, sa.final_vvr) + 1e-9);
}

// ---- compare ----------------------------------------------------------------------------------------

namespace {

RunSummary fake(const std::string& name, const std::string& algo, double loss, std::uint64_t profile_seed = 1000) {
    RunSummary s;
    s.name = name;
    s.algorithm = algo;
    s.conditions = Conditions{"builtin:ieee33", profile_seed, "steps = 96\n", 290, 299};
    s.seeds = {1, 2, 3};
    s.final_loss_mw = Stat{loss, 0.01, loss - 0.01, loss + 0.01};
    s.final_vvr = Stat{1e-5, 1e-6, 0.0, 2e-5};
    if (algo == "vvo") s.final_loss_mw.std.reset();
    return s;
}

}  // namespace

TEST_CASE("compare orders rows like the result tables with vvo as reference", "[cli][compare]") {
    const auto c = compare({fake("m", "maddpg", 0.3), fake("a", "avvo", 0.7), fake("s", "macsac", 0.16),
                            fake("v", "vvo", 0.1)});
    REQUIRE(c.rows.size() == 4);
    CHECK(c.rows[0].algorithm == "vvo");
    CHECK(c.rows[1].algorithm == "macsac");
    CHECK(c.rows[2].algorithm == "maddpg");
    CHECK(c.rows[3].algorithm == "avvo");
    const auto text = comparison_text(c);
    CHECK(text.find("1.000e-01") != std::string::npos);
    const auto csv = comparison_csv(c);
    CHECK(csv.find("v,vvo,3,0.10000000000000001,,") != std::string::npos);
}

TEST_CASE("identical summaries give identical rows", "[cli][compare]") {
    const auto s = fake("x", "macsac", 0.2);
    const auto c = compare({s, s});
    REQUIRE(c.rows.size() == 2);
    CHECK(c.rows[0].loss_mw.mean == c.rows[1].loss_mw.mean);
    CHECK(c.rows[0].loss_mw.std == c.rows[1].loss_mw.std);
    CHECK(c.rows[0].vvr.mean == c.rows[1].vvr.mean);
}

TEST_CASE("compare refuses mismatched conditions with an explanation", "[cli][compare]") {
    CHECK_THROWS_WITH(compare({fake("a", "macsac", 0.2), fake("b", "maddpg", 0.3, 7)}),
                      Catch::Matchers::ContainsSubstring("profile seeds differ"));
    auto other_window = fake("b", "maddpg", 0.3);
    other_window.conditions.first_final = 0;
    CHECK_THROWS_WITH(compare({fake("a", "macsac", 0.2), other_window}),
                      Catch::Matchers::ContainsSubstring("final episode windows differ"));
    auto online = fake("b", "maddpg", 0.3);
    online.schedule.t_s = online.schedule.t_u = 8;
    CHECK_THROWS_WITH(compare({fake("a", "macsac", 0.2), online}),
                      Catch::Matchers::ContainsSubstring("different training schedules"));
    auto vvo = fake("v", "vvo", 0.1);
    vvo.schedule.t_s = 8;  // oracles ignore the schedule
    CHECK_NOTHROW(compare({fake("a", "macsac", 0.2), vvo}));
}

TEST_CASE("summary json round trips through load_summary", "[cli][compare]") {
    const auto dir = scratch("summary_rt");
    auto s = fake("x", "macsac", 0.2);
    s.per_episode.push_back(EpisodeStat{3, Stat{0.1, 0.0, 0.1, 0.1}, Stat{0.0, 0.0, 0.0, 0.0}});
    std::ofstream(dir / "s.json") << summary_json(s).dump();
    const auto back = load_summary(dir / "s.json");
    CHECK(back.conditions == s.conditions);
    CHECK(back.final_loss_mw.mean == s.final_loss_mw.mean);
    CHECK(back.final_loss_mw.std == s.final_loss_mw.std);
    CHECK(back.per_episode.size() == 1);
}

// ---- plot data -------------------------------------------------------------------------------------

namespace {

std::vector<StepRow> series(std::initializer_list<double> losses) {
    std::vector<StepRow> out;
    std::size_t t = 0;
    for (double l : losses) out.push_back(StepRow{0, t++, l, l / 10.0, -l, true, false});
    return out;
}

}  // namespace

TEST_CASE("one log gives an envelope equal to the line", "[cli][plot]") {
    const auto p = plot_data({series({0.3, 0.2, 0.25})});
    REQUIRE(p.size() == 3);
    for (const auto& x : p) {
        CHECK(x.loss_min == x.loss_mean);
        CHECK(x.loss_max == x.loss_mean);
        CHECK(x.vvr_min == x.vvr_mean);
    }
}

TEST_CASE("three logs give an envelope containing the mean", "[cli][plot]") {
    const auto p = plot_data({series({0.3, 0.2, 0.1}), series({0.5, 0.1, 0.2}), series({0.1, 0.4, 0.3})});
    REQUIRE(p.size() == 3);
    for (const auto& x : p) {
        CHECK(x.runs == 3);
        CHECK(x.loss_min <= x.loss_mean);
        CHECK(x.loss_mean <= x.loss_max);
    }
    CHECK(p[0].loss_mean == Catch::Approx(0.3));
    CHECK(p[0].loss_min == 0.1);
    CHECK(p[0].loss_max == 0.5);
}

TEST_CASE("monotone inputs give a monotone series", "[cli][plot]") {
    const auto p = plot_data({series({0.5, 0.4, 0.3, 0.2}), series({0.6, 0.35, 0.31, 0.1})});
    for (std::size_t k = 1; k < p.size(); ++k) CHECK(p[k].loss_mean < p[k - 1].loss_mean);
}

TEST_CASE("plot data rejects empty logs", "[cli][plot]") {
    CHECK_THROWS_AS(plot_data({}), std::invalid_argument);
    CHECK_THROWS_AS(plot_data({series({0.1}), {}}), std::invalid_argument);
}

TEST_CASE("step CSV round trips exactly", "[cli][plot]") {
    auto rows = series({0.1, 1.0 / 3.0, 2e-17});
    rows[1].failed = true;
    rows[1].loss_mw = std::numeric_limits<double>::quiet_NaN();
    std::stringstream s;
    write_steps_csv(rows, s);
    const auto back = read_steps_csv(s);
    REQUIRE(back.size() == 3);
    CHECK(back[0].loss_mw == rows[0].loss_mw);
    CHECK(std::isnan(back[1].loss_mw));
    CHECK(back[1].failed);
    CHECK(back[2].loss_mw == rows[2].loss_mw);
}

// ---- command line ------------------------------------------------------------------------------------

TEST_CASE("command line exit codes", "[cli][tool]") {
    const auto dir = scratch("tool");
    std::ofstream(dir / "good.ini") << "[experiment]\nepisodes = 2\n[output]\nfinal_window = 1\n";
    std::ofstream(dir / "bad.ini") << "[hyper]\ngamma = 2\n";
    CHECK(run_cli("validate " + (dir / "good.ini").string()) == 0);
    CHECK(run_cli("validate " + (dir / "bad.ini").string()) == 1);
    CHECK(run_cli("validate " + (dir / "missing.ini").string()) == 1);
    CHECK(run_cli("run " + (dir / "bad.ini").string()) == 1);
    CHECK(run_cli("frobnicate") == 1);

    std::ofstream(dir / "a.json") << summary_json(fake("a", "macsac", 0.2)).dump();
    std::ofstream(dir / "b.json") << summary_json(fake("b", "maddpg", 0.3, 5)).dump();
    CHECK(run_cli("compare " + (dir / "a.json").string() + " " + (dir / "a.json").string()) == 0);
    CHECK(run_cli("compare " + (dir / "a.json").string() + " " + (dir / "b.json").string()) == 2);
    CHECK(run_cli("plotdata " + (dir / "nothing").string()) == 2);
    CHECK(run_cli("oracle builtin:ieee33 96") == 1);
    CHECK(run_cli("oracle /no/such/net.json 0") == 1);

    // A relative output dir lands under the override root.
    std::ofstream(dir / "tiny.ini") << "[experiment]\nalgorithm = vvo\nepisodes = 1\n[profile]\nsteps = 2\n"
                                       "[output]\ndir = rel/out\nfinal_window = 1\n";
    const std::string cmd = "VVC_OUTPUT_ROOT=" + dir.string() + " " + std::string(VVC_CLI_PATH) + " run -q " +
                            (dir / "tiny.ini").string() + " > /dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "rel" / "out" / "summary.json"));
    CHECK(run_cli("plotdata " + (dir / "rel" / "out").string() + " -o " + (dir / "plot.csv").string()) == 0);
    CHECK(slurp(dir / "plot.csv").rfind("step,episode,t,runs,loss_mean", 0) == 0);
}
