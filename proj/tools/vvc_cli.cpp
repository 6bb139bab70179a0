// Command-line front end: run experiments, compare summaries, emit plot data, validate
// configs and solve single oracle steps.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vvc/baselines/vvo.hpp"
#include "vvc/cli/config.hpp"
#include "vvc/cli/experiment.hpp"
#include "vvc/cli/report.hpp"
#include "vvc/env/case.hpp"
#include "vvc/env/control.hpp"
#include "vvc/env/profile.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

int cmd_run(const std::string& path, bool quiet) {
    vvc::cli::ExperimentConfig cfg;
    try {
        cfg = vvc::cli::load_config(path);
    } catch (const vvc::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    vvc::cli::ExperimentOptions opts;
    if (!quiet) opts.progress = [](const std::string& line) { std::cerr << line << '\n'; };
    try {
        const auto summary = vvc::cli::run_experiment(cfg, opts);
        std::cout << vvc::cli::comparison_text(vvc::cli::compare({summary}));
        std::cout << "outputs in " << vvc::cli::output_dir(cfg).string() << '\n';
        for (const auto& r : summary.seed_results) {
            if (!r.ok) {
                std::cerr << "seed " << r.seed << " failed: " << r.error << '\n';
                return kRuntimeError;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& csv) {
    try {
        std::vector<vvc::cli::RunSummary> summaries;
        for (const auto& p : paths) {
            const std::filesystem::path path(p);
            summaries.push_back(vvc::cli::load_summary(std::filesystem::is_directory(path) ? path / "summary.json" : path));
        }
        const auto table = vvc::cli::compare(summaries);
        std::cout << vvc::cli::comparison_text(table);
        if (!csv.empty()) {
            std::ofstream out(csv);
            if (!out) throw std::runtime_error("cannot write '" + csv + "'");
            out << vvc::cli::comparison_csv(table);
        }
    } catch (const std::exception& e) {
        std::cerr << "compare failed: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

int cmd_plotdata(const std::vector<std::string>& inputs, const std::string& output) {
    try {
        std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
        std::vector<std::vector<vvc::cli::StepRow>> logs;
        for (const auto& p : vvc::cli::resolve_step_logs(paths)) logs.push_back(vvc::cli::read_steps_csv(p));
        const auto csv = vvc::cli::plot_csv(vvc::cli::plot_data(logs));
        if (output.empty()) {
            std::cout << csv;
        } else {
            std::ofstream out(output);
            if (!out) throw std::runtime_error("cannot write '" + output + "'");
            out << csv;
        }
    } catch (const std::exception& e) {
        std::cerr << "plotdata failed: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

int cmd_validate(const std::string& path, bool print) {
    try {
        const auto cfg = vvc::cli::load_config(path);
        if (print) {
            std::cout << vvc::cli::serialize_config(cfg);
        } else {
            std::cout << path << ": ok\n";
        }
    } catch (const vvc::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    return kOk;
}

int cmd_oracle(const std::string& network, std::size_t step, std::uint64_t profile_seed, std::size_t episode) {
    vvc::env::Case c;
    try {
        c = vvc::env::load_case(network);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    try {
        const vvc::env::ProfileOptions po;
        if (step >= po.steps) {
            std::cerr << "config error: step must be below " << po.steps << '\n';
            return kConfigError;
        }
        const auto profile = vvc::env::synthetic_profile(c, profile_seed + episode, po);
        const auto prob = vvc::env::make_control_problem(c, profile, step);
        const auto r = vvc::baselines::vvo_solve(prob);
        const auto none = vvc::baselines::evaluate_actions(prob, std::vector<double>(r.actions.size(), 0.0), 0.0);
        nlohmann::json j{{"network", network},     {"profile_seed", profile_seed}, {"episode", episode},
                         {"step", step},           {"actions", r.actions},         {"setpoints_pu", r.setpoints},
                         {"loss_mw", r.loss_mw},   {"vvr", r.vvr},                 {"objective", r.objective},
                         {"iterations", r.iterations}, {"converged", r.converged}};
        if (none.ok) j["uncontrolled"] = {{"loss_mw", none.loss_mw}, {"vvr", none.vvr}};
        std::cout << j.dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "oracle failed: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent Volt-VAR control experiments"};
    app.require_subcommand(1);

    bool quiet = false;
    std::string run_config;
    auto* run = app.add_subcommand("run", "Run every seed of an experiment config");
    run->add_option("config", run_config, "INI experiment config")->required();
    run->add_flag("-q,--quiet", quiet, "Suppress progress lines");

    std::vector<std::string> summaries;
    std::string compare_csv;
    auto* cmp = app.add_subcommand("compare", "Tabulate final-episode statistics of several runs");
    cmp->add_option("summary", summaries, "summary.json files or run directories")->required();
    cmp->add_option("--csv", compare_csv, "Also write the table as CSV");

    std::vector<std::string> logs;
    std::string plot_out;
    auto* plot = app.add_subcommand("plotdata", "Per-step mean and min/max envelope across runs");
    plot->add_option("runlog", logs, "steps.csv files or run directories")->required();
    plot->add_option("-o,--output", plot_out, "Output CSV (default stdout)");

    std::string validate_config;
    bool print = false;
    auto* val = app.add_subcommand("validate", "Check a config and report the first invalid field");
    val->add_option("config", validate_config, "INI experiment config")->required();
    val->add_flag("--print", print, "Print the fully defaulted config");

    std::string network;
    std::size_t step = 0;
    std::uint64_t profile_seed = 1000;
    std::size_t episode = 0;
    auto* orc = app.add_subcommand("oracle", "Solve one step of a synthetic day with the VVO oracle");
    orc->add_option("network", network, "builtin:ieee33 or a JSON case file")->required();
    orc->add_option("step", step, "Step within the day")->required();
    orc->add_option("--profile-seed", profile_seed, "Synthetic profile seed");
    orc->add_option("--episode", episode, "Episode (day) index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (*run) return cmd_run(run_config, quiet);
    if (*cmp) return cmd_compare(summaries, compare_csv);
    if (*plot) return cmd_plotdata(logs, plot_out);
    if (*val) return cmd_validate(validate_config, print);
    if (*orc) return cmd_oracle(network, step, profile_seed, episode);
    return kConfigError;
}
