#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/baselines/csac.hpp"
#include "vvc/baselines/maddpg.hpp"
#include "vvc/baselines/vvo.hpp"
#include "vvc/cli/config.hpp"
#include "vvc/env/case.hpp"
#include "vvc/env/task.hpp"
#include "vvc/macsac/macsac.hpp"
#include "vvc/oldc/run.hpp"

namespace vvc::cli {

inline constexpr const char* kOutputRootVar = "VVC_OUTPUT_ROOT";

/// Output directory of a config: relative dirs resolve under $VVC_OUTPUT_ROOT when it is set.
inline std::filesystem::path output_dir(const ExperimentConfig& c) {
    const std::filesystem::path dir(c.output.dir);
    if (const char* root = std::getenv(kOutputRootVar); root != nullptr && *root != '\0' && dir.is_relative()) {
        return std::filesystem::path(root) / dir;
    }
    return dir;
}

/// One row of the per-step CSV.
struct StepRow {
    std::size_t episode = 0;
    std::size_t t = 0;
    double loss_mw = 0.0;
    double vvr = 0.0;
    double reward = 0.0;
    bool stochastic = false;
    bool failed = false;
};

/// Episode aggregate over its non-failed steps.
struct EpisodeRow {
    std::size_t episode = 0;
    std::size_t steps = 0;
    std::size_t failures = 0;
    double loss_mw = 0.0;
    double vvr = 0.0;
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::vector<EpisodeRow> episodes;
    std::size_t failures = 0;
    std::size_t updates = 0;
    double min_lambda = std::numeric_limits<double>::infinity();  // over every update; macsac/csac only
    double final_loss_mw = std::numeric_limits<double>::quiet_NaN();
    double final_vvr = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;
};

struct Stat {
    double mean = 0.0;
    std::optional<double> std;  // absent for deterministic methods
    double min = 0.0;
    double max = 0.0;
};

struct EpisodeStat {
    std::size_t episode = 0;
    Stat loss_mw;
    Stat vvr;
};

/// Conditions that must agree before two summaries may be compared.
struct Conditions {
    std::string network;
    std::uint64_t profile_seed = 0;
    std::string profile;            // serialized profile options
    std::size_t first_final = 0;    // episode indices of the final window, inclusive
    std::size_t last_final = 0;

    bool operator==(const Conditions&) const = default;
};

struct RunSummary {
    std::string name;
    std::string algorithm;
    Conditions conditions;
    oldc::OldcSchedule schedule;
    bool deterministic = false;
    std::vector<std::uint64_t> seeds;
    std::vector<EpisodeStat> per_episode;
    Stat final_loss_mw;
    Stat final_vvr;
    std::vector<SeedResult> seed_results;
    double wall_seconds = 0.0;
};

// ---- CSV helpers ----------------------------------------------------------------------------

namespace detail {

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return s.str();
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("bad number '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace detail

inline constexpr const char* kStepHeader = "episode,t,loss_mw,vvr,reward,stochastic,failed";

inline void write_steps_csv(const std::vector<StepRow>& rows, std::ostream& out) {
    out << kStepHeader << '\n';
    for (const auto& r : rows) {
        out << r.episode << ',' << r.t << ',' << detail::num(r.loss_mw) << ',' << detail::num(r.vvr) << ','
            << detail::num(r.reward) << ',' << (r.stochastic ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
    }
}

inline std::vector<StepRow> read_steps_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kStepHeader) throw std::runtime_error("not a per-step CSV (bad header)");
    std::vector<StepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 7) throw std::runtime_error("line " + std::to_string(lineno) + ": expected 7 columns");
        StepRow r;
        r.episode = std::stoul(c[0]);
        r.t = std::stoul(c[1]);
        r.loss_mw = detail::parse_double(c[2]);
        r.vvr = detail::parse_double(c[3]);
        r.reward = detail::parse_double(c[4]);
        r.stochastic = c[5] == "1";
        r.failed = c[6] == "1";
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<StepRow> read_steps_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return read_steps_csv(in);
}

/// Episode means in order of first appearance. Failed steps count as failures only.
inline std::vector<EpisodeRow> episode_rows(const std::vector<StepRow>& steps) {
    std::vector<EpisodeRow> out;
    for (const auto& s : steps) {
        if (out.empty() || out.back().episode != s.episode) out.push_back(EpisodeRow{s.episode});
        auto& e = out.back();
        if (s.failed) {
            ++e.failures;
            continue;
        }
        ++e.steps;
        e.loss_mw += s.loss_mw;
        e.vvr += s.vvr;
    }
    for (auto& e : out) {
        const double n = static_cast<double>(e.steps);
        e.loss_mw = e.steps > 0 ? e.loss_mw / n : std::numeric_limits<double>::quiet_NaN();
        e.vvr = e.steps > 0 ? e.vvr / n : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

inline constexpr const char* kEpisodeHeader = "episode,steps,failures,loss_mw,vvr";

inline void write_episodes_csv(const std::vector<EpisodeRow>& rows, std::ostream& out) {
    out << kEpisodeHeader << '\n';
    for (const auto& e : rows) {
        out << e.episode << ',' << e.steps << ',' << e.failures << ',' << detail::num(e.loss_mw) << ','
            << detail::num(e.vvr) << '\n';
    }
}

/// Mean of the last `window` episode means, skipping episodes without a completed step.
inline std::pair<double, double> final_window_means(const std::vector<EpisodeRow>& rows, std::size_t window) {
    double loss = 0.0;
    double vvr = 0.0;
    std::size_t n = 0;
    const std::size_t start = rows.size() > window ? rows.size() - window : 0;
    for (std::size_t k = start; k < rows.size(); ++k) {
        if (rows[k].steps == 0) continue;
        loss += rows[k].loss_mw;
        vvr += rows[k].vvr;
        ++n;
    }
    if (n == 0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    return {loss / static_cast<double>(n), vvr / static_cast<double>(n)};
}

/// Across-seed statistic; the std is the sample standard deviation (zero for one value).
inline Stat make_stat(const std::vector<double>& v, bool deterministic) {
    Stat s;
    if (v.empty()) {
        s.mean = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    double sum = 0.0;
    s.min = v.front();
    s.max = v.front();
    for (double x : v) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(v.size());
    if (!deterministic) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    return s;
}

// ---- learners -----------------------------------------------------------------------------------

inline macsac::MacsacConfig macsac_config(const Hyper& h, std::size_t agents, std::uint64_t seed) {
    macsac::MacsacConfig c;
    c.hidden = h.hidden;
    c.layers = h.layers;
    c.gamma = h.gamma;
    c.eta = h.eta;
    c.lr = h.lr;
    c.lambda_lr = h.lambda_lr;
    c.lambda_init = h.lambda_init;
    c.learn_lambda = h.learn_lambda;
    c.twin_critics = h.twin_critics;
    c.batch_size = h.batch;
    c.buffer_capacity = h.buffer;
    c.reward_scale = h.reward_scale;
    c.cost_scale = h.cost_scale;
    c.seed = seed;
    for (std::size_t i = 0; i < agents; ++i) {
        c.alpha.push_back(per_agent(h.alpha, i));
        c.cost_bound.push_back(per_agent(h.cost_bound, i));
    }
    return c;
}

inline baselines::MaddpgConfig maddpg_config(const Hyper& h, std::uint64_t seed) {
    baselines::MaddpgConfig c;
    c.hidden = h.hidden;
    c.layers = h.layers;
    c.gamma = h.gamma;
    c.eta = h.eta;
    c.lr = h.lr;
    c.noise = h.noise;
    c.penalty = h.penalty;
    c.batch_size = h.batch;
    c.buffer_capacity = h.buffer;
    c.reward_scale = h.reward_scale;
    c.seed = seed;
    return c;
}

template <class T>
std::unique_ptr<macsac::Learner> make_learner_as(Algorithm a, const Hyper& h, const macsac::JointLayout& layout,
                                                 std::uint64_t seed) {
    switch (a) {
        case Algorithm::macsac:
            return std::make_unique<macsac::Macsac<T>>(layout, macsac_config(h, layout.agents(), seed));
        case Algorithm::csac:
            return std::make_unique<baselines::Csac<T>>(layout, macsac_config(h, layout.agents(), seed));
        case Algorithm::maddpg:
            return std::make_unique<baselines::Maddpg<T>>(layout, maddpg_config(h, seed));
        default:
            throw std::invalid_argument(std::string("no learner for algorithm ") + algorithm_name(a));
    }
}

inline std::unique_ptr<macsac::Learner> make_learner(Algorithm a, const Hyper& h, const macsac::JointLayout& layout,
                                                     std::uint64_t seed) {
    return h.precision == "double" ? make_learner_as<double>(a, h, layout, seed)
                                   : make_learner_as<float>(a, h, layout, seed);
}

inline macsac::JointLayout layout_of(const env::Task& task) {
    macsac::JointLayout l;
    for (std::size_t i = 0; i < task.agent_count(); ++i) {
        l.obs_dims.push_back(task.obs_dim(i));
        l.act_dims.push_back(task.act_dim(i));
    }
    return l;
}

/// Smallest multiplier across agents, or +inf for learners without multipliers.
inline double min_lambda(const macsac::TrainMetrics& m, Algorithm a) {
    double out = std::numeric_limits<double>::infinity();
    if (a != Algorithm::macsac && a != Algorithm::csac) return out;
    for (const auto& ag : m.agents) out = std::min(out, ag.lambda);
    return out;
}

/// Feeder task of a config with the episode offset folded into the profile seed.
inline std::shared_ptr<env::FeederTask> make_feeder(const ExperimentConfig& c) {
    auto cs = env::load_case(c.network);
    env::EnvConfig ec;
    for (std::size_t i = 0; i < cs.areas.size(); ++i) ec.beta.push_back(per_agent(c.hyper.beta, i));
    return std::make_shared<env::FeederTask>(std::move(cs), c.profile, c.profile_seed + c.episode_offset, ec);
}

// ---- per-seed runs -------------------------------------------------------------------------------

struct SeedArtifacts {
    std::vector<StepRow> steps;
    std::string events;      // JSONL, empty for oracles
    std::string train;       // per-update CSV, empty for oracles
    nlohmann::json checkpoint;
};

namespace detail {

inline SeedArtifacts run_learning_seed(const ExperimentConfig& c, std::uint64_t seed, SeedResult& res) {
    auto feeder = make_feeder(c);
    std::shared_ptr<env::Task> task = feeder;
    if (c.algorithm == Algorithm::csac) task = std::make_shared<env::CentralizedView>(feeder, per_agent(c.hyper.beta, 0));
    auto learner = make_learner(c.algorithm, c.hyper, layout_of(*task), seed);

    SeedArtifacts art;
    std::ostringstream train;
    train << "time,update,agent,critic_loss,cost_critic_loss,actor_loss,entropy,lambda\n";
    oldc::RunOptions opts;
    opts.episodes = c.episodes;
    opts.seed = seed;
    opts.on_train = [&](std::int64_t time, const macsac::TrainMetrics& m) {
        if (!m.trained) return;
        res.min_lambda = std::min(res.min_lambda, min_lambda(m, c.algorithm));
        for (std::size_t i = 0; i < m.agents.size(); ++i) {
            const auto& a = m.agents[i];
            train << time << ',' << m.update << ',' << i << ',' << num(a.critic_loss) << ','
                  << num(a.cost_critic_loss) << ',' << num(a.actor_loss) << ',' << num(a.entropy) << ','
                  << num(a.lambda) << '\n';
        }
    };
    const auto log = oldc::run(c.schedule, *task, *learner, opts);
    for (const auto& s : log.steps) {
        art.steps.push_back(StepRow{s.episode + c.episode_offset, s.t, s.loss_mw, s.vvr, s.reward, s.stochastic,
                                    s.failed});
    }
    if (c.output.events) {
        std::ostringstream ev;
        oldc::write_event_log(log, ev);
        art.events = ev.str();
    }
    art.train = train.str();
    if (c.output.checkpoint) art.checkpoint = learner->checkpoint();
    res.updates = log.updates;
    return art;
}

inline void append_oracle_episode(const std::vector<baselines::OracleResult>& results, std::size_t episode,
                                  std::vector<StepRow>& out) {
    for (std::size_t t = 0; t < results.size(); ++t) {
        const auto& r = results[t];
        out.push_back(StepRow{episode, t, r.loss_mw, r.vvr, -r.loss_mw, false, false});
    }
}

inline baselines::VvoOptions vvo_options(const OracleConfig& o, std::uint64_t seed) {
    baselines::VvoOptions v;
    v.penalty = o.penalty;
    v.starts = o.starts;
    v.max_iterations = o.max_iterations;
    v.tolerance = o.tolerance;
    v.seed = seed;
    return v;
}

inline SeedArtifacts run_oracle_seed(const ExperimentConfig& c, std::uint64_t seed, const std::function<void(std::size_t)>& progress) {
    const auto feeder = make_feeder(c);
    const auto& cs = feeder->env().case_data();
    const auto opts = vvo_options(c.oracle, seed);
    SeedArtifacts art;
    std::optional<grid::NetworkModel> model;
    env::Profile planned;
    if (c.algorithm == Algorithm::avvo) {
        baselines::AvvoOptions ao;
        ao.admittance_sigma = c.oracle.admittance_sigma;
        ao.seed = seed;
        model = baselines::perturbed_network(cs.network, ao);
        planned = env::forecast_profile(cs, c.profile);
    }
    for (std::size_t e = 0; e < c.episodes; ++e) {
        const auto realized = feeder->profile_for(e);
        const auto results = c.algorithm == Algorithm::vvo
                                 ? baselines::vvo_episode(cs, realized, opts)
                                 : baselines::avvo_episode(cs, realized, *model, planned, opts);
        append_oracle_episode(results, e + c.episode_offset, art.steps);
        if (progress) progress(e);
    }
    return art;
}

}  // namespace detail

/// Runs one seed and writes its artifacts under `dir`. Errors are captured in the result.
inline SeedResult run_seed(const ExperimentConfig& c, std::uint64_t seed, const std::filesystem::path& dir,
                           const std::function<void(std::size_t)>& progress = {}) {
    SeedResult res;
    res.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        std::filesystem::create_directories(dir);
        const auto art = is_oracle(c.algorithm) ? detail::run_oracle_seed(c, seed, progress)
                                                : detail::run_learning_seed(c, seed, res);
        std::ostringstream steps;
        write_steps_csv(art.steps, steps);
        detail::write_file(dir / "steps.csv", steps.str());
        res.episodes = episode_rows(art.steps);
        std::ostringstream eps;
        write_episodes_csv(res.episodes, eps);
        detail::write_file(dir / "episodes.csv", eps.str());
        if (!art.events.empty()) detail::write_file(dir / "events.jsonl", art.events);
        if (!art.train.empty()) detail::write_file(dir / "train.csv", art.train);
        if (!art.checkpoint.is_null()) detail::write_file(dir / "checkpoint.json", art.checkpoint.dump());
        for (const auto& e : res.episodes) res.failures += e.failures;
        std::tie(res.final_loss_mw, res.final_vvr) = final_window_means(res.episodes, c.output.final_window);
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

inline Conditions conditions_of(const ExperimentConfig& c) {
    Conditions k;
    k.network = c.network;
    k.profile_seed = c.profile_seed;
    k.profile = profile_lines(c.profile);
    k.last_final = c.episode_offset + c.episodes - 1;
    k.first_final = k.last_final + 1 - c.output.final_window;
    return k;
}

/// Aggregates seed results. Only successful seeds enter the statistics.
inline RunSummary summarize(const ExperimentConfig& c, const std::vector<SeedResult>& seeds) {
    RunSummary s;
    s.name = c.name;
    s.algorithm = algorithm_name(c.algorithm);
    s.conditions = conditions_of(c);
    s.schedule = c.schedule;
    s.deterministic = c.algorithm == Algorithm::vvo;
    s.seed_results = seeds;
    std::vector<double> fl;
    std::vector<double> fv;
    std::vector<const SeedResult*> ok;
    for (const auto& r : seeds) {
        s.seeds.push_back(r.seed);
        s.wall_seconds += r.wall_seconds;
        if (!r.ok) continue;
        ok.push_back(&r);
        fl.push_back(r.final_loss_mw);
        fv.push_back(r.final_vvr);
    }
    s.final_loss_mw = make_stat(fl, s.deterministic);
    s.final_vvr = make_stat(fv, s.deterministic);
    for (std::size_t e = 0; e < c.episodes; ++e) {
        const std::size_t index = e + c.episode_offset;
        std::vector<double> l;
        std::vector<double> v;
        for (const auto* r : ok) {
            for (const auto& row : r->episodes) {
                if (row.episode == index && row.steps > 0) {
                    l.push_back(row.loss_mw);
                    v.push_back(row.vvr);
                }
            }
        }
        if (l.empty()) continue;
        s.per_episode.push_back(EpisodeStat{index, make_stat(l, s.deterministic), make_stat(v, s.deterministic)});
    }
    return s;
}

// ---- summary JSON --------------------------------------------------------------------------------

inline nlohmann::json stat_json(const Stat& s) {
    nlohmann::json j{{"mean", s.mean}, {"min", s.min}, {"max", s.max}};
    if (s.std) j["std"] = *s.std;
    return j;
}

inline Stat stat_from_json(const nlohmann::json& j) {
    Stat s;
    s.mean = j.at("mean").get<double>();
    s.min = j.at("min").get<double>();
    s.max = j.at("max").get<double>();
    if (j.contains("std")) s.std = j.at("std").get<double>();
    return s;
}

inline nlohmann::json summary_json(const RunSummary& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["algorithm"] = s.algorithm;
    j["conditions"] = {{"network", s.conditions.network},
                       {"profile_seed", s.conditions.profile_seed},
                       {"profile", s.conditions.profile},
                       {"final_episodes", {s.conditions.first_final, s.conditions.last_final}}};
    j["schedule"] = {{"dt", s.schedule.dt},       {"t_s", s.schedule.t_s},
                     {"t_u", s.schedule.t_u},     {"m", s.schedule.m},
                     {"comm_delay", s.schedule.comm_delay}, {"drop_prob", s.schedule.drop_prob}};
    j["deterministic"] = s.deterministic;
    j["seeds"] = s.seeds;
    j["final"] = {{"loss_mw", stat_json(s.final_loss_mw)}, {"vvr", stat_json(s.final_vvr)}};
    auto& eps = j["per_episode"] = nlohmann::json::array();
    for (const auto& e : s.per_episode) {
        eps.push_back({{"episode", e.episode}, {"loss_mw", stat_json(e.loss_mw)}, {"vvr", stat_json(e.vvr)}});
    }
    auto& runs = j["seed_results"] = nlohmann::json::array();
    for (const auto& r : s.seed_results) {
        nlohmann::json x{{"seed", r.seed}, {"ok", r.ok}, {"failures", r.failures}, {"updates", r.updates},
                         {"wall_seconds", r.wall_seconds}};
        if (!r.ok) x["error"] = r.error;
        if (r.ok) {
            x["final_loss_mw"] = r.final_loss_mw;
            x["final_vvr"] = r.final_vvr;
        }
        if (std::isfinite(r.min_lambda)) x["min_lambda"] = r.min_lambda;
        runs.push_back(std::move(x));
    }
    j["wall_seconds"] = s.wall_seconds;
    return j;
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
    RunSummary s;
    try {
        s.name = j.at("name").get<std::string>();
        s.algorithm = j.at("algorithm").get<std::string>();
        const auto& k = j.at("conditions");
        s.conditions.network = k.at("network").get<std::string>();
        s.conditions.profile_seed = k.at("profile_seed").get<std::uint64_t>();
        s.conditions.profile = k.at("profile").get<std::string>();
        s.conditions.first_final = k.at("final_episodes").at(0).get<std::size_t>();
        s.conditions.last_final = k.at("final_episodes").at(1).get<std::size_t>();
        const auto& sc = j.at("schedule");
        s.schedule.dt = sc.at("dt").get<std::int64_t>();
        s.schedule.t_s = sc.at("t_s").get<std::int64_t>();
        s.schedule.t_u = sc.at("t_u").get<std::int64_t>();
        s.schedule.m = sc.at("m").get<std::size_t>();
        s.schedule.comm_delay = sc.at("comm_delay").get<std::int64_t>();
        s.schedule.drop_prob = sc.at("drop_prob").get<double>();
        s.deterministic = j.at("deterministic").get<bool>();
        s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        s.final_loss_mw = stat_from_json(j.at("final").at("loss_mw"));
        s.final_vvr = stat_from_json(j.at("final").at("vvr"));
        for (const auto& e : j.at("per_episode")) {
            s.per_episode.push_back(EpisodeStat{e.at("episode").get<std::size_t>(), stat_from_json(e.at("loss_mw")),
                                                stat_from_json(e.at("vvr"))});
        }
        s.wall_seconds = j.value("wall_seconds", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed summary: ") + e.what());
    }
    return s;
}

inline RunSummary load_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open summary '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("cannot parse summary '" + path.string() + "': " + e.what());
    }
    return summary_from_json(j);
}

// ---- experiment ----------------------------------------------------------------------------------

struct ExperimentOptions {
    std::function<void(const std::string&)> progress;  // one line per finished seed or oracle episode
};

/// Runs every seed in sequence (independent outputs under seed_<k>/) and writes config.ini,
/// episodes.csv (across-seed statistics) and summary.json at the output root.
inline RunSummary run_experiment(const ExperimentConfig& c, const ExperimentOptions& opts = {}) {
    validate(c);
    const auto root = output_dir(c);
    std::filesystem::create_directories(root);
    detail::write_file(root / "config.ini", serialize_config(c));
    std::vector<SeedResult> results;
    // The VVO oracle does not depend on the seed; it runs once.
    const std::vector<std::uint64_t> seeds =
        c.algorithm == Algorithm::vvo ? std::vector<std::uint64_t>{c.seeds.front()} : c.seeds;
    for (auto seed : seeds) {
        const auto progress = [&](std::size_t e) {
            if (opts.progress) opts.progress("seed " + std::to_string(seed) + " episode " + std::to_string(e + 1));
        };
        results.push_back(run_seed(c, seed, root / ("seed_" + std::to_string(seed)), progress));
        if (opts.progress) {
            const auto& r = results.back();
            opts.progress("seed " + std::to_string(seed) +
                          (r.ok ? " done: final loss " + detail::num(r.final_loss_mw) + " MW, vvr " + detail::num(r.final_vvr)
                                : " failed: " + r.error));
        }
    }
    auto summary = summarize(c, results);
    std::ostringstream eps;
    eps << "episode,loss_mean,loss_std,loss_min,loss_max,vvr_mean,vvr_std,vvr_min,vvr_max\n";
    for (const auto& e : summary.per_episode) {
        eps << e.episode << ',' << detail::num(e.loss_mw.mean) << ',' << detail::num(e.loss_mw.std.value_or(0.0)) << ','
            << detail::num(e.loss_mw.min) << ',' << detail::num(e.loss_mw.max) << ',' << detail::num(e.vvr.mean) << ','
            << detail::num(e.vvr.std.value_or(0.0)) << ',' << detail::num(e.vvr.min) << ',' << detail::num(e.vvr.max)
            << '\n';
    }
    detail::write_file(root / "episodes.csv", eps.str());
    detail::write_file(root / "summary.json", summary_json(summary).dump(2) + "\n");
    return summary;
}

}  // namespace vvc::cli
