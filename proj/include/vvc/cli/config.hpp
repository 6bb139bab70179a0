#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/env/profile.hpp"
#include "vvc/oldc/schedule.hpp"

namespace vvc::cli {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
  public:
    ConfigError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(field) {}
    [[nodiscard]] const std::string& field() const { return field_; }

  private:
    std::string field_;
};

enum class Algorithm { macsac, maddpg, csac, vvo, avvo };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::macsac: return "macsac";
        case Algorithm::maddpg: return "maddpg";
        case Algorithm::csac: return "csac";
        case Algorithm::vvo: return "vvo";
        case Algorithm::avvo: return "avvo";
    }
    return "unknown";
}

inline bool is_oracle(Algorithm a) { return a == Algorithm::vvo || a == Algorithm::avvo; }

/// Learner hyperparameters. Vector fields hold one value per agent or a single shared value.
struct Hyper {
    std::size_t hidden = 256;
    std::size_t layers = 2;
    double gamma = 0.99;
    double eta = 0.995;
    double lr = 1e-3;
    double lambda_lr = 1e-3;
    double lambda_init = 0.0;
    bool learn_lambda = true;
    std::vector<double> alpha{0.1};
    std::vector<double> cost_bound{0.0};
    std::vector<double> beta{1.0};
    std::size_t batch = 64;
    std::size_t buffer = 400000;
    double reward_scale = 1.0;
    double cost_scale = 1.0;
    bool twin_critics = false;
    double noise = 0.07;     // maddpg exploration
    double penalty = 10.0;   // maddpg cost weight folded into the reward
    std::string precision = "float";

    bool operator==(const Hyper&) const = default;
};

struct OracleConfig {
    double penalty = 1000.0;
    std::size_t starts = 2;
    std::size_t max_iterations = 100;
    double tolerance = 1e-6;
    double admittance_sigma = 0.2;

    bool operator==(const OracleConfig&) const = default;
};

struct OutputConfig {
    std::string dir = "runs/experiment";
    std::size_t final_window = 10;  // trailing episodes summarized as the final result
    bool checkpoint = true;
    bool events = true;

    bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string network = "builtin:ieee33";
    Algorithm algorithm = Algorithm::macsac;
    std::size_t episodes = 10;
    std::size_t episode_offset = 0;  // first profile episode index
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t profile_seed = 1000;
    env::ProfileOptions profile;
    oldc::OldcSchedule schedule;
    Hyper hyper;
    OracleConfig oracle;
    OutputConfig output;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Per-agent value of a one-or-per-agent list.
inline double per_agent(const std::vector<double>& v, std::size_t agent) {
    return v.size() == 1 ? v.front() : v.at(agent);
}

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

template <class V>
V parse_number(const std::string& field, const std::string& text) {
    std::istringstream in(trim(text));
    V v{};
    if constexpr (std::is_unsigned_v<V>) {
        if (!text.empty() && trim(text).front() == '-') throw ConfigError(field, "must be nonnegative");
    }
    in >> v;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError(field, "cannot parse '" + text + "' as a number");
    return v;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(field, "expected true or false, got '" + text + "'");
}

/// Reads section.key into `out` when present; records the key as consumed.
class Reader {
  public:
    explicit Reader(const ptree& root) : root_(root) {}

    template <class V>
    void number(const std::string& path, V& out) {
        if (auto s = get(path)) out = parse_number<V>(path, *s);
    }
    void flag(const std::string& path, bool& out) {
        if (auto s = get(path)) out = parse_bool(path, *s);
    }
    void text(const std::string& path, std::string& out) {
        if (auto s = get(path)) out = trim(*s);
    }
    template <class V>
    void list(const std::string& path, std::vector<V>& out) {
        if (auto s = get(path)) {
            out.clear();
            for (const auto& item : split_list(*s)) out.push_back(parse_number<V>(path, item));
        }
    }

    /// Rejects keys nobody asked for, so typos do not silently fall back to defaults.
    void check_unknown() const {
        for (const auto& [section, body] : root_) {
            if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of any section");
            for (const auto& [key, value] : body) {
                const auto path = section + "." + key;
                if (!consumed_.contains(path)) throw ConfigError(path, "unknown key");
            }
        }
    }

  private:
    std::optional<std::string> get(const std::string& path) {
        consumed_.insert(path);
        if (auto v = root_.get_optional<std::string>(ptree::path_type(path, '.'))) return *v;
        return std::nullopt;
    }

    const ptree& root_;
    std::set<std::string> consumed_;
};

inline std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return s.str();
}

template <class V>
std::string join(const std::vector<V>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k > 0) out += ", ";
        if constexpr (std::is_floating_point_v<V>) {
            out += format_double(v[k]);
        } else {
            out += std::to_string(v[k]);
        }
    }
    return out;
}

inline Algorithm parse_algorithm(const std::string& s) {
    for (auto a : {Algorithm::macsac, Algorithm::maddpg, Algorithm::csac, Algorithm::vvo, Algorithm::avvo}) {
        if (s == algorithm_name(a)) return a;
    }
    throw ConfigError("experiment.algorithm", "unknown algorithm '" + s + "' (macsac, maddpg, csac, vvo, avvo)");
}

inline void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
}

}  // namespace detail

/// Checks every documented range. Field paths use the config's section.key names.
inline void validate(const ExperimentConfig& c) {
    using detail::require;
    require(!c.name.empty(), "experiment.name", "must not be empty");
    require(c.network.rfind("builtin:", 0) == 0 ? c.network == "builtin:ieee33" : std::filesystem::exists(c.network),
            "experiment.network", "'" + c.network + "' is neither builtin:ieee33 nor an existing file");
    require(c.episodes >= 1, "experiment.episodes", "must be at least 1");
    require(!c.seeds.empty(), "experiment.seeds", "needs at least one seed");
    {
        std::set<std::uint64_t> unique(c.seeds.begin(), c.seeds.end());
        require(unique.size() == c.seeds.size(), "experiment.seeds", "seeds must be distinct");
    }

    const auto& p = c.profile;
    require(p.steps >= 1, "profile.steps", "must be at least 1");
    require(p.load_scale > 0.0, "profile.load_scale", "must be positive");
    require(p.load_noise >= 0.0, "profile.load_noise", "must be nonnegative");
    require(p.day_spread >= 0.0 && p.day_spread < 1.0, "profile.day_spread", "must lie in [0, 1)");
    require(p.pv_peak >= 0.0 && p.pv_peak <= 1.0, "profile.pv_peak", "must lie in [0, 1]");
    require(p.cloud_depth >= 0.0 && p.cloud_depth <= 1.0, "profile.cloud_depth", "must lie in [0, 1]");
    require(p.cloud_persistence >= 0.0 && p.cloud_persistence < 1.0, "profile.cloud_persistence",
            "must lie in [0, 1)");

    try {
        oldc::validate(c.schedule);
    } catch (const oldc::ScheduleError& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(' ');
        throw ConfigError(msg.substr(0, colon), msg.substr(colon + 1));
    }

    const auto& h = c.hyper;
    require(h.hidden >= 1 && h.hidden <= 4096, "hyper.hidden", "must lie in [1, 4096]");
    require(h.layers >= 1 && h.layers <= 8, "hyper.layers", "must lie in [1, 8]");
    require(h.gamma >= 0.0 && h.gamma < 1.0, "hyper.gamma", "must lie in [0, 1)");
    require(h.eta >= 0.0 && h.eta <= 1.0, "hyper.eta", "must lie in [0, 1]");
    require(h.lr > 0.0 && h.lr <= 1.0, "hyper.lr", "must lie in (0, 1]");
    require(h.lambda_lr >= 0.0, "hyper.lambda_lr", "must be nonnegative");
    require(h.lambda_init >= 0.0, "hyper.lambda_init", "must be nonnegative");
    require(!h.alpha.empty(), "hyper.alpha", "needs one shared value or one per agent");
    for (double a : h.alpha) require(a >= 0.0, "hyper.alpha", "must be nonnegative");
    require(!h.cost_bound.empty(), "hyper.cost_bound", "needs one shared value or one per agent");
    for (double b : h.cost_bound) require(b >= 0.0, "hyper.cost_bound", "must be nonnegative");
    require(!h.beta.empty(), "hyper.beta", "needs one shared value or one per agent");
    for (double b : h.beta) require(b >= 0.0, "hyper.beta", "must be nonnegative");
    require(h.batch >= 1, "hyper.batch", "must be at least 1");
    require(h.buffer >= h.batch, "hyper.buffer", "must hold at least one batch");
    require(h.reward_scale > 0.0, "hyper.reward_scale", "must be positive");
    require(h.cost_scale > 0.0, "hyper.cost_scale", "must be positive");
    require(h.noise >= 0.0, "hyper.noise", "must be nonnegative");
    require(h.penalty >= 0.0, "hyper.penalty", "must be nonnegative");
    require(h.precision == "float" || h.precision == "double", "hyper.precision", "must be float or double");

    require(c.oracle.penalty >= 0.0, "oracle.penalty", "must be nonnegative");
    require(c.oracle.starts >= 1, "oracle.starts", "must be at least 1");
    require(c.oracle.max_iterations >= 1, "oracle.max_iterations", "must be at least 1");
    require(c.oracle.tolerance > 0.0, "oracle.tolerance", "must be positive");
    require(c.oracle.admittance_sigma >= 0.0 && c.oracle.admittance_sigma < 1.0, "oracle.admittance_sigma",
            "must lie in [0, 1)");

    require(!c.output.dir.empty(), "output.dir", "must not be empty");
    require(c.output.final_window >= 1, "output.final_window", "must be at least 1");
    require(c.output.final_window <= c.episodes, "output.final_window", "exceeds experiment.episodes");
}

/// Parses an INI document. Missing keys keep their defaults; unknown keys are errors.
inline ExperimentConfig parse_config(std::istream& in) {
    detail::ptree root;
    try {
        boost::property_tree::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    ExperimentConfig c;
    detail::Reader r(root);
    r.text("experiment.name", c.name);
    r.text("experiment.network", c.network);
    std::string algo = algorithm_name(c.algorithm);
    r.text("experiment.algorithm", algo);
    c.algorithm = detail::parse_algorithm(algo);
    r.number("experiment.episodes", c.episodes);
    r.number("experiment.episode_offset", c.episode_offset);
    r.list("experiment.seeds", c.seeds);

    r.number("profile.seed", c.profile_seed);
    r.number("profile.steps", c.profile.steps);
    r.number("profile.load_scale", c.profile.load_scale);
    r.number("profile.load_base", c.profile.load_base);
    r.number("profile.load_amplitude", c.profile.load_amplitude);
    r.number("profile.phase", c.profile.phase);
    r.number("profile.load_noise", c.profile.load_noise);
    r.number("profile.day_spread", c.profile.day_spread);
    r.number("profile.pv_peak", c.profile.pv_peak);
    r.number("profile.cloud_depth", c.profile.cloud_depth);
    r.number("profile.cloud_persistence", c.profile.cloud_persistence);

    r.number("schedule.dt", c.schedule.dt);
    r.number("schedule.t_s", c.schedule.t_s);
    r.number("schedule.t_u", c.schedule.t_u);
    r.number("schedule.m", c.schedule.m);
    r.number("schedule.comm_delay", c.schedule.comm_delay);
    r.number("schedule.drop_prob", c.schedule.drop_prob);

    auto& h = c.hyper;
    r.number("hyper.hidden", h.hidden);
    r.number("hyper.layers", h.layers);
    r.number("hyper.gamma", h.gamma);
    r.number("hyper.eta", h.eta);
    r.number("hyper.lr", h.lr);
    r.number("hyper.lambda_lr", h.lambda_lr);
    r.number("hyper.lambda_init", h.lambda_init);
    r.flag("hyper.learn_lambda", h.learn_lambda);
    r.list("hyper.alpha", h.alpha);
    r.list("hyper.cost_bound", h.cost_bound);
    r.list("hyper.beta", h.beta);
    r.number("hyper.batch", h.batch);
    r.number("hyper.buffer", h.buffer);
    r.number("hyper.reward_scale", h.reward_scale);
    r.number("hyper.cost_scale", h.cost_scale);
    r.flag("hyper.twin_critics", h.twin_critics);
    r.number("hyper.noise", h.noise);
    r.number("hyper.penalty", h.penalty);
    r.text("hyper.precision", h.precision);

    r.number("oracle.penalty", c.oracle.penalty);
    r.number("oracle.starts", c.oracle.starts);
    r.number("oracle.max_iterations", c.oracle.max_iterations);
    r.number("oracle.tolerance", c.oracle.tolerance);
    r.number("oracle.admittance_sigma", c.oracle.admittance_sigma);

    r.text("output.dir", c.output.dir);
    r.number("output.final_window", c.output.final_window);
    r.flag("output.checkpoint", c.output.checkpoint);
    r.flag("output.events", c.output.events);

    r.check_unknown();
    validate(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("file", "cannot open '" + path.string() + "'");
    return parse_config(in);
}

/// The profile-shape keys as INI lines (the profile seed excluded).
inline std::string profile_lines(const env::ProfileOptions& p) {
    using detail::format_double;
    std::ostringstream o;
    o << "steps = " << p.steps << "\n"
      << "load_scale = " << format_double(p.load_scale) << "\n"
      << "load_base = " << format_double(p.load_base) << "\n"
      << "load_amplitude = " << format_double(p.load_amplitude) << "\n"
      << "phase = " << format_double(p.phase) << "\n"
      << "load_noise = " << format_double(p.load_noise) << "\n"
      << "day_spread = " << format_double(p.day_spread) << "\n"
      << "pv_peak = " << format_double(p.pv_peak) << "\n"
      << "cloud_depth = " << format_double(p.cloud_depth) << "\n"
      << "cloud_persistence = " << format_double(p.cloud_persistence) << "\n";
    return o.str();
}

/// Writes every field, so the output fully determines the experiment.
inline std::string serialize_config(const ExperimentConfig& c) {
    using detail::format_double;
    using detail::join;
    std::ostringstream o;
    const auto b = [](bool v) { return v ? "true" : "false"; };
    o << "[experiment]\n"
      << "name = " << c.name << "\n"
      << "network = " << c.network << "\n"
      << "algorithm = " << algorithm_name(c.algorithm) << "\n"
      << "episodes = " << c.episodes << "\n"
      << "episode_offset = " << c.episode_offset << "\n"
      << "seeds = " << join(c.seeds) << "\n\n";
    o << "[profile]\n"
      << "seed = " << c.profile_seed << "\n"
      << profile_lines(c.profile) << "\n";
    const auto& s = c.schedule;
    o << "[schedule]\n"
      << "dt = " << s.dt << "\n"
      << "t_s = " << s.t_s << "\n"
      << "t_u = " << s.t_u << "\n"
      << "m = " << s.m << "\n"
      << "comm_delay = " << s.comm_delay << "\n"
      << "drop_prob = " << format_double(s.drop_prob) << "\n\n";
    const auto& h = c.hyper;
    o << "[hyper]\n"
      << "hidden = " << h.hidden << "\n"
      << "layers = " << h.layers << "\n"
      << "gamma = " << format_double(h.gamma) << "\n"
      << "eta = " << format_double(h.eta) << "\n"
      << "lr = " << format_double(h.lr) << "\n"
      << "lambda_lr = " << format_double(h.lambda_lr) << "\n"
      << "lambda_init = " << format_double(h.lambda_init) << "\n"
      << "learn_lambda = " << b(h.learn_lambda) << "\n"
      << "alpha = " << join(h.alpha) << "\n"
      << "cost_bound = " << join(h.cost_bound) << "\n"
      << "beta = " << join(h.beta) << "\n"
      << "batch = " << h.batch << "\n"
      << "buffer = " << h.buffer << "\n"
      << "reward_scale = " << format_double(h.reward_scale) << "\n"
      << "cost_scale = " << format_double(h.cost_scale) << "\n"
      << "twin_critics = " << b(h.twin_critics) << "\n"
      << "noise = " << format_double(h.noise) << "\n"
      << "penalty = " << format_double(h.penalty) << "\n"
      << "precision = " << h.precision << "\n\n";
    o << "[oracle]\n"
      << "penalty = " << format_double(c.oracle.penalty) << "\n"
      << "starts = " << c.oracle.starts << "\n"
      << "max_iterations = " << c.oracle.max_iterations << "\n"
      << "tolerance = " << format_double(c.oracle.tolerance) << "\n"
      << "admittance_sigma = " << format_double(c.oracle.admittance_sigma) << "\n\n";
    o << "[output]\n"
      << "dir = " << c.output.dir << "\n"
      << "final_window = " << c.output.final_window << "\n"
      << "checkpoint = " << b(c.output.checkpoint) << "\n"
      << "events = " << b(c.output.events) << "\n";
    return o.str();
}

}  // namespace vvc::cli
