#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/cli/experiment.hpp"

namespace vvc::cli {

class CompareError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ComparisonRow {
    std::string name;
    std::string algorithm;
    std::size_t seeds = 0;
    Stat loss_mw;
    Stat vvr;
};

struct Comparison {
    Conditions conditions;
    std::vector<ComparisonRow> rows;
};

namespace detail {

/// Table order: the oracle reference first, then the learners, then the model-based baseline.
inline int algorithm_rank(const std::string& a) {
    static const std::map<std::string, int> rank{{"vvo", 0}, {"macsac", 1}, {"csac", 2}, {"maddpg", 3}, {"avvo", 4}};
    const auto it = rank.find(a);
    return it == rank.end() ? 5 : it->second;
}

inline std::string describe(const Conditions& c) {
    return "network " + c.network + ", profile seed " + std::to_string(c.profile_seed) + ", final episodes " +
           std::to_string(c.first_final) + "-" + std::to_string(c.last_final);
}

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace detail

/// Rows of the final-window statistics. Refuses summaries whose conditions differ, or learners
/// trained under different schedules.
inline Comparison compare(const std::vector<RunSummary>& summaries) {
    if (summaries.empty()) throw CompareError("nothing to compare");
    Comparison out;
    out.conditions = summaries.front().conditions;
    const RunSummary* scheduled = nullptr;
    for (const auto& s : summaries) {
        if (!(s.conditions == out.conditions)) {
            std::string why;
            if (s.conditions.network != out.conditions.network) why = "networks differ";
            else if (s.conditions.profile_seed != out.conditions.profile_seed) why = "profile seeds differ";
            else if (s.conditions.profile != out.conditions.profile) why = "profile options differ";
            else why = "final episode windows differ";
            throw CompareError("'" + s.name + "' was run under different conditions (" + why + "): " +
                               detail::describe(s.conditions) + " vs " + detail::describe(out.conditions));
        }
        const bool oracle = s.algorithm == "vvo" || s.algorithm == "avvo";
        if (!oracle) {
            if (scheduled != nullptr && !(scheduled->schedule == s.schedule)) {
                throw CompareError("'" + s.name + "' and '" + scheduled->name + "' used different training schedules");
            }
            scheduled = &s;
        }
        out.rows.push_back(ComparisonRow{s.name, s.algorithm, s.seeds.size(), s.final_loss_mw, s.final_vvr});
    }
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
        return detail::algorithm_rank(a.algorithm) < detail::algorithm_rank(b.algorithm);
    });
    return out;
}

/// Fixed-width table; deterministic methods show "-" for the std columns.
inline std::string comparison_text(const Comparison& c) {
    std::ostringstream o;
    o << "Final-episode indices (" << detail::describe(c.conditions) << ")\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %-8s %5s %12s %12s %12s %12s\n", "name", "algo", "seeds", "P_loss MW",
                  "std", "VVR", "std");
    o << line;
    for (const auto& r : c.rows) {
        std::snprintf(line, sizeof line, "%-20s %-8s %5zu %12s %12s %12s %12s\n", r.name.c_str(), r.algorithm.c_str(),
                      r.seeds, detail::sci(r.loss_mw.mean).c_str(),
                      r.loss_mw.std ? detail::sci(*r.loss_mw.std).c_str() : "-", detail::sci(r.vvr.mean).c_str(),
                      r.vvr.std ? detail::sci(*r.vvr.std).c_str() : "-");
        o << line;
    }
    return o.str();
}

inline std::string comparison_csv(const Comparison& c) {
    std::ostringstream o;
    o << "name,algorithm,seeds,loss_mean,loss_std,vvr_mean,vvr_std\n";
    for (const auto& r : c.rows) {
        o << r.name << ',' << r.algorithm << ',' << r.seeds << ',' << detail::num(r.loss_mw.mean) << ','
          << (r.loss_mw.std ? detail::num(*r.loss_mw.std) : "") << ',' << detail::num(r.vvr.mean) << ','
          << (r.vvr.std ? detail::num(*r.vvr.std) : "") << '\n';
    }
    return o.str();
}

// ---- plot data -----------------------------------------------------------------------------------

struct PlotPoint {
    std::size_t step = 0;  // global step index across episodes
    std::size_t episode = 0;
    std::size_t t = 0;
    std::size_t runs = 0;  // logs contributing to this point
    double loss_mean = 0.0;
    double loss_min = 0.0;
    double loss_max = 0.0;
    double vvr_mean = 0.0;
    double vvr_min = 0.0;
    double vvr_max = 0.0;
};

/// Per-step series across runs: mean with a min/max envelope. Steps are aligned by their
/// position in each log; failed steps are left out of that step's statistics.
inline std::vector<PlotPoint> plot_data(const std::vector<std::vector<StepRow>>& logs) {
    if (logs.empty()) throw std::invalid_argument("plot data needs at least one log");
    std::size_t longest = 0;
    for (const auto& l : logs) {
        if (l.empty()) throw std::invalid_argument("plot data got an empty log");
        longest = std::max(longest, l.size());
    }
    std::vector<PlotPoint> out;
    for (std::size_t k = 0; k < longest; ++k) {
        PlotPoint p;
        p.step = k;
        p.loss_min = p.vvr_min = std::numeric_limits<double>::infinity();
        p.loss_max = p.vvr_max = -std::numeric_limits<double>::infinity();
        for (const auto& l : logs) {
            if (k >= l.size() || l[k].failed) continue;
            p.episode = l[k].episode;
            p.t = l[k].t;
            ++p.runs;
            p.loss_mean += l[k].loss_mw;
            p.vvr_mean += l[k].vvr;
            p.loss_min = std::min(p.loss_min, l[k].loss_mw);
            p.loss_max = std::max(p.loss_max, l[k].loss_mw);
            p.vvr_min = std::min(p.vvr_min, l[k].vvr);
            p.vvr_max = std::max(p.vvr_max, l[k].vvr);
        }
        if (p.runs == 0) continue;
        p.loss_mean /= static_cast<double>(p.runs);
        p.vvr_mean /= static_cast<double>(p.runs);
        out.push_back(p);
    }
    return out;
}

inline std::string plot_csv(const std::vector<PlotPoint>& points) {
    std::ostringstream o;
    o << "step,episode,t,runs,loss_mean,loss_min,loss_max,vvr_mean,vvr_min,vvr_max\n";
    for (const auto& p : points) {
        o << p.step << ',' << p.episode << ',' << p.t << ',' << p.runs << ',' << detail::num(p.loss_mean) << ','
          << detail::num(p.loss_min) << ',' << detail::num(p.loss_max) << ',' << detail::num(p.vvr_mean) << ','
          << detail::num(p.vvr_min) << ',' << detail::num(p.vvr_max) << '\n';
    }
    return o.str();
}

/// Accepts per-step CSV files or run directories (every seed_*/steps.csv inside).
inline std::vector<std::filesystem::path> resolve_step_logs(const std::vector<std::filesystem::path>& inputs) {
    std::vector<std::filesystem::path> out;
    for (const auto& in : inputs) {
        if (std::filesystem::is_directory(in)) {
            std::vector<std::filesystem::path> found;
            for (const auto& entry : std::filesystem::directory_iterator(in)) {
                const auto candidate = entry.path() / "steps.csv";
                if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0 &&
                    std::filesystem::exists(candidate)) {
                    found.push_back(candidate);
                }
            }
            if (found.empty()) throw std::runtime_error("no seed_*/steps.csv under '" + in.string() + "'");
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            if (!std::filesystem::exists(in)) throw std::runtime_error("no such log '" + in.string() + "'");
            out.push_back(in);
        }
    }
    return out;
}

}  // namespace vvc::cli
