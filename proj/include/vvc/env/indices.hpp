#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vvc/env/case.hpp"
#include "vvc/grid/power_flow.hpp"

namespace vvc::env {

/// Voltage violation rate: sum of squared excursions outside [lower, upper] over a node set.
inline double vvr(std::span<const int> nodes, std::span<const double> v_mag, const grid::VoltageLimits& limits) {
    double total = 0.0;
    for (int j : nodes) {
        const double v = v_mag[static_cast<std::size_t>(j)];
        const double over = std::max(0.0, v - limits.upper);
        const double under = std::max(0.0, limits.lower - v);
        total += over * over + under * under;
    }
    return total;
}

inline double vvr_all(std::span<const double> v_mag, const grid::VoltageLimits& limits) {
    double total = 0.0;
    for (double v : v_mag) {
        const double over = std::max(0.0, v - limits.upper);
        const double under = std::max(0.0, limits.lower - v);
        total += over * over + under * under;
    }
    return total;
}

/// Per-agent cost: local violation plus beta times the system-wide violation.
inline double agent_cost(std::span<const int> area_nodes, double beta, std::span<const double> v_mag,
                         const grid::VoltageLimits& limits) {
    return vvr(area_nodes, v_mag, limits) + beta * vvr_all(v_mag, limits);
}

/// Shared reward: negative total active power loss in MW.
inline double reward_power(const grid::PowerFlowSolution& sol) {
    if (!sol.converged) throw std::logic_error("reward_power requires a converged power flow");
    return -sol.p_loss_total;
}

/// Boundary flows of one area, oriented out of the area (p.u.).
inline std::pair<std::vector<double>, std::vector<double>> outlet_powers(const AreaPartition& part, std::size_t area,
                                                                         const grid::PowerFlowSolution& sol) {
    std::vector<double> p;
    std::vector<double> q;
    for (const auto& bb : part.boundary.at(area)) {
        p.push_back(bb.leaves_from_side ? sol.branch_p[bb.branch] : sol.branch_p_reverse[bb.branch]);
        q.push_back(bb.leaves_from_side ? sol.branch_q[bb.branch] : sol.branch_q_reverse[bb.branch]);
    }
    return {p, q};
}

}  // namespace vvc::env
