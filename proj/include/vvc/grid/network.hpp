#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vvc::grid {

/// Raised when a network description violates a structural invariant.
class NetworkError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class BusKind { slack, load };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::load;
    double g_shunt = 0.0;  // p.u.
    double b_shunt = 0.0;  // p.u.
    double p_load = 0.0;   // p.u. demand
    double q_load = 0.0;   // p.u. demand
};

/// Series admittance g + jb between two buses (p.u.).
struct Branch {
    int from = 0;
    int to = 0;
    double g = 0.0;
    double b = 0.0;
};

struct VoltageLimits {
    double lower = 0.95;
    double upper = 1.05;
};

struct NetworkModel {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    double base_mva = 1.0;
    VoltageLimits v_limits;

    [[nodiscard]] std::size_t bus_count() const { return buses.size(); }

    [[nodiscard]] int slack_bus() const {
        for (const auto& bus : buses) {
            if (bus.kind == BusKind::slack) return bus.id;
        }
        throw NetworkError("network has no slack bus");
    }
};

/// Converts a series impedance r + jx (p.u.) into the admittance form used by Branch.
inline Branch branch_from_impedance(int from, int to, double r, double x) {
    const double denom = r * r + x * x;
    if (!(denom > 0.0)) {
        throw NetworkError("branch " + std::to_string(from) + "-" + std::to_string(to) +
                           " has zero impedance");
    }
    return Branch{from, to, r / denom, -x / denom};
}

namespace detail {

inline std::string branch_label(const Branch& br) {
    return "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
}

}  // namespace detail

/// Checks every structural invariant of a network; throws NetworkError naming the
/// first offending element.
inline void validate(const NetworkModel& net) {
    const auto n = static_cast<int>(net.buses.size());
    if (n == 0) throw NetworkError("network has no buses");
    if (!(net.base_mva > 0.0) || !std::isfinite(net.base_mva)) {
        throw NetworkError("base_mva must be positive");
    }
    if (!(net.v_limits.lower < 1.0 && 1.0 < net.v_limits.upper)) {
        throw NetworkError("v_limits must satisfy lower < 1.0 < upper");
    }

    int slack_count = 0;
    for (int i = 0; i < n; ++i) {
        const auto& bus = net.buses[static_cast<std::size_t>(i)];
        if (bus.id != i) {
            throw NetworkError("bus ids must be contiguous from 0; position " + std::to_string(i) +
                               " holds id " + std::to_string(bus.id));
        }
        if (!std::isfinite(bus.g_shunt) || !std::isfinite(bus.b_shunt) ||
            !std::isfinite(bus.p_load) || !std::isfinite(bus.q_load)) {
            throw NetworkError("bus " + std::to_string(i) + " has a non-finite value");
        }
        if (bus.kind == BusKind::slack) ++slack_count;
    }
    if (slack_count != 1) {
        throw NetworkError("network must have exactly one slack bus, found " +
                           std::to_string(slack_count));
    }

    std::set<std::pair<int, int>> seen;
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n));
    for (const auto& br : net.branches) {
        if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n) {
            throw NetworkError(detail::branch_label(br) + " references an unknown bus");
        }
        if (br.from == br.to) throw NetworkError(detail::branch_label(br) + " is a self loop");
        if (!std::isfinite(br.g) || !std::isfinite(br.b)) {
            throw NetworkError(detail::branch_label(br) + " has a non-finite admittance");
        }
        if (br.g < 0.0) throw NetworkError(detail::branch_label(br) + " has negative conductance");
        const auto key = std::minmax(br.from, br.to);
        if (!seen.insert(key).second) throw NetworkError("duplicate " + detail::branch_label(br));
        adjacency[static_cast<std::size_t>(br.from)].push_back(br.to);
        adjacency[static_cast<std::size_t>(br.to)].push_back(br.from);
    }

    std::vector<bool> reached(static_cast<std::size_t>(n), false);
    std::queue<int> frontier;
    frontier.push(0);
    reached[0] = true;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v : adjacency[static_cast<std::size_t>(u)]) {
            if (!reached[static_cast<std::size_t>(v)]) {
                reached[static_cast<std::size_t>(v)] = true;
                frontier.push(v);
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!reached[static_cast<std::size_t>(i)]) {
            throw NetworkError("network is disconnected: bus " + std::to_string(i) +
                               " is unreachable from bus 0");
        }
    }
}

[[nodiscard]] inline bool is_radial(const NetworkModel& net) {
    return net.branches.size() + 1 == net.buses.size();
}

}  // namespace vvc::grid
