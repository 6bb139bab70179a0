#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vvc/env/case.hpp"
#include "vvc/env/profile.hpp"
#include "vvc/grid/admittance.hpp"
#include "vvc/grid/power_flow.hpp"

namespace vvc::env {

/// Feasible reactive range of a device given its available active power.
/// Inverters: |Q| <= sqrt(S^2 - P^2). Compensators: [q_min, q_max].
inline std::pair<double, double> reactive_range(const DeviceSpec& dev, double p_available) {
    if (dev.kind == DeviceKind::compensator) return {dev.q_min, dev.q_max};
    const double p = std::clamp(p_available, 0.0, dev.s_rated);
    const double q = std::sqrt(std::max(0.0, dev.s_rated * dev.s_rated - p * p));
    return {-q, q};
}

/// Affine map of a normalized action in [-1, 1] onto the feasible reactive range.
/// Out-of-range actions are clipped first.
inline double map_action(const DeviceSpec& dev, double p_available, double action) {
    if (std::isnan(action)) throw std::invalid_argument("NaN action");
    const double a = std::clamp(action, -1.0, 1.0);
    const auto [lo, hi] = reactive_range(dev, p_available);
    if (dev.kind == DeviceKind::inverter) return a * hi;
    return lo + 0.5 * (a + 1.0) * (hi - lo);
}

/// One time step of the network with everything fixed except the device reactive setpoints.
struct ControlProblem {
    std::shared_ptr<const grid::NetworkModel> network;
    std::shared_ptr<const grid::AdmittanceStructure> admittance;
    std::vector<DeviceSpec> devices;
    std::vector<double> pv_available;  // per device
    std::vector<double> p_base;        // per bus, loads and PV active power
    std::vector<double> q_base;        // per bus, loads only
    grid::PowerFlowOptions pf;

    [[nodiscard]] std::size_t control_count() const { return devices.size(); }

    [[nodiscard]] std::vector<double> setpoints(std::span<const double> actions) const {
        if (actions.size() != devices.size()) throw std::invalid_argument("action count differs from device count");
        std::vector<double> q(devices.size());
        for (std::size_t d = 0; d < devices.size(); ++d) q[d] = map_action(devices[d], pv_available[d], actions[d]);
        return q;
    }

    [[nodiscard]] std::pair<std::vector<double>, std::vector<double>> injections(std::span<const double> setpoints) const {
        auto p = p_base;
        auto q = q_base;
        for (std::size_t d = 0; d < devices.size(); ++d) q[static_cast<std::size_t>(devices[d].node)] += setpoints[d];
        return {std::move(p), std::move(q)};
    }

    /// Power flow for the given physical setpoints (p.u. reactive power per device).
    [[nodiscard]] grid::PowerFlowSolution solve(std::span<const double> setpoints,
                                                const grid::PowerFlowSolution* warm = nullptr) const {
        const auto [p, q] = injections(setpoints);
        return grid::solve_power_flow(*network, *admittance, p, q, warm, pf);
    }
};

inline ControlProblem make_control_problem(const Case& c, std::shared_ptr<const grid::NetworkModel> network,
                                           std::shared_ptr<const grid::AdmittanceStructure> admittance,
                                           const Profile& profile, std::size_t t,
                                           const grid::PowerFlowOptions& pf = {}) {
    ControlProblem prob;
    prob.network = std::move(network);
    prob.admittance = std::move(admittance);
    prob.devices = c.devices;
    prob.pf = pf;
    const auto& net = *prob.network;
    const auto n = net.bus_count();
    prob.p_base.assign(n, 0.0);
    prob.q_base.assign(n, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
        const double m = profile.load_multiplier.at(t).at(b);
        prob.p_base[b] = -net.buses[b].p_load * m;
        prob.q_base[b] = -net.buses[b].q_load * m;
    }
    prob.pv_available = profile.pv_available.at(t);
    for (std::size_t d = 0; d < c.devices.size(); ++d) {
        if (c.devices[d].kind == DeviceKind::inverter) {
            prob.pv_available[d] = std::clamp(prob.pv_available[d], 0.0, c.devices[d].s_rated);
            prob.p_base[static_cast<std::size_t>(c.devices[d].node)] += prob.pv_available[d];
        } else {
            prob.pv_available[d] = 0.0;
        }
    }
    return prob;
}

inline ControlProblem make_control_problem(const Case& c, const Profile& profile, std::size_t t,
                                           const grid::PowerFlowOptions& pf = {}) {
    auto net = std::make_shared<const grid::NetworkModel>(c.network);
    auto y = std::make_shared<const grid::AdmittanceStructure>(*net);
    return make_control_problem(c, std::move(net), std::move(y), profile, t, pf);
}

}  // namespace vvc::env
