#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/grid/admittance.hpp"
#include "vvc/grid/network.hpp"

namespace vvc::grid {

struct PowerFlowOptions {
    double tolerance = 1e-8;  // max |mismatch|, p.u.
    int max_iterations = 30;
};

struct PowerFlowSolution {
    std::vector<double> v_mag;
    std::vector<double> v_ang;
    // Sending-end flows per branch, from -> to and to -> from (p.u.).
    std::vector<double> branch_p;
    std::vector<double> branch_q;
    std::vector<double> branch_p_reverse;
    std::vector<double> branch_q_reverse;
    // Net injections at every bus implied by the solved voltages (p.u.).
    std::vector<double> p_injection;
    std::vector<double> q_injection;
    double p_loss_total = 0.0;  // MW
    double max_mismatch = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string diagnostic;
};

namespace detail {

struct BusPowers {
    std::vector<double> p;
    std::vector<double> q;
};

inline BusPowers bus_powers(const AdmittanceStructure& y, const std::vector<double>& vm,
                            const std::vector<double>& va) {
    const auto n = vm.size();
    BusPowers out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    const auto& g = y.g_bus();
    const auto& b = y.b_bus();
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        double p = g(ii, ii) * vm[i];
        double q = -b(ii, ii) * vm[i];
        for (int k : y.neighbours(static_cast<int>(i))) {
            const auto kk = static_cast<std::size_t>(k);
            const double dt = va[i] - va[kk];
            const double c = std::cos(dt);
            const double s = std::sin(dt);
            p += vm[kk] * (g(ii, k) * c + b(ii, k) * s);
            q += vm[kk] * (g(ii, k) * s - b(ii, k) * c);
        }
        out.p[i] = vm[i] * p;
        out.q[i] = vm[i] * q;
    }
    return out;
}

inline void fill_flows(const NetworkModel& net, PowerFlowSolution& sol) {
    const auto m = net.branches.size();
    sol.branch_p.assign(m, 0.0);
    sol.branch_q.assign(m, 0.0);
    sol.branch_p_reverse.assign(m, 0.0);
    sol.branch_q_reverse.assign(m, 0.0);
    double loss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const auto& br = net.branches[k];
        const auto i = static_cast<std::size_t>(br.from);
        const auto j = static_cast<std::size_t>(br.to);
        const double vi = sol.v_mag[i];
        const double vj = sol.v_mag[j];
        const double tij = sol.v_ang[i] - sol.v_ang[j];
        const double c = std::cos(tij);
        const double s = std::sin(tij);
        sol.branch_p[k] = br.g * vi * vi - br.g * vi * vj * c - br.b * vi * vj * s;
        sol.branch_q[k] = -br.b * vi * vi + br.b * vi * vj * c - br.g * vi * vj * s;
        // sin(theta_ji) = -sin(theta_ij)
        sol.branch_p_reverse[k] = br.g * vj * vj - br.g * vi * vj * c + br.b * vi * vj * s;
        sol.branch_q_reverse[k] = -br.b * vj * vj + br.b * vi * vj * c + br.g * vi * vj * s;
        loss += sol.branch_p[k] + sol.branch_p_reverse[k];
    }
    for (const auto& bus : net.buses) {
        const double v = sol.v_mag[static_cast<std::size_t>(bus.id)];
        loss += bus.g_shunt * v * v;
    }
    sol.p_loss_total = loss * net.base_mva;
}

}  // namespace detail

/// Polar Newton-Raphson power flow. The slack bus is held at 1.0 angle 0; the injection
/// entries at the slack position are ignored. Never throws on non-convergence: the returned
/// solution carries converged = false and a diagnostic instead.
inline PowerFlowSolution solve_power_flow(const NetworkModel& net, const AdmittanceStructure& y,
                                          std::span<const double> p_inj, std::span<const double> q_inj,
                                          const PowerFlowSolution* start = nullptr,
                                          const PowerFlowOptions& options = {}) {
    const auto n = net.bus_count();
    if (p_inj.size() != n || q_inj.size() != n) {
        throw std::invalid_argument("injection vectors must have one entry per bus");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p_inj[i]) || !std::isfinite(q_inj[i])) {
            throw std::invalid_argument("non-finite injection at bus " + std::to_string(i));
        }
    }
    const auto slack = static_cast<std::size_t>(net.slack_bus());

    PowerFlowSolution sol;
    if (start != nullptr && start->v_mag.size() == n && start->v_ang.size() == n) {
        sol.v_mag = start->v_mag;
        sol.v_ang = start->v_ang;
    } else {
        sol.v_mag.assign(n, 1.0);
        sol.v_ang.assign(n, 0.0);
    }
    sol.v_mag[slack] = 1.0;
    sol.v_ang[slack] = 0.0;

    // Unknown ordering: angles of non-slack buses, then magnitudes of non-slack buses.
    std::vector<int> pos(n, -1);
    std::vector<std::size_t> pq;
    pq.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i != slack) {
            pos[i] = static_cast<int>(pq.size());
            pq.push_back(i);
        }
    }
    const auto npq = static_cast<Eigen::Index>(pq.size());
    const auto& g = y.g_bus();
    const auto& b = y.b_bus();
    Eigen::VectorXd mismatch(2 * npq);
    Eigen::MatrixXd jac(2 * npq, 2 * npq);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const auto powers = detail::bus_powers(y, sol.v_mag, sol.v_ang);
        double worst = 0.0;
        for (Eigen::Index r = 0; r < npq; ++r) {
            const auto i = pq[static_cast<std::size_t>(r)];
            mismatch(r) = p_inj[i] - powers.p[i];
            mismatch(npq + r) = q_inj[i] - powers.q[i];
            worst = std::max({worst, std::abs(mismatch(r)), std::abs(mismatch(npq + r))});
        }
        sol.iterations = iter + 1;
        sol.max_mismatch = worst;
        if (!std::isfinite(worst)) {
            sol.diagnostic = "mismatch became non-finite at iteration " + std::to_string(iter + 1);
            break;
        }
        if (worst <= options.tolerance) {
            sol.converged = true;
            break;
        }

        jac.setZero();
        for (Eigen::Index r = 0; r < npq; ++r) {
            const auto i = pq[static_cast<std::size_t>(r)];
            const auto ii = static_cast<Eigen::Index>(i);
            const double vi = sol.v_mag[i];
            // Diagonal blocks.
            jac(r, r) = -powers.q[i] - b(ii, ii) * vi * vi;
            jac(r, npq + r) = powers.p[i] / vi + g(ii, ii) * vi;
            jac(npq + r, r) = powers.p[i] - g(ii, ii) * vi * vi;
            jac(npq + r, npq + r) = powers.q[i] / vi - b(ii, ii) * vi;
            for (int k : y.neighbours(static_cast<int>(i))) {
                const auto kk = static_cast<std::size_t>(k);
                if (kk == slack) continue;
                const auto c = static_cast<Eigen::Index>(pos[kk]);
                const double vk = sol.v_mag[kk];
                const double dt = sol.v_ang[i] - sol.v_ang[kk];
                const double cs = std::cos(dt);
                const double sn = std::sin(dt);
                const double gik = g(ii, k);
                const double bik = b(ii, k);
                jac(r, c) = vi * vk * (gik * sn - bik * cs);
                jac(r, npq + c) = vi * (gik * cs + bik * sn);
                jac(npq + r, c) = -vi * vk * (gik * cs + bik * sn);
                jac(npq + r, npq + c) = vi * (gik * sn - bik * cs);
            }
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        if (!(lu.rcond() > 1e-14)) {
            sol.diagnostic = "singular Jacobian at iteration " + std::to_string(iter + 1);
            break;
        }
        const Eigen::VectorXd step = lu.solve(mismatch);
        for (Eigen::Index r = 0; r < npq; ++r) {
            const auto i = pq[static_cast<std::size_t>(r)];
            sol.v_ang[i] += step(r);
            sol.v_mag[i] += step(npq + r);
        }
    }
    if (!sol.converged && sol.diagnostic.empty()) {
        sol.diagnostic = "no convergence within " + std::to_string(options.max_iterations) +
                         " iterations (max mismatch " + std::to_string(sol.max_mismatch) + ")";
    }

    const auto powers = detail::bus_powers(y, sol.v_mag, sol.v_ang);
    sol.p_injection = powers.p;
    sol.q_injection = powers.q;
    detail::fill_flows(net, sol);
    return sol;
}

inline PowerFlowSolution solve_power_flow(const NetworkModel& net, std::span<const double> p_inj,
                                          std::span<const double> q_inj,
                                          const PowerFlowSolution* start = nullptr,
                                          const PowerFlowOptions& options = {}) {
    return solve_power_flow(net, AdmittanceStructure(net), p_inj, q_inj, start, options);
}

/// Total active power loss in MW of a converged solution.
inline double total_loss(const PowerFlowSolution& sol, const NetworkModel& net) {
    (void)net;
    if (!sol.converged) throw std::logic_error("total_loss requires a converged power flow");
    return sol.p_loss_total;
}

/// Injections of each bus taken from the bus loads (P = -P_D, Q = -Q_D).
inline std::pair<std::vector<double>, std::vector<double>> load_injections(const NetworkModel& net) {
    std::vector<double> p(net.bus_count(), 0.0);
    std::vector<double> q(net.bus_count(), 0.0);
    for (const auto& bus : net.buses) {
        p[static_cast<std::size_t>(bus.id)] = -bus.p_load;
        q[static_cast<std::size_t>(bus.id)] = -bus.q_load;
    }
    return {p, q};
}

}  // namespace vvc::grid
