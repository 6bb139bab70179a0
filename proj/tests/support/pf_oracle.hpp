#pragma once

// Independent power-flow reference used only by tests. It shares no code with the solver
// under test: the bus admittance matrix is assembled here in complex form and the load-bus
// voltages are found by the implicit Z-bus fixed point
//     V_L <- Y_LL^{-1} ( conj(S_L / V_L) - Y_Ls V_s ).

#include <Eigen/Dense>

#include <complex>
#include <random>
#include <vector>

#include "vvc/grid/network.hpp"

namespace vvc::testing {

using cplx = std::complex<double>;

struct OracleFlow {
    std::vector<cplx> v;
    double loss_pu = 0.0;    // real part of total complex injection
    double slack_p = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline Eigen::MatrixXcd complex_ybus(const grid::NetworkModel& net) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& br : net.branches) {
        const cplx ys(br.g, br.b);
        y(br.from, br.from) += ys;
        y(br.to, br.to) += ys;
        y(br.from, br.to) -= ys;
        y(br.to, br.from) -= ys;
    }
    for (const auto& bus : net.buses) y(bus.id, bus.id) += cplx(bus.g_shunt, bus.b_shunt);
    return y;
}

/// p, q are net injections per bus (slack entries ignored).
inline OracleFlow fixed_point_flow(const grid::NetworkModel& net, const std::vector<double>& p,
                                   const std::vector<double>& q, double tol = 1e-12, int max_iter = 20000) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    const auto y = complex_ybus(net);
    int slack = 0;
    for (const auto& bus : net.buses) {
        if (bus.kind == grid::BusKind::slack) slack = bus.id;
    }
    std::vector<Eigen::Index> load;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i != slack) load.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(load.size());
    Eigen::MatrixXcd yll(m, m);
    Eigen::VectorXcd yls(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) yll(r, c) = y(load[r], load[c]);
        yls(r) = y(load[r], slack);
    }
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(yll);
    const cplx vs(1.0, 0.0);

    Eigen::VectorXcd vl = Eigen::VectorXcd::Constant(m, vs);
    OracleFlow out;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd rhs(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto b = static_cast<std::size_t>(load[r]);
            rhs(r) = std::conj(cplx(p[b], q[b]) / vl(r)) - yls(r) * vs;
        }
        const Eigen::VectorXcd next = lu.solve(rhs);
        const double delta = (next - vl).cwiseAbs().maxCoeff();
        vl = next;
        out.iterations = it + 1;
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }
    Eigen::VectorXcd v(n);
    v(slack) = vs;
    for (Eigen::Index r = 0; r < m; ++r) v(load[r]) = vl(r);
    const Eigen::VectorXcd s = v.cwiseProduct((y * v).conjugate());
    out.v.assign(v.data(), v.data() + n);
    out.loss_pu = s.real().sum();
    out.slack_p = s(slack).real();
    return out;
}

/// Random radial feeder: bus 0 is the slack, bus k > 0 hangs off a uniformly chosen earlier bus.
/// Impedances and loads are in ranges typical of per-unit distribution data.
inline grid::NetworkModel random_radial(std::mt19937_64& rng, int buses) {
    std::uniform_real_distribution<double> r_dist(0.005, 0.05);
    std::uniform_real_distribution<double> xr(0.5, 2.0);
    std::uniform_real_distribution<double> p_dist(0.0, 0.04);
    std::uniform_real_distribution<double> pf(0.2, 0.6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    grid::NetworkModel net;
    for (int i = 0; i < buses; ++i) {
        grid::Bus bus;
        bus.id = i;
        bus.kind = i == 0 ? grid::BusKind::slack : grid::BusKind::load;
        if (i > 0) {
            bus.p_load = p_dist(rng);
            bus.q_load = bus.p_load * pf(rng);
            if (unit(rng) < 0.2) bus.b_shunt = 0.01 * unit(rng);
            if (unit(rng) < 0.2) bus.g_shunt = 0.005 * unit(rng);
        }
        net.buses.push_back(bus);
    }
    for (int i = 1; i < buses; ++i) {
        std::uniform_int_distribution<int> parent(0, i - 1);
        const double r = r_dist(rng);
        net.branches.push_back(grid::branch_from_impedance(parent(rng), i, r, r * xr(rng)));
    }
    return net;
}

}  // namespace vvc::testing
