#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "vvc/env/case.hpp"
#include "vvc/env/control.hpp"
#include "vvc/env/profile.hpp"
#include "vvc/env/indices.hpp"
#include "vvc/grid/admittance.hpp"
#include "vvc/grid/network.hpp"

namespace vvc::baselines {

struct VvoOptions {
    double penalty = 1000.0;        // objective = loss (MW) + penalty * VVR
    std::size_t starts = 2;         // the first start is a = 0, the rest uniform in the box
    std::size_t max_iterations = 100;
    double fd_step = 1e-5;          // central differences in normalized action space
    double tolerance = 1e-6;        // projected-gradient infinity norm at a stationary point
    double pf_tolerance = 1e-12;    // tight mismatch so finite differences see a smooth objective
    std::size_t grid_dims = 3;      // dense grid refinement up to this many variables
    std::uint64_t seed = 0;
};

/// Best setpoints found for one time step. Actions are normalized to [-1, 1]; setpoints are
/// the physical reactive outputs (p.u.) they map to, so they are feasible by construction.
struct OracleResult {
    std::vector<double> actions;
    std::vector<double> setpoints;
    double loss_mw = 0.0;
    double vvr = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct Evaluation {
    bool ok = false;
    double loss_mw = 0.0;
    double vvr = 0.0;
    double objective = std::numeric_limits<double>::infinity();
};

/// Loss and VVR of normalized actions on the given model; a failed power flow is not ok.
inline Evaluation evaluate_actions(const env::ControlProblem& prob, std::span<const double> actions, double penalty) {
    const auto sol = prob.solve(prob.setpoints(actions));
    Evaluation e;
    if (!sol.converged) return e;
    e.ok = true;
    e.loss_mw = sol.p_loss_total;
    e.vvr = env::vvr_all(sol.v_mag, prob.network->v_limits);
    e.objective = e.loss_mw + penalty * e.vvr;
    return e;
}

namespace detail {

class Objective {
  public:
    Objective(const env::ControlProblem& prob, const VvoOptions& opts) : prob_(prob), opts_(opts) {
        prob_.pf.tolerance = std::min(prob_.pf.tolerance, opts.pf_tolerance);
    }

    double value(const Eigen::VectorXd& x) {
        ++evaluations;
        return evaluate_actions(prob_, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                opts_.penalty)
            .objective;
    }

    /// Central differences, one-sided where the box would be left. Returns false if any
    /// probe failed to converge.
    bool gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g.resize(x.size());
        const double h = opts_.fd_step;
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            Eigen::VectorXd hi = x;
            Eigen::VectorXd lo = x;
            hi(k) = std::min(1.0, x(k) + h);
            lo(k) = std::max(-1.0, x(k) - h);
            const double fh = value(hi);
            const double fl = value(lo);
            if (!std::isfinite(fh) || !std::isfinite(fl)) return false;
            g(k) = (fh - fl) / (hi(k) - lo(k));
        }
        return true;
    }

    std::size_t evaluations = 0;

  private:
    env::ControlProblem prob_;
    VvoOptions opts_;
};

inline Eigen::VectorXd project(Eigen::VectorXd x) { return x.cwiseMax(-1.0).cwiseMin(1.0); }

/// Components pinned at a bound with the gradient pushing outward.
inline std::vector<bool> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    std::vector<bool> active(static_cast<std::size_t>(x.size()));
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        active[static_cast<std::size_t>(k)] = (x(k) <= -1.0 && g(k) > 0.0) || (x(k) >= 1.0 && g(k) < 0.0);
    }
    return active;
}

inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    const auto active = active_set(x, g);
    double n = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (!active[static_cast<std::size_t>(k)]) n = std::max(n, std::abs(g(k)));
    }
    return n;
}

struct Descent {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    bool stationary = false;
};

/// Projected BFGS with an Armijo backtracking line search over the box [-1, 1]^n.
inline Descent projected_bfgs(Objective& obj, Eigen::VectorXd x, const VvoOptions& opts) {
    Descent out;
    x = project(std::move(x));
    double f = obj.value(x);
    Eigen::VectorXd g;
    if (!std::isfinite(f) || !obj.gradient(x, g)) return out;
    const auto n = x.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;  // h is the (unscaled) identity
    out.x = x;
    out.f = f;
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        out.iterations = it + 1;
        if (projected_gradient_norm(x, g) <= opts.tolerance) {
            out.stationary = true;
            break;
        }
        const auto active = active_set(x, g);
        Eigen::VectorXd gf = g;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (active[static_cast<std::size_t>(k)]) gf(k) = 0.0;
        }
        Eigen::VectorXd d = -(h * gf);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (active[static_cast<std::size_t>(k)]) d(k) = 0.0;
        }
        if (g.dot(d) >= 0.0) {
            h.setIdentity();
            fresh = true;
            d = -gf;
        }
        double t = 1.0;
        Eigen::VectorXd xn;
        double fn = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            xn = project(x + t * d);
            fn = obj.value(xn);
            if (std::isfinite(fn) && fn <= f + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!fresh) {
                h.setIdentity();
                fresh = true;
                continue;
            }
            // No descent left at finite-difference resolution.
            out.stationary = true;
            break;
        }
        Eigen::VectorXd gn;
        if (!obj.gradient(xn, gn)) break;
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) h *= sy / y.squaredNorm();
            fresh = false;
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
            h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const double progress = f - fn;
        x = std::move(xn);
        f = fn;
        g = std::move(gn);
        out.x = x;
        out.f = f;
        if (progress <= 1e-15 * std::max(1.0, std::abs(f)) && s.lpNorm<Eigen::Infinity>() < 1e-12) {
            out.stationary = true;
            break;
        }
    }
    return out;
}

/// Best point of a uniform grid over [-1, 1]^n.
inline Eigen::VectorXd grid_best(Objective& obj, Eigen::Index n, std::size_t points) {
    Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
    double best_f = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd x(n);
    for (;;) {
        for (Eigen::Index k = 0; k < n; ++k) {
            x(k) = -1.0 + 2.0 * static_cast<double>(idx[static_cast<std::size_t>(k)]) / static_cast<double>(points - 1);
        }
        const double f = obj.value(x);
        if (f < best_f) {
            best_f = f;
            best = x;
        }
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == points) idx[k++] = 0;
        if (k == idx.size()) break;
    }
    return best;
}

inline std::size_t grid_points_for(Eigen::Index n) {
    switch (n) {
        case 1: return 401;
        case 2: return 61;
        default: return 21;
    }
}

}  // namespace detail

/// Model-knowing optimum of one step: minimizes loss + penalty * VVR over the device box by
/// multi-start projected BFGS on the given power-flow model. `initial`, when given, is tried
/// as an extra start (e.g. the previous step's optimum).
inline OracleResult vvo_solve(const env::ControlProblem& prob, const VvoOptions& opts = {},
                              const std::vector<double>* initial = nullptr) {
    if (opts.starts == 0) throw std::invalid_argument("vvo needs at least one start");
    if (!(opts.fd_step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const auto n = static_cast<Eigen::Index>(prob.control_count());
    OracleResult best;
    if (n == 0) {
        const auto e = evaluate_actions(prob, {}, opts.penalty);
        if (!e.ok) throw std::runtime_error("vvo: power flow fails without any control");
        best.loss_mw = e.loss_mw;
        best.vvr = e.vvr;
        best.objective = e.objective;
        best.converged = true;
        return best;
    }

    detail::Objective obj(prob, opts);
    std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(n)};
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t s = 1; s < opts.starts; ++s) {
        Eigen::VectorXd x(n);
        for (Eigen::Index k = 0; k < n; ++k) x(k) = u(rng);
        starts.push_back(x);
    }
    if (initial != nullptr && !initial->empty()) {
        if (initial->size() != static_cast<std::size_t>(n)) throw std::invalid_argument("vvo: initial guess has wrong size");
        starts.push_back(Eigen::Map<const Eigen::VectorXd>(initial->data(), n));
    }
    if (static_cast<std::size_t>(n) <= opts.grid_dims) starts.push_back(detail::grid_best(obj, n, detail::grid_points_for(n)));

    detail::Descent winner;
    for (const auto& s : starts) {
        auto d = detail::projected_bfgs(obj, s, opts);
        best.iterations += d.iterations;
        if (d.f < winner.f) winner = std::move(d);
    }
    best.evaluations = obj.evaluations;
    if (!std::isfinite(winner.f)) throw std::runtime_error("vvo: no start produced a converged power flow");

    best.actions.assign(winner.x.data(), winner.x.data() + n);
    best.setpoints = prob.setpoints(best.actions);
    auto tight = prob;
    tight.pf.tolerance = std::min(tight.pf.tolerance, opts.pf_tolerance);
    const auto e = evaluate_actions(tight, best.actions, opts.penalty);
    best.loss_mw = e.loss_mw;
    best.vvr = e.vvr;
    best.objective = e.objective;
    best.converged = winner.stationary;
    return best;
}

struct AvvoOptions {
    double admittance_sigma = 0.2;  // each branch admittance scaled by U(1 - sigma, 1 + sigma)
    std::uint64_t seed = 0;
};

/// The planner's network: every branch admittance carries an independent multiplicative error.
inline grid::NetworkModel perturbed_network(const grid::NetworkModel& net, const AvvoOptions& opts) {
    if (!(opts.admittance_sigma >= 0.0 && opts.admittance_sigma < 1.0)) {
        throw std::invalid_argument("admittance_sigma must lie in [0, 1)");
    }
    grid::NetworkModel out = net;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& br : out.branches) {
        const double f = 1.0 + opts.admittance_sigma * u(rng);
        br.g *= f;
        br.b *= f;
    }
    return out;
}

/// The same control problem posed on a different network model.
inline env::ControlProblem with_network(env::ControlProblem prob, const grid::NetworkModel& net) {
    auto model = std::make_shared<const grid::NetworkModel>(net);
    prob.admittance = std::make_shared<const grid::AdmittanceStructure>(*model);
    prob.network = std::move(model);
    return prob;
}

/// Optimizes on the planner's model, then scores the chosen actions on the true problem.
inline OracleResult avvo_solve(const env::ControlProblem& truth, const env::ControlProblem& model,
                               const VvoOptions& opts = {}, const std::vector<double>* initial = nullptr) {
    if (truth.control_count() != model.control_count()) throw std::invalid_argument("avvo: device sets differ");
    OracleResult r = vvo_solve(model, opts, initial);
    auto tight = truth;
    tight.pf.tolerance = std::min(tight.pf.tolerance, opts.pf_tolerance);
    const auto e = evaluate_actions(tight, r.actions, opts.penalty);
    if (!e.ok) throw std::runtime_error("avvo: planned setpoints do not converge on the true network");
    r.setpoints = truth.setpoints(r.actions);
    r.loss_mw = e.loss_mw;
    r.vvr = e.vvr;
    r.objective = e.objective;
    return r;
}

/// Per-step oracle over a whole profile, each step warm-started from the previous optimum.
inline std::vector<OracleResult> vvo_episode(const env::Case& c, const env::Profile& profile, const VvoOptions& opts = {},
                                             const grid::PowerFlowOptions& pf = {}) {
    auto net = std::make_shared<const grid::NetworkModel>(c.network);
    auto y = std::make_shared<const grid::AdmittanceStructure>(*net);
    std::vector<OracleResult> out;
    for (std::size_t t = 0; t < profile.steps(); ++t) {
        const auto prob = env::make_control_problem(c, net, y, profile, t, pf);
        out.push_back(vvo_solve(prob, opts, out.empty() ? nullptr : &out.back().actions));
    }
    return out;
}

/// AVVO over a whole profile: plans on `model` (a perturbed network) with the `planned`
/// injections, then scores each step on the true case and realized profile.
inline std::vector<OracleResult> avvo_episode(const env::Case& truth, const env::Profile& realized,
                                              const grid::NetworkModel& model, const env::Profile& planned,
                                              const VvoOptions& opts = {}, const grid::PowerFlowOptions& pf = {}) {
    if (planned.steps() != realized.steps()) throw std::invalid_argument("avvo: profile lengths differ");
    auto true_net = std::make_shared<const grid::NetworkModel>(truth.network);
    auto true_y = std::make_shared<const grid::AdmittanceStructure>(*true_net);
    auto model_net = std::make_shared<const grid::NetworkModel>(model);
    auto model_y = std::make_shared<const grid::AdmittanceStructure>(*model_net);
    std::vector<OracleResult> out;
    for (std::size_t t = 0; t < realized.steps(); ++t) {
        const auto truth_prob = env::make_control_problem(truth, true_net, true_y, realized, t, pf);
        const auto model_prob = env::make_control_problem(truth, model_net, model_y, planned, t, pf);
        out.push_back(avvo_solve(truth_prob, model_prob, opts, out.empty() ? nullptr : &out.back().actions));
    }
    return out;
}

}  // namespace vvc::baselines
