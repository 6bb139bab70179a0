#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/env/case.hpp"
#include "vvc/env/control.hpp"
#include "vvc/env/indices.hpp"
#include "vvc/env/profile.hpp"
#include "vvc/grid/admittance.hpp"
#include "vvc/grid/power_flow.hpp"

namespace vvc::env {

class EnvError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Affine scaling applied when an observation is flattened for a learner.
struct ObservationScaling {
    double power = 2.0;     // p.u. power multiplier
    double v_center = 1.0;  // voltage feature = (V - v_center) / v_span
    double v_span = 0.05;
};

struct EnvConfig {
    std::vector<double> beta;  // cooperative index per agent; empty means 1.0 for all
    ObservationScaling scaling;
    grid::PowerFlowOptions power_flow;
};

struct Observation {
    std::vector<double> p_area;
    std::vector<double> q_area;
    std::vector<double> v_area;
    std::vector<double> p_outlet;
    std::vector<double> q_outlet;
};

struct EnvState {
    std::vector<double> p_inj;
    std::vector<double> q_inj;
    std::vector<double> v_mag;
    std::size_t t = 0;
};

enum class StepStatus { ok, power_flow_failed };

struct StepResult {
    std::vector<Observation> observations;  // what each agent sees next
    std::vector<double> rewards;
    std::vector<double> costs;
    EnvState state;  // the rewarded (post-action) state of this step
    std::vector<double> setpoints;  // applied reactive power per device, p.u.
    double loss_mw = 0.0;
    double vvr = 0.0;
    bool done = false;
    StepStatus status = StepStatus::ok;
    std::string diagnostic;
};

/// The constrained Markov game over a distribution feeder. Each step applies the agents'
/// normalized reactive setpoints, solves the power flow for the current load, scores it,
/// then advances the load to the next step (setpoints held) to produce the next observations.
class VvcEnv {
  public:
    explicit VvcEnv(Case c, EnvConfig config = {})
        : case_(std::move(c)), config_(std::move(config)) {
        validate_case(case_);
        network_ = std::make_shared<const grid::NetworkModel>(case_.network);
        admittance_ = std::make_shared<const grid::AdmittanceStructure>(*network_);
        partition_ = make_partition(case_.network, case_.areas);
        if (config_.beta.empty()) config_.beta.assign(partition_.size(), 1.0);
        if (config_.beta.size() != partition_.size()) throw std::invalid_argument("beta needs one entry per agent");
        agent_devices_.assign(partition_.size(), {});
        for (std::size_t d = 0; d < case_.devices.size(); ++d) {
            agent_devices_[static_cast<std::size_t>(case_.devices[d].area)].push_back(d);
        }
    }

    [[nodiscard]] std::size_t agent_count() const { return partition_.size(); }
    [[nodiscard]] std::size_t act_dim(std::size_t agent) const { return agent_devices_.at(agent).size(); }
    [[nodiscard]] std::size_t obs_dim(std::size_t agent) const {
        return 3 * partition_.areas.at(agent).size() + 2 * partition_.boundary.at(agent).size();
    }
    [[nodiscard]] const Case& case_data() const { return case_; }
    [[nodiscard]] const AreaPartition& partition() const { return partition_; }
    [[nodiscard]] const EnvConfig& config() const { return config_; }
    [[nodiscard]] const EnvState& state() const { return state_; }
    [[nodiscard]] const Profile& profile() const { return profile_; }
    [[nodiscard]] std::shared_ptr<const grid::NetworkModel> network() const { return network_; }
    [[nodiscard]] std::shared_ptr<const grid::AdmittanceStructure> admittance() const { return admittance_; }
    [[nodiscard]] const std::vector<std::size_t>& agent_devices(std::size_t agent) const {
        return agent_devices_.at(agent);
    }

    [[nodiscard]] ControlProblem control_problem(std::size_t t) const {
        return make_control_problem(case_, network_, admittance_, profile_, t, config_.power_flow);
    }

    std::vector<Observation> reset(const Profile& profile) {
        validate_profile(profile, case_);
        profile_ = profile;
        t_ = 0;
        held_actions_.reset();
        last_solution_.reset();
        const auto prob = control_problem(0);
        const std::vector<double> zero(case_.devices.size(), 0.0);
        auto sol = prob.solve(zero);
        if (!sol.converged) throw EnvError("power flow failed at reset: " + sol.diagnostic);
        const auto [p, q] = prob.injections(zero);
        state_ = EnvState{p, q, sol.v_mag, 0};
        auto obs = observe(sol, p, q);
        last_solution_ = std::move(sol);
        return obs;
    }

    StepResult step(const std::vector<std::vector<double>>& actions) {
        if (profile_.steps() == 0) throw EnvError("step called before reset");
        if (t_ >= profile_.steps()) throw EnvError("step called after the episode ended");
        if (actions.size() != agent_count()) throw std::invalid_argument("one action vector per agent required");

        std::vector<double> flat(case_.devices.size(), 0.0);
        for (std::size_t i = 0; i < agent_count(); ++i) {
            if (actions[i].size() != act_dim(i)) {
                throw std::invalid_argument("agent " + std::to_string(i) + " action has wrong dimension");
            }
            for (std::size_t k = 0; k < act_dim(i); ++k) flat[agent_devices_[i][k]] = actions[i][k];
        }

        StepResult result;
        const auto prob = control_problem(t_);
        result.setpoints = prob.setpoints(flat);
        auto sol = prob.solve(result.setpoints, last_solution_ ? &*last_solution_ : nullptr);
        if (!sol.converged) return failure(std::move(result), sol);

        const auto [p, q] = prob.injections(result.setpoints);
        result.state = EnvState{p, q, sol.v_mag, t_};
        result.loss_mw = sol.p_loss_total;
        result.vvr = vvr_all(sol.v_mag, case_.network.v_limits);
        result.rewards.assign(agent_count(), reward_power(sol));
        result.costs.resize(agent_count());
        for (std::size_t i = 0; i < agent_count(); ++i) {
            result.costs[i] = agent_cost(partition_.areas[i], config_.beta[i], sol.v_mag, case_.network.v_limits);
        }
        held_actions_ = flat;
        ++t_;
        result.done = t_ == profile_.steps();

        if (result.done) {
            result.observations = observe(sol, p, q);
            state_ = result.state;
            last_solution_ = std::move(sol);
            return result;
        }
        const auto next = control_problem(t_);
        const auto next_setpoints = next.setpoints(flat);
        auto next_sol = next.solve(next_setpoints, &sol);
        if (!next_sol.converged) return failure(std::move(result), next_sol);
        const auto [np, nq] = next.injections(next_setpoints);
        result.observations = observe(next_sol, np, nq);
        state_ = EnvState{np, nq, next_sol.v_mag, t_};
        last_solution_ = std::move(next_sol);
        return result;
    }

    /// Flattened, scaled learner input for one agent.
    [[nodiscard]] std::vector<double> features(const Observation& o) const {
        const auto& s = config_.scaling;
        std::vector<double> f;
        f.reserve(o.p_area.size() * 3 + o.p_outlet.size() * 2);
        for (double v : o.p_area) f.push_back(v * s.power);
        for (double v : o.q_area) f.push_back(v * s.power);
        for (double v : o.v_area) f.push_back((v - s.v_center) / s.v_span);
        for (double v : o.p_outlet) f.push_back(v * s.power);
        for (double v : o.q_outlet) f.push_back(v * s.power);
        return f;
    }

    [[nodiscard]] std::vector<std::vector<double>> features(const std::vector<Observation>& obs) const {
        std::vector<std::vector<double>> out;
        out.reserve(obs.size());
        for (const auto& o : obs) out.push_back(features(o));
        return out;
    }

  private:
    std::vector<Observation> observe(const grid::PowerFlowSolution& sol, const std::vector<double>& p,
                                     const std::vector<double>& q) const {
        std::vector<Observation> out(agent_count());
        for (std::size_t i = 0; i < agent_count(); ++i) {
            auto& o = out[i];
            for (int j : partition_.areas[i]) {
                const auto jj = static_cast<std::size_t>(j);
                o.p_area.push_back(p[jj]);
                o.q_area.push_back(q[jj]);
                o.v_area.push_back(sol.v_mag[jj]);
            }
            auto [po, qo] = outlet_powers(partition_, i, sol);
            o.p_outlet = std::move(po);
            o.q_outlet = std::move(qo);
        }
        return out;
    }

    StepResult failure(StepResult result, const grid::PowerFlowSolution& sol) {
        result.status = StepStatus::power_flow_failed;
        result.diagnostic = sol.diagnostic;
        result.done = true;
        t_ = profile_.steps();
        return result;
    }

    Case case_;
    EnvConfig config_;
    std::shared_ptr<const grid::NetworkModel> network_;
    std::shared_ptr<const grid::AdmittanceStructure> admittance_;
    AreaPartition partition_;
    std::vector<std::vector<std::size_t>> agent_devices_;
    Profile profile_;
    std::size_t t_ = 0;
    std::optional<std::vector<double>> held_actions_;
    std::optional<grid::PowerFlowSolution> last_solution_;
    EnvState state_;
};

}  // namespace vvc::env
