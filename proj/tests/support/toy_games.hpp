#pragma once

// Small cooperative games with known optima, used to exercise the learners end to end.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "vvc/env/task.hpp"
#include "vvc/macsac/learner.hpp"

namespace vvc::testing {

/// Stateless N-agent game: every observation is the constant [1], each agent picks one scalar
/// action, and all agents share reward(a) and cost(a). An episode lasts `horizon` steps.
class BanditGame : public env::Task {
  public:
    using Fn = std::function<double(const std::vector<double>&)>;

    BanditGame(std::size_t agents, Fn reward, Fn cost, std::size_t horizon = 8)
        : n_(agents), reward_(std::move(reward)), cost_(std::move(cost)), horizon_(horizon) {}

    [[nodiscard]] std::size_t agent_count() const override { return n_; }
    [[nodiscard]] std::size_t obs_dim(std::size_t) const override { return 1; }
    [[nodiscard]] std::size_t act_dim(std::size_t) const override { return 1; }
    [[nodiscard]] std::size_t horizon() const override { return horizon_; }

    std::vector<std::vector<double>> reset(std::uint64_t) override {
        t_ = 0;
        return obs();
    }

    env::TaskStep step(const std::vector<std::vector<double>>& actions) override {
        if (actions.size() != n_) throw std::invalid_argument("bandit: wrong agent count");
        std::vector<double> a;
        for (const auto& v : actions) a.push_back(std::clamp(v.at(0), -1.0, 1.0));
        env::TaskStep s;
        const double r = reward_(a);
        const double c = cost_(a);
        s.rewards.assign(n_, r);
        s.costs.assign(n_, c);
        s.system_cost = c;
        s.loss_mw = -r;
        ++t_;
        s.done = t_ >= horizon_;
        s.next_obs = obs();
        return s;
    }

    [[nodiscard]] double reward(const std::vector<double>& a) const { return reward_(a); }
    [[nodiscard]] double cost(const std::vector<double>& a) const { return cost_(a); }

  private:
    [[nodiscard]] std::vector<std::vector<double>> obs() const { return std::vector<std::vector<double>>(n_, {1.0}); }

    std::size_t n_;
    Fn reward_;
    Fn cost_;
    std::size_t horizon_;
    std::size_t t_ = 0;
};

/// Two agents, separable quadratic reward peaked at (0.5, -0.3) plus a coupling term.
inline BanditGame coordination_game(std::size_t horizon = 8) {
    return BanditGame(
        2,
        [](const std::vector<double>& a) {
            return -(a[0] - 0.5) * (a[0] - 0.5) - (a[1] + 0.3) * (a[1] + 0.3) - 0.5 * (a[0] + a[1] - 0.4) * (a[0] + a[1] - 0.4);
        },
        [](const std::vector<double>&) { return 0.0; }, horizon);
}

/// Two agents rewarded for pushing the mean action up; the cost penalizes any positive mean,
/// so the unconstrained optimum a = (1, 1) has cost 1.
inline BanditGame constrained_game(std::size_t horizon = 8) {
    return BanditGame(
        2, [](const std::vector<double>& a) { return 0.5 * (a[0] + a[1]); },
        [](const std::vector<double>& a) {
            const double s = std::max(0.0, 0.5 * (a[0] + a[1]));
            return s * s;
        },
        horizon);
}

/// Grid-search optimum of a 2-agent reward over [-1, 1]^2.
inline std::vector<double> enumerate_optimum(const BanditGame& g, int points = 2001) {
    double best = -1e300;
    std::vector<double> arg(2);
    for (int i = 0; i < points; ++i) {
        for (int j = 0; j < points; ++j) {
            const std::vector<double> a{-1.0 + 2.0 * i / (points - 1), -1.0 + 2.0 * j / (points - 1)};
            const double r = g.reward(a);
            if (r > best) {
                best = r;
                arg = a;
            }
        }
    }
    return arg;
}

/// Act -> step -> store -> train, every step. Returns the per-episode mean rewards.
inline std::vector<double> train_synchronously(env::Task& task, macsac::Learner& learner, std::size_t episodes,
                                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> episode_reward;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        auto obs = task.reset(ep);
        double total = 0.0;
        std::size_t steps = 0;
        for (bool done = false; !done;) {
            std::vector<std::vector<double>> actions;
            for (std::size_t i = 0; i < task.agent_count(); ++i) actions.push_back(learner.ship_policy(i)->act(obs[i], true, rng));
            auto s = task.step(actions);
            if (s.failed) throw std::runtime_error("task step failed: " + s.diagnostic);
            macsac::Transition tr;
            for (const auto& o : obs) tr.x.insert(tr.x.end(), o.begin(), o.end());
            for (const auto& a : actions) tr.a.insert(tr.a.end(), a.begin(), a.end());
            for (const auto& o : s.next_obs) tr.x_next.insert(tr.x_next.end(), o.begin(), o.end());
            tr.r = s.rewards;
            tr.r_c = s.costs;
            learner.store(std::move(tr));
            learner.train_step();
            total += s.rewards.front();
            ++steps;
            obs = s.next_obs;
            done = s.done;
        }
        episode_reward.push_back(total / static_cast<double>(steps));
    }
    return episode_reward;
}

inline macsac::JointLayout layout_of(const env::Task& task) {
    macsac::JointLayout l;
    for (std::size_t i = 0; i < task.agent_count(); ++i) {
        l.obs_dims.push_back(task.obs_dim(i));
        l.act_dims.push_back(task.act_dim(i));
    }
    return l;
}

}  // namespace vvc::testing
