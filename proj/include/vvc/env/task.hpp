#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vvc/env/environment.hpp"
#include "vvc/env/profile.hpp"

namespace vvc::env {

/// Result of one joint step, expressed in learner features.
struct TaskStep {
    std::vector<std::vector<double>> next_obs;
    std::vector<double> rewards;
    std::vector<double> costs;
    double loss_mw = 0.0;       // reporting only
    double system_cost = 0.0;   // system-wide violation (VVR for feeders)
    bool done = false;
    bool failed = false;
    std::string diagnostic;
};

/// Episodic multi-agent task as seen by learners and the OLDC scheduler. Observations are
/// per-agent feature vectors; actions are per-agent vectors in [-1, 1].
class Task {
  public:
    virtual ~Task() = default;
    [[nodiscard]] virtual std::size_t agent_count() const = 0;
    [[nodiscard]] virtual std::size_t obs_dim(std::size_t agent) const = 0;
    [[nodiscard]] virtual std::size_t act_dim(std::size_t agent) const = 0;
    [[nodiscard]] virtual std::size_t horizon() const = 0;
    virtual std::vector<std::vector<double>> reset(std::uint64_t episode) = 0;
    virtual TaskStep step(const std::vector<std::vector<double>>& actions) = 0;
};

/// Feeder task: a fresh synthetic day per episode drawn from (profile_seed + episode).
class FeederTask : public Task {
  public:
    FeederTask(Case c, ProfileOptions profile, std::uint64_t profile_seed, EnvConfig config = {})
        : env_(std::move(c), std::move(config)), profile_opts_(profile), profile_seed_(profile_seed) {}

    /// Fixed profile replayed every episode.
    FeederTask(Case c, Profile fixed, EnvConfig config = {})
        : env_(std::move(c), std::move(config)), fixed_(std::move(fixed)) {
        profile_opts_.steps = fixed_->steps();
    }

    [[nodiscard]] std::size_t agent_count() const override { return env_.agent_count(); }
    [[nodiscard]] std::size_t obs_dim(std::size_t agent) const override { return env_.obs_dim(agent); }
    [[nodiscard]] std::size_t act_dim(std::size_t agent) const override { return env_.act_dim(agent); }
    [[nodiscard]] std::size_t horizon() const override { return profile_opts_.steps; }

    [[nodiscard]] Profile profile_for(std::uint64_t episode) const {
        if (fixed_) return *fixed_;
        return synthetic_profile(env_.case_data(), profile_seed_ + episode, profile_opts_);
    }

    std::vector<std::vector<double>> reset(std::uint64_t episode) override {
        return env_.features(env_.reset(profile_for(episode)));
    }

    TaskStep step(const std::vector<std::vector<double>>& actions) override {
        auto r = env_.step(actions);
        TaskStep out;
        out.done = r.done;
        if (r.status != StepStatus::ok) {
            out.failed = true;
            out.diagnostic = r.diagnostic;
            return out;
        }
        out.next_obs = env_.features(r.observations);
        out.rewards = std::move(r.rewards);
        out.costs = std::move(r.costs);
        out.loss_mw = r.loss_mw;
        out.system_cost = r.vvr;
        last_ = std::move(r);
        return out;
    }

    [[nodiscard]] VvcEnv& env() { return env_; }
    [[nodiscard]] const VvcEnv& env() const { return env_; }
    [[nodiscard]] const StepResult& last_step() const { return last_; }
    [[nodiscard]] const ProfileOptions& profile_options() const { return profile_opts_; }
    [[nodiscard]] std::uint64_t profile_seed() const { return profile_seed_; }

  private:
    VvcEnv env_;
    ProfileOptions profile_opts_;
    std::uint64_t profile_seed_ = 0;
    std::optional<Profile> fixed_;
    StepResult last_;
};

/// Single-agent view of a multi-agent task: observations and actions are concatenated, the
/// reward is the shared reward and the cost is (1 + beta) times the system-wide cost.
class CentralizedView : public Task {
  public:
    explicit CentralizedView(std::shared_ptr<Task> inner, double beta = 1.0) : inner_(std::move(inner)), beta_(beta) {
        if (!inner_) throw std::invalid_argument("CentralizedView needs a task");
    }

    [[nodiscard]] std::size_t agent_count() const override { return 1; }
    [[nodiscard]] std::size_t obs_dim(std::size_t) const override {
        std::size_t n = 0;
        for (std::size_t i = 0; i < inner_->agent_count(); ++i) n += inner_->obs_dim(i);
        return n;
    }
    [[nodiscard]] std::size_t act_dim(std::size_t) const override {
        std::size_t n = 0;
        for (std::size_t i = 0; i < inner_->agent_count(); ++i) n += inner_->act_dim(i);
        return n;
    }
    [[nodiscard]] std::size_t horizon() const override { return inner_->horizon(); }

    std::vector<std::vector<double>> reset(std::uint64_t episode) override { return {concat(inner_->reset(episode))}; }

    TaskStep step(const std::vector<std::vector<double>>& actions) override {
        if (actions.size() != 1 || actions[0].size() != act_dim(0)) {
            throw std::invalid_argument("centralized action has wrong dimension");
        }
        std::vector<std::vector<double>> split;
        std::size_t offset = 0;
        for (std::size_t i = 0; i < inner_->agent_count(); ++i) {
            const auto d = inner_->act_dim(i);
            split.emplace_back(actions[0].begin() + static_cast<std::ptrdiff_t>(offset),
                               actions[0].begin() + static_cast<std::ptrdiff_t>(offset + d));
            offset += d;
        }
        auto r = inner_->step(split);
        if (r.failed) return r;
        r.next_obs = {concat(r.next_obs)};
        r.rewards = {r.rewards.front()};
        r.costs = {(1.0 + beta_) * r.system_cost};
        return r;
    }

    [[nodiscard]] Task& inner() { return *inner_; }

  private:
    static std::vector<double> concat(const std::vector<std::vector<double>>& parts) {
        std::vector<double> out;
        for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
        return out;
    }

    std::shared_ptr<Task> inner_;
    double beta_;
};

}  // namespace vvc::env
