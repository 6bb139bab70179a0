#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/macsac/learner.hpp"
#include "vvc/macsac/replay.hpp"
#include "vvc/neural/checkpoint.hpp"
#include "vvc/neural/mlp.hpp"
#include "vvc/neural/optim.hpp"
#include "vvc/neural/policy.hpp"
#include "vvc/neural/tape.hpp"

namespace vvc::baselines {

struct MaddpgConfig {
    std::size_t hidden = 256;
    std::size_t layers = 2;
    double gamma = 0.99;
    double eta = 0.995;
    double lr = 1e-3;
    double noise = 0.07;    // std of the Gaussian exploration noise on normalized actions
    double penalty = 10.0;  // fixed weight of the cost folded into the reward
    std::size_t batch_size = 256;
    std::size_t buffer_capacity = 400000;
    double reward_scale = 1.0;  // applied to the penalized reward
    std::uint64_t seed = 0;
};

/// Frozen copy of a deterministic actor. The stochastic mode adds clipped Gaussian noise.
template <class T>
class DeterministicSnapshot : public macsac::LocalPolicy {
  public:
    DeterministicSnapshot(neural::DeterministicPolicy<T> policy, double noise, std::uint64_t version)
        : policy_(std::move(policy)),
          noise_(noise),
          version_(version),
          digest_(macsac::parameter_digest(policy_.net().parameters())) {}

    [[nodiscard]] std::vector<double> act(const std::vector<double>& obs, bool stochastic,
                                          std::mt19937_64& rng) const override {
        const auto o = macsac::row_matrix<T>(obs);
        return macsac::row_vector<T>(stochastic ? policy_.act_noisy(o, noise_, rng) : policy_.act(o));
    }
    [[nodiscard]] std::uint64_t version() const override { return version_; }
    [[nodiscard]] std::uint64_t digest() const override { return digest_; }

  private:
    neural::DeterministicPolicy<T> policy_;
    double noise_;
    std::uint64_t version_;
    std::uint64_t digest_;
};

/// Multi-agent DDPG with centralized critics and a fixed-weight cost penalty in the reward.
template <class T>
class Maddpg : public macsac::Learner {
  public:
    using Mat = neural::Matrix<T>;

    Maddpg(macsac::JointLayout layout, MaddpgConfig config)
        : layout_(std::move(layout)), cfg_(config), rng_(cfg_.seed), buffer_(layout_, cfg_.buffer_capacity) {
        const auto n = layout_.agents();
        if (n == 0 || layout_.act_dims.size() != n) throw std::invalid_argument("layout needs one entry per agent");
        if (!(cfg_.gamma >= 0.0 && cfg_.gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
        if (!(cfg_.noise >= 0.0)) throw std::invalid_argument("noise must be nonnegative");
        if (!(cfg_.penalty >= 0.0)) throw std::invalid_argument("penalty must be nonnegative");
        if (cfg_.batch_size == 0) throw std::invalid_argument("batch size must be positive");
        const auto critic_in = layout_.obs_total() + layout_.act_total();
        const neural::AdamOptions adam{cfg_.lr, 0.9, 0.999, 1e-8};
        agents_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& ag = agents_[i];
            const auto tag = "agent" + std::to_string(i);
            ag.actor = neural::DeterministicPolicy<T>(layout_.obs_dims[i], layout_.act_dims[i], cfg_.hidden, cfg_.layers,
                                                      rng_, tag + ".actor");
            ag.actor_target = ag.actor;
            rename(ag.actor_target.net(), tag + ".actor", tag + ".actor_target");
            ag.actor_opt = neural::Adam<T>(ag.actor.net().parameters(), adam);
            ag.critic = neural::Mlp<T>(neural::layer_widths(critic_in, cfg_.hidden, cfg_.layers, 1), rng_, tag + ".critic");
            ag.critic_target = ag.critic;
            rename(ag.critic_target, tag + ".critic", tag + ".critic_target");
            ag.critic_opt = neural::Adam<T>(ag.critic.parameters(), adam);
        }
    }

    [[nodiscard]] std::string name() const override { return "maddpg"; }
    [[nodiscard]] const macsac::JointLayout& layout() const override { return layout_; }
    [[nodiscard]] std::uint64_t updates() const override { return updates_; }
    [[nodiscard]] const macsac::ReplayBuffer& buffer() const override { return buffer_; }
    [[nodiscard]] const MaddpgConfig& config() const { return cfg_; }
    void store(macsac::Transition t) override { buffer_.add(std::move(t)); }

    neural::DeterministicPolicy<T>& actor(std::size_t i) { return agents_.at(i).actor; }
    neural::DeterministicPolicy<T>& actor_target(std::size_t i) { return agents_.at(i).actor_target; }
    neural::Mlp<T>& critic(std::size_t i) { return agents_.at(i).critic; }
    neural::Mlp<T>& critic_target(std::size_t i) { return agents_.at(i).critic_target; }

    [[nodiscard]] std::shared_ptr<const macsac::LocalPolicy> ship_policy(std::size_t agent) const override {
        return std::make_shared<DeterministicSnapshot<T>>(agents_.at(agent).actor, cfg_.noise, updates_);
    }

    [[nodiscard]] Mat obs_block(const Mat& x, std::size_t j) const {
        return x.middleCols(static_cast<Eigen::Index>(layout_.obs_offset(j)), static_cast<Eigen::Index>(layout_.obs_dims[j]));
    }

    /// y_i = s (r_i - penalty r^c_i) + gamma (1 - done) Q'_i(x', mu'_1(o'_1), ..., mu'_N(o'_N)).
    [[nodiscard]] Mat critic_target_values(std::size_t i, const macsac::Batch<T>& batch) const {
        Mat input(batch.size(), static_cast<Eigen::Index>(layout_.obs_total() + layout_.act_total()));
        input.leftCols(batch.x_next.cols()) = batch.x_next;
        for (std::size_t j = 0; j < agents_.size(); ++j) {
            input.middleCols(batch.x_next.cols() + static_cast<Eigen::Index>(layout_.act_offset(j)),
                             static_cast<Eigen::Index>(layout_.act_dims[j])) =
                agents_[j].actor_target.act(obs_block(batch.x_next, j));
        }
        const Mat q = agents_.at(i).critic_target.predict(input);
        const Mat live = (T(1) - batch.done.array()).matrix();
        const Mat r = static_cast<T>(cfg_.reward_scale) *
                      (batch.r.col(i) - static_cast<T>(cfg_.penalty) * batch.r_c.col(i));
        Mat y = r + static_cast<T>(cfg_.gamma) * live.cwiseProduct(q);
        if (!y.allFinite()) throw std::runtime_error("agent " + std::to_string(i) + ": non-finite critic target");
        return y;
    }

    neural::Var<T> critic_loss(neural::Tape<T>& tape, std::size_t i, const macsac::Batch<T>& batch, const Mat& target) {
        Mat input(batch.size(), batch.x.cols() + batch.a.cols());
        input << batch.x, batch.a;
        const auto q = agents_.at(i).critic.forward(tape, tape.constant(input));
        return neural::mean(neural::square(neural::sub(q, tape.constant(target))));
    }

    /// -E[Q_i(x, a_1, .., mu_i(o_i), .., a_N)] with the other agents' actions taken from the batch.
    neural::Var<T> actor_loss(neural::Tape<T>& tape, std::size_t i, const macsac::Batch<T>& batch) {
        auto& ag = agents_.at(i);
        const auto own = ag.actor.forward(tape, tape.constant(obs_block(batch.x, i)));
        std::vector<neural::Var<T>> parts{tape.constant(batch.x)};
        for (std::size_t j = 0; j < agents_.size(); ++j) {
            if (j == i) {
                parts.push_back(own);
            } else {
                parts.push_back(tape.constant(batch.a.middleCols(static_cast<Eigen::Index>(layout_.act_offset(j)),
                                                                 static_cast<Eigen::Index>(layout_.act_dims[j]))));
            }
        }
        const auto q = ag.critic.forward(tape, neural::concat_cols(parts), false);
        return neural::scale(neural::mean(q), T(-1));
    }

    macsac::TrainMetrics train_step() override {
        macsac::TrainMetrics m;
        const auto n = agents_.size();
        m.update = updates_;
        if (buffer_.size() < cfg_.batch_size) {
            m.skipped_reason = "buffer holds " + std::to_string(buffer_.size()) + " < batch " +
                               std::to_string(cfg_.batch_size);
            return m;
        }
        std::vector<macsac::Batch<T>> batches;
        for (std::size_t i = 0; i < n; ++i) batches.push_back(buffer_.sample<T>(cfg_.batch_size, rng_));
        m.agents.resize(n);
        std::vector<Mat> targets;
        for (std::size_t i = 0; i < n; ++i) targets.push_back(critic_target_values(i, batches[i]));
        for (std::size_t i = 0; i < n; ++i) {
            auto& ag = agents_[i];
            ag.critic.zero_grad();
            neural::Tape<T> tape;
            const auto loss = critic_loss(tape, i, batches[i], targets[i]);
            check_finite(loss.scalar(), i, "critic loss");
            tape.backward(loss);
            ag.critic_opt.step(ag.critic.parameters());
            m.agents[i].critic_loss = static_cast<double>(loss.scalar());
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto& ag = agents_[i];
            ag.actor.net().zero_grad();
            neural::Tape<T> tape;
            const auto loss = actor_loss(tape, i, batches[i]);
            check_finite(loss.scalar(), i, "actor loss");
            tape.backward(loss);
            ag.actor_opt.step(ag.actor.net().parameters());
            m.agents[i].actor_loss = static_cast<double>(loss.scalar());
            m.agents[i].q_mean = -static_cast<double>(loss.scalar());
        }
        for (auto& ag : agents_) {
            neural::polyak_update(ag.critic_target.parameters(), ag.critic.parameters(), cfg_.eta);
            neural::polyak_update(ag.actor_target.net().parameters(), ag.actor.net().parameters(), cfg_.eta);
        }
        ++updates_;
        m.trained = true;
        m.update = updates_;
        return m;
    }

    [[nodiscard]] nlohmann::json checkpoint() const override {
        std::vector<const std::vector<neural::Parameter<T>>*> groups;
        for (const auto& ag : agents_) {
            groups.push_back(&ag.actor.net().parameters());
            groups.push_back(&ag.actor_target.net().parameters());
            groups.push_back(&ag.critic.parameters());
            groups.push_back(&ag.critic_target.parameters());
        }
        return neural::checkpoint_json<T>(groups, {{"learner", name()}, {"updates", updates_}});
    }

    void restore(const nlohmann::json& doc) {
        std::vector<std::vector<neural::Parameter<T>>*> groups;
        for (auto& ag : agents_) {
            groups.push_back(&ag.actor.net().parameters());
            groups.push_back(&ag.actor_target.net().parameters());
            groups.push_back(&ag.critic.parameters());
            groups.push_back(&ag.critic_target.parameters());
        }
        neural::restore_checkpoint<T>(doc, groups);
        updates_ = doc.at("meta").at("updates").get<std::uint64_t>();
    }

  private:
    struct Agent {
        neural::DeterministicPolicy<T> actor;
        neural::DeterministicPolicy<T> actor_target;
        neural::Adam<T> actor_opt;
        neural::Mlp<T> critic;
        neural::Mlp<T> critic_target;
        neural::Adam<T> critic_opt;
    };

    static void rename(neural::Mlp<T>& net, const std::string& from, const std::string& to) {
        for (auto& p : net.parameters()) {
            if (p.name.rfind(from, 0) == 0) p.name = to + p.name.substr(from.size());
        }
    }

    static void check_finite(T v, std::size_t i, const char* what) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw std::runtime_error("agent " + std::to_string(i) + ": " + what + " is not finite");
        }
    }

    macsac::JointLayout layout_;
    MaddpgConfig cfg_;
    std::mt19937_64 rng_;
    macsac::ReplayBuffer buffer_;
    std::vector<Agent> agents_;
    std::uint64_t updates_ = 0;
};

}  // namespace vvc::baselines
