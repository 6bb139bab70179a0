#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
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

namespace vvc::macsac {

struct MacsacConfig {
    std::size_t hidden = 256;
    std::size_t layers = 2;
    std::vector<double> alpha;       // entropy weight per agent; empty -> 0.1 each
    std::vector<double> cost_bound;  // discounted cost bound per agent; empty -> 0 each
    double gamma = 0.99;
    double eta = 0.995;        // target tracking: target <- eta * target + (1 - eta) * online
    double lr = 1e-3;          // actors and critics
    double lambda_lr = 1e-3;
    double lambda_init = 0.0;
    bool learn_lambda = true;  // false freezes every multiplier at lambda_init
    bool twin_critics = false;
    std::size_t batch_size = 256;
    std::size_t buffer_capacity = 400000;
    // Learner-side multipliers applied to stored rewards and costs before any target is formed.
    double reward_scale = 1.0;
    double cost_scale = 1.0;
    std::uint64_t seed = 0;
};

template <class T>
struct CriticTargets {
    neural::Matrix<T> y;    // B x 1
    neural::Matrix<T> y_c;  // B x 1
};

template <class T>
struct ActorLoss {
    neural::Var<T> loss;
    neural::Matrix<T> log_prob;
    neural::Matrix<T> q;
    neural::Matrix<T> q_c;
};

/// Frozen copy of a squashed-Gaussian actor.
template <class T>
class GaussianSnapshot : public LocalPolicy {
  public:
    GaussianSnapshot(neural::SquashedGaussianPolicy<T> policy, std::uint64_t version)
        : policy_(std::move(policy)), version_(version), digest_(parameter_digest(policy_.trunk().parameters())) {}

    [[nodiscard]] std::vector<double> act(const std::vector<double>& obs, bool stochastic,
                                          std::mt19937_64& rng) const override {
        const auto o = row_matrix<T>(obs);
        const auto d = static_cast<Eigen::Index>(policy_.act_dim());
        const neural::Matrix<T> xi =
            stochastic ? neural::standard_normal<T>(1, d, rng) : neural::Matrix<T>::Zero(1, d);
        return row_vector<T>(policy_.sample_values(o, xi).action);
    }
    [[nodiscard]] std::uint64_t version() const override { return version_; }
    [[nodiscard]] std::uint64_t digest() const override { return digest_; }
    [[nodiscard]] const neural::SquashedGaussianPolicy<T>& policy() const { return policy_; }

  private:
    neural::SquashedGaussianPolicy<T> policy_;
    std::uint64_t version_;
    std::uint64_t digest_;
};

namespace detail {

template <class T>
neural::Mlp<T> renamed(neural::Mlp<T> net, const std::string& from, const std::string& to) {
    for (auto& p : net.parameters()) {
        if (p.name.rfind(from, 0) == 0) p.name = to + p.name.substr(from.size());
    }
    return net;
}

template <class T>
neural::Matrix<T> concat_cols(const std::vector<const neural::Matrix<T>*>& parts) {
    Eigen::Index cols = 0;
    for (const auto* p : parts) cols += p->cols();
    neural::Matrix<T> out(parts.front()->rows(), cols);
    Eigen::Index off = 0;
    for (const auto* p : parts) {
        out.middleCols(off, p->cols()) = *p;
        off += p->cols();
    }
    return out;
}

}  // namespace detail

/// Multi-agent constrained soft actor-critic. Each agent owns a local squashed-Gaussian actor
/// over its own observation, and centralized reward and cost critics over (x, a_1..a_N).
template <class T>
class Macsac : public Learner {
  public:
    using Mat = neural::Matrix<T>;

    Macsac(JointLayout layout, MacsacConfig config)
        : layout_(std::move(layout)), cfg_(std::move(config)), rng_(cfg_.seed), buffer_(layout_, cfg_.buffer_capacity) {
        const auto n = layout_.agents();
        if (n == 0 || layout_.act_dims.size() != n) throw std::invalid_argument("layout needs one entry per agent");
        if (cfg_.alpha.empty()) cfg_.alpha.assign(n, 0.1);
        if (cfg_.cost_bound.empty()) cfg_.cost_bound.assign(n, 0.0);
        if (cfg_.alpha.size() != n || cfg_.cost_bound.size() != n) {
            throw std::invalid_argument("alpha and cost_bound need one entry per agent");
        }
        for (double a : cfg_.alpha) {
            if (!(a >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
        }
        if (!(cfg_.gamma >= 0.0 && cfg_.gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
        if (cfg_.batch_size == 0) throw std::invalid_argument("batch size must be positive");
        if (cfg_.lambda_init < 0.0) throw std::invalid_argument("lambda must start nonnegative");

        const auto critic_in = layout_.obs_total() + layout_.act_total();
        const std::size_t twins = cfg_.twin_critics ? 2 : 1;
        const neural::AdamOptions adam{cfg_.lr, 0.9, 0.999, 1e-8};
        agents_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& ag = agents_[i];
            const auto tag = "agent" + std::to_string(i);
            ag.actor = neural::SquashedGaussianPolicy<T>(layout_.obs_dims[i], layout_.act_dims[i], cfg_.hidden,
                                                         cfg_.layers, rng_, tag + ".actor");
            ag.actor_opt = neural::Adam<T>(ag.actor.trunk().parameters(), adam);
            for (std::size_t k = 0; k < twins; ++k) {
                const auto name = tag + ".critic" + std::to_string(k);
                ag.critics.emplace_back(neural::layer_widths(critic_in, cfg_.hidden, cfg_.layers, 1), rng_, name);
                ag.critic_targets.push_back(detail::renamed(ag.critics.back(), name, name + "_target"));
                ag.critic_opts.emplace_back(ag.critics.back().parameters(), adam);
            }
            const auto cname = tag + ".cost_critic";
            ag.cost_critic = neural::Mlp<T>(neural::layer_widths(critic_in, cfg_.hidden, cfg_.layers, 1), rng_, cname);
            ag.cost_target = detail::renamed(ag.cost_critic, cname, cname + "_target");
            ag.cost_opt = neural::Adam<T>(ag.cost_critic.parameters(), adam);
            ag.lambda = cfg_.lambda_init;
        }
    }

    [[nodiscard]] std::string name() const override { return "macsac"; }
    [[nodiscard]] const JointLayout& layout() const override { return layout_; }
    [[nodiscard]] std::uint64_t updates() const override { return updates_; }
    [[nodiscard]] const MacsacConfig& config() const { return cfg_; }
    [[nodiscard]] std::size_t agent_count() const { return agents_.size(); }
    [[nodiscard]] const ReplayBuffer& buffer() const override { return buffer_; }
    void store(Transition t) override { buffer_.add(std::move(t)); }
    std::mt19937_64& rng() { return rng_; }

    neural::SquashedGaussianPolicy<T>& actor(std::size_t i) { return agents_.at(i).actor; }
    [[nodiscard]] const neural::SquashedGaussianPolicy<T>& actor(std::size_t i) const { return agents_.at(i).actor; }
    neural::Mlp<T>& critic(std::size_t i, std::size_t k = 0) { return agents_.at(i).critics.at(k); }
    neural::Mlp<T>& critic_target(std::size_t i, std::size_t k = 0) { return agents_.at(i).critic_targets.at(k); }
    neural::Mlp<T>& cost_critic(std::size_t i) { return agents_.at(i).cost_critic; }
    neural::Mlp<T>& cost_target(std::size_t i) { return agents_.at(i).cost_target; }
    [[nodiscard]] double lambda(std::size_t i) const { return agents_.at(i).lambda; }
    void set_lambda(std::size_t i, double v) {
        if (v < 0.0) throw std::invalid_argument("lambda must be nonnegative");
        agents_.at(i).lambda = v;
    }
    void set_alpha(std::size_t i, double a) { cfg_.alpha.at(i) = a; }

    [[nodiscard]] std::shared_ptr<const LocalPolicy> ship_policy(std::size_t agent) const override {
        return std::make_shared<GaussianSnapshot<T>>(agents_.at(agent).actor, updates_);
    }

    // ---- loss builders; deterministic given the supplied noise ------------------------------

    [[nodiscard]] Mat obs_block(const Mat& x, std::size_t j) const {
        return x.middleCols(static_cast<Eigen::Index>(layout_.obs_offset(j)), static_cast<Eigen::Index>(layout_.obs_dims[j]));
    }

    [[nodiscard]] Mat critic_input(const Mat& x, const Mat& a) const { return detail::concat_cols<T>({&x, &a}); }

    /// y_i and y^c_i for agent i; next_noise holds one B x act_dim(j) matrix per agent.
    [[nodiscard]] CriticTargets<T> critic_targets(std::size_t i, const Batch<T>& batch,
                                                  const std::vector<Mat>& next_noise) const {
        const auto& ag = agents_.at(i);
        std::vector<Mat> next_actions(agents_.size());
        Mat log_prob_i;
        for (std::size_t j = 0; j < agents_.size(); ++j) {
            auto v = agents_[j].actor.sample_values(obs_block(batch.x_next, j), next_noise.at(j));
            next_actions[j] = std::move(v.action);
            if (j == i) log_prob_i = std::move(v.log_prob);
        }
        std::vector<const Mat*> parts{&batch.x_next};
        for (const auto& a : next_actions) parts.push_back(&a);
        const Mat input = detail::concat_cols<T>(parts);

        Mat q = ag.critic_targets[0].predict(input);
        for (std::size_t k = 1; k < ag.critic_targets.size(); ++k) q = q.cwiseMin(ag.critic_targets[k].predict(input));
        const Mat q_c = ag.cost_target.predict(input);

        const T gamma = static_cast<T>(cfg_.gamma);
        const T alpha = static_cast<T>(cfg_.alpha[i]);
        const Mat live = (T(1) - batch.done.array()).matrix();
        CriticTargets<T> out;
        out.y = static_cast<T>(cfg_.reward_scale) * batch.r.col(i) +
                gamma * live.cwiseProduct(q - alpha * log_prob_i);
        out.y_c = static_cast<T>(cfg_.cost_scale) * batch.r_c.col(i) + gamma * live.cwiseProduct(q_c);
        if (!out.y.allFinite() || !out.y_c.allFinite()) {
            throw std::runtime_error("agent " + std::to_string(i) + ": non-finite critic target");
        }
        return out;
    }

    /// Mean squared TD error of reward critic k (or the cost critic when k is npos).
    neural::Var<T> critic_loss(neural::Tape<T>& tape, std::size_t i, std::size_t k, const Batch<T>& batch,
                               const Mat& target) {
        auto& net = k == kCost ? agents_.at(i).cost_critic : agents_.at(i).critics.at(k);
        const auto q = net.forward(tape, tape.constant(critic_input(batch.x, batch.a)));
        return neural::mean(neural::square(neural::sub(q, tape.constant(target))));
    }

    /// Negated Lagrangian for agent i. Only agent i's action carries gradient; the other
    /// agents' actions are given (already sampled) and the critics enter as constants.
    ActorLoss<T> actor_loss(neural::Tape<T>& tape, std::size_t i, const Batch<T>& batch, const Mat& noise,
                            const std::vector<Mat>& other_actions) {
        auto& ag = agents_.at(i);
        const auto s = ag.actor.sample(tape, tape.constant(obs_block(batch.x, i)), noise);
        std::vector<neural::Var<T>> parts{tape.constant(batch.x)};
        for (std::size_t j = 0; j < agents_.size(); ++j) parts.push_back(j == i ? s.action : tape.constant(other_actions.at(j)));
        const auto input = neural::concat_cols(parts);
        auto q = ag.critics[0].forward(tape, input, false);
        for (std::size_t k = 1; k < ag.critics.size(); ++k) q = neural::minimum(q, ag.critics[k].forward(tape, input, false));
        const auto q_c = ag.cost_critic.forward(tape, input, false);

        const T alpha = static_cast<T>(cfg_.alpha[i]);
        const T lambda = static_cast<T>(ag.lambda);
        const T bound = static_cast<T>(cfg_.cost_bound[i] * cfg_.cost_scale);
        // -( E[Q - alpha log pi] + lambda (bound - E[Q^c]) )
        auto loss = neural::sub(neural::mean(neural::scale(s.log_prob, alpha)), neural::mean(q));
        loss = neural::add(loss, neural::scale(neural::mean(q_c), lambda));
        loss = neural::add_scalar(loss, -lambda * bound);
        return {loss, s.log_prob.value(), q.value(), q_c.value()};
    }

    // ---- individual update steps ----------------------------------------------------------

    /// One Adam step on every reward critic and the cost critic of agent i.
    std::pair<double, double> critic_update(std::size_t i, const Batch<T>& batch, const CriticTargets<T>& targets) {
        auto& ag = agents_.at(i);
        double reward_loss = 0.0;
        for (std::size_t k = 0; k < ag.critics.size(); ++k) {
            ag.critics[k].zero_grad();
            neural::Tape<T> tape;
            const auto loss = critic_loss(tape, i, k, batch, targets.y);
            check_finite(loss.scalar(), i, "critic loss");
            tape.backward(loss);
            ag.critic_opts[k].step(ag.critics[k].parameters());
            reward_loss += static_cast<double>(loss.scalar());
        }
        ag.cost_critic.zero_grad();
        neural::Tape<T> tape;
        const auto loss = critic_loss(tape, i, kCost, batch, targets.y_c);
        check_finite(loss.scalar(), i, "cost critic loss");
        tape.backward(loss);
        ag.cost_opt.step(ag.cost_critic.parameters());
        return {reward_loss / static_cast<double>(ag.critics.size()), static_cast<double>(loss.scalar())};
    }

    struct ActorStep {
        double loss = 0.0;
        double entropy = 0.0;
        double q_mean = 0.0;
        double qc_mean = 0.0;
    };

    ActorStep actor_update(std::size_t i, const Batch<T>& batch, const Mat& noise, const std::vector<Mat>& other_actions) {
        auto& ag = agents_.at(i);
        ag.actor.trunk().zero_grad();
        neural::Tape<T> tape;
        const auto parts = actor_loss(tape, i, batch, noise, other_actions);
        check_finite(parts.loss.scalar(), i, "actor loss");
        tape.backward(parts.loss);
        ag.actor_opt.step(ag.actor.trunk().parameters());
        return {static_cast<double>(parts.loss.scalar()), -static_cast<double>(parts.log_prob.mean()),
                static_cast<double>(parts.q.mean()), static_cast<double>(parts.q_c.mean())};
    }

    /// Projected ascent on the multiplier: lambda <- max(0, lambda + lr (E[Q^c] - bound)).
    double lambda_update(std::size_t i, double qc_mean) {
        auto& ag = agents_.at(i);
        if (!cfg_.learn_lambda) return ag.lambda;
        const double bound = cfg_.cost_bound[i] * cfg_.cost_scale;
        ag.lambda = std::max(0.0, ag.lambda + cfg_.lambda_lr * (qc_mean - bound));
        return ag.lambda;
    }

    void update_targets(std::size_t i) {
        auto& ag = agents_.at(i);
        for (std::size_t k = 0; k < ag.critics.size(); ++k) {
            neural::polyak_update(ag.critic_targets[k].parameters(), ag.critics[k].parameters(), cfg_.eta);
        }
        neural::polyak_update(ag.cost_target.parameters(), ag.cost_critic.parameters(), cfg_.eta);
    }

    /// Noise for the next-state actions of every agent at batch size b.
    std::vector<Mat> draw_next_noise(Eigen::Index b) {
        std::vector<Mat> out;
        for (std::size_t j = 0; j < agents_.size(); ++j) {
            out.push_back(neural::standard_normal<T>(b, static_cast<Eigen::Index>(layout_.act_dims[j]), rng_));
        }
        return out;
    }

    /// Critics, then actors, then multipliers, then targets, with every agent sampling its own
    /// batch. Within a phase all agents see the same (pre-phase) networks of the others.
    TrainMetrics train_step() override {
        TrainMetrics m;
        const auto n = agents_.size();
        if (buffer_.size() < cfg_.batch_size) {
            m.skipped_reason = "buffer holds " + std::to_string(buffer_.size()) + " < batch " +
                               std::to_string(cfg_.batch_size);
            m.update = updates_;
            return m;
        }
        const auto b = static_cast<Eigen::Index>(cfg_.batch_size);
        std::vector<Batch<T>> batches;
        for (std::size_t i = 0; i < n; ++i) batches.push_back(buffer_.sample<T>(cfg_.batch_size, rng_));
        m.agents.resize(n);

        std::vector<CriticTargets<T>> targets;
        for (std::size_t i = 0; i < n; ++i) targets.push_back(critic_targets(i, batches[i], draw_next_noise(b)));
        for (std::size_t i = 0; i < n; ++i) {
            const auto [lq, lc] = critic_update(i, batches[i], targets[i]);
            m.agents[i].critic_loss = lq;
            m.agents[i].cost_critic_loss = lc;
        }

        std::vector<Mat> own_noise(n);
        std::vector<std::vector<Mat>> others(n, std::vector<Mat>(n));
        for (std::size_t i = 0; i < n; ++i) {
            own_noise[i] = neural::standard_normal<T>(b, static_cast<Eigen::Index>(layout_.act_dims[i]), rng_);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const Mat xi = neural::standard_normal<T>(b, static_cast<Eigen::Index>(layout_.act_dims[j]), rng_);
                others[i][j] = agents_[j].actor.sample_values(obs_block(batches[i].x, j), xi).action;
            }
        }
        std::vector<double> qc_means(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto st = actor_update(i, batches[i], own_noise[i], others[i]);
            m.agents[i].actor_loss = st.loss;
            m.agents[i].entropy = st.entropy;
            m.agents[i].q_mean = st.q_mean;
            m.agents[i].qc_mean = st.qc_mean;
            qc_means[i] = st.qc_mean;
        }
        for (std::size_t i = 0; i < n; ++i) m.agents[i].lambda = lambda_update(i, qc_means[i]);
        for (std::size_t i = 0; i < n; ++i) update_targets(i);

        ++updates_;
        m.trained = true;
        m.update = updates_;
        return m;
    }

    [[nodiscard]] nlohmann::json checkpoint() const override {
        std::vector<const std::vector<neural::Parameter<T>>*> groups;
        nlohmann::json lambdas = nlohmann::json::array();
        for (const auto& ag : agents_) {
            groups.push_back(&ag.actor.trunk().parameters());
            for (const auto& c : ag.critics) groups.push_back(&c.parameters());
            for (const auto& c : ag.critic_targets) groups.push_back(&c.parameters());
            groups.push_back(&ag.cost_critic.parameters());
            groups.push_back(&ag.cost_target.parameters());
            lambdas.push_back(ag.lambda);
        }
        return neural::checkpoint_json<T>(groups, {{"learner", name()}, {"updates", updates_}, {"lambda", lambdas}});
    }

    void restore(const nlohmann::json& doc) {
        std::vector<std::vector<neural::Parameter<T>>*> groups;
        for (auto& ag : agents_) {
            groups.push_back(&ag.actor.trunk().parameters());
            for (auto& c : ag.critics) groups.push_back(&c.parameters());
            for (auto& c : ag.critic_targets) groups.push_back(&c.parameters());
            groups.push_back(&ag.cost_critic.parameters());
            groups.push_back(&ag.cost_target.parameters());
        }
        neural::restore_checkpoint<T>(doc, groups);
        const auto& meta = doc.at("meta");
        const auto lambdas = meta.at("lambda").get<std::vector<double>>();
        if (lambdas.size() != agents_.size()) throw std::invalid_argument("checkpoint agent count differs");
        for (std::size_t i = 0; i < agents_.size(); ++i) set_lambda(i, lambdas[i]);
        updates_ = meta.at("updates").get<std::uint64_t>();
    }

    static constexpr std::size_t kCost = static_cast<std::size_t>(-1);

  private:
    struct Agent {
        neural::SquashedGaussianPolicy<T> actor;
        neural::Adam<T> actor_opt;
        std::vector<neural::Mlp<T>> critics;
        std::vector<neural::Mlp<T>> critic_targets;
        std::vector<neural::Adam<T>> critic_opts;
        neural::Mlp<T> cost_critic;
        neural::Mlp<T> cost_target;
        neural::Adam<T> cost_opt;
        double lambda = 0.0;
    };

    static void check_finite(T v, std::size_t i, const char* what) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw std::runtime_error("agent " + std::to_string(i) + ": " + what + " is not finite");
        }
    }

    JointLayout layout_;
    MacsacConfig cfg_;
    std::mt19937_64 rng_;
    ReplayBuffer buffer_;
    std::vector<Agent> agents_;
    std::uint64_t updates_ = 0;
};

}  // namespace vvc::macsac
