#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vvc/macsac/replay.hpp"
#include "vvc/neural/tape.hpp"
#include "vvc/util/hash.hpp"

namespace vvc::macsac {

/// Immutable policy copy held by a local controller. It sees only its own observation.
class LocalPolicy {
  public:
    virtual ~LocalPolicy() = default;
    /// stochastic = false selects the deterministic mode (zero exploration noise).
    [[nodiscard]] virtual std::vector<double> act(const std::vector<double>& obs, bool stochastic,
                                                  std::mt19937_64& rng) const = 0;
    [[nodiscard]] virtual std::uint64_t version() const = 0;
    [[nodiscard]] virtual std::uint64_t digest() const = 0;
};

struct AgentMetrics {
    double critic_loss = 0.0;
    double cost_critic_loss = 0.0;
    double actor_loss = 0.0;
    double entropy = 0.0;
    double lambda = 0.0;
    double q_mean = 0.0;
    double qc_mean = 0.0;
};

struct TrainMetrics {
    bool trained = false;
    std::string skipped_reason;
    std::uint64_t update = 0;
    std::vector<AgentMetrics> agents;
};

/// Off-policy learner driven by the OLDC scheduler and the experiment runner.
class Learner {
  public:
    virtual ~Learner() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual const JointLayout& layout() const = 0;
    [[nodiscard]] virtual std::uint64_t updates() const = 0;
    /// Snapshot of agent i's current actor, tagged with the learner's update count.
    [[nodiscard]] virtual std::shared_ptr<const LocalPolicy> ship_policy(std::size_t agent) const = 0;
    virtual void store(Transition t) = 0;
    [[nodiscard]] virtual const ReplayBuffer& buffer() const = 0;
    /// One update of every agent; a no-op with a reason when the buffer is too small.
    virtual TrainMetrics train_step() = 0;
    [[nodiscard]] virtual nlohmann::json checkpoint() const = 0;
};

template <class T>
std::uint64_t parameter_digest(const std::vector<neural::Parameter<T>>& params, std::uint64_t seed = util::kFnvOffset) {
    std::uint64_t h = seed;
    for (const auto& p : params) {
        h = util::fnv1a(p.value.data(), static_cast<std::size_t>(p.value.size()) * sizeof(T), h);
    }
    return h;
}

template <class T>
neural::Matrix<T> row_matrix(const std::vector<double>& v) {
    neural::Matrix<T> m(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) m(0, static_cast<Eigen::Index>(k)) = static_cast<T>(v[k]);
    return m;
}

template <class T>
std::vector<double> row_vector(const neural::Matrix<T>& m) {
    std::vector<double> v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) v[static_cast<std::size_t>(k)] = static_cast<double>(m(0, k));
    return v;
}

}  // namespace vvc::macsac
