#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/neural/mlp.hpp"
#include "vvc/neural/tape.hpp"

namespace vvc::neural {

template <class T>
struct PolicySample {
    Var<T> action;    // B x d, strictly inside (-1, 1)
    Var<T> log_prob;  // B x 1
};

template <class T>
struct PolicyValues {
    Matrix<T> action;
    Matrix<T> log_prob;
};

/// Standard-normal noise matrix drawn from an injected generator.
template <class T>
Matrix<T> standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix<T> m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = static_cast<T>(n(rng));
    }
    return m;
}

/// a = tanh(mu(o) + sigma(o) * xi), with the trunk emitting [mu | log sigma].
template <class T>
class SquashedGaussianPolicy {
  public:
    static constexpr double kLogSigmaMin = -20.0;
    static constexpr double kLogSigmaMax = 2.0;

    SquashedGaussianPolicy() = default;
    SquashedGaussianPolicy(std::size_t obs_dim, std::size_t act_dim, std::size_t hidden, std::size_t layers,
                           std::mt19937_64& rng, const std::string& name = "actor")
        : act_dim_(act_dim), trunk_(layer_widths(obs_dim, hidden, layers, 2 * act_dim), rng, name) {}

    [[nodiscard]] std::size_t obs_dim() const { return trunk_.input_dim(); }
    [[nodiscard]] std::size_t act_dim() const { return act_dim_; }
    Mlp<T>& trunk() { return trunk_; }
    [[nodiscard]] const Mlp<T>& trunk() const { return trunk_; }

    /// Recorded reparameterized sample. xi must be B x act_dim.
    PolicySample<T> sample(Tape<T>& tape, Var<T> obs, const Matrix<T>& xi, bool trainable = true) {
        const auto d = static_cast<Eigen::Index>(act_dim_);
        if (xi.rows() != obs.rows() || xi.cols() != d) throw std::invalid_argument("policy noise has wrong shape");
        const Var<T> out = trunk_.forward(tape, obs, trainable);
        if (!out.value().allFinite()) throw std::runtime_error("policy network produced a non-finite output");
        const Var<T> mu = slice_cols(out, 0, d);
        const Var<T> log_sigma = clamp(slice_cols(out, d, d), T(kLogSigmaMin), T(kLogSigmaMax));
        const Var<T> noise = tape.constant(xi);
        const Var<T> u = add(mu, mul(exp(log_sigma), noise));
        const Var<T> action = tanh(u);

        // Gaussian log-density of u: (u - mu) / sigma == xi, so that term is a constant.
        const Matrix<T> gauss_const =
            (T(-0.5) * xi.array().square() - T(0.5 * std::log(2.0 * std::numbers::pi))).matrix();
        const Var<T> gauss = sub(tape.constant(gauss_const), log_sigma);
        // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), stable for large |u|.
        const Var<T> correction =
            scale(sub(tape.constant(Matrix<T>::Constant(u.rows(), u.cols(), T(std::numbers::ln2))),
                      add(u, softplus(scale(u, T(-2))))),
                  T(2));
        const Var<T> log_prob = sum_cols(sub(gauss, correction));
        return {action, log_prob};
    }

    /// Unrecorded sample; xi = 0 gives the deterministic action tanh(mu).
    [[nodiscard]] PolicyValues<T> sample_values(const Matrix<T>& obs, const Matrix<T>& xi) const {
        const auto [mu, log_sigma] = head(obs);
        if (xi.rows() != obs.rows() || xi.cols() != mu.cols()) throw std::invalid_argument("policy noise has wrong shape");
        const Matrix<T> u = mu + log_sigma.array().exp().matrix().cwiseProduct(xi);
        PolicyValues<T> r;
        r.action = u.array().tanh().matrix();
        r.log_prob = log_density(u, xi, log_sigma);
        return r;
    }

    [[nodiscard]] Matrix<T> deterministic(const Matrix<T>& obs) const {
        return head(obs).first.array().tanh().matrix();
    }

    /// Log-density of a given squashed action (entries strictly inside (-1, 1)).
    [[nodiscard]] Matrix<T> log_prob_of(const Matrix<T>& obs, const Matrix<T>& action) const {
        const auto [mu, log_sigma] = head(obs);
        const Matrix<T> u = action.array().atanh().matrix();
        const Matrix<T> xi = ((u - mu).array() / log_sigma.array().exp()).matrix();
        return log_density(u, xi, log_sigma);
    }

    /// Clamped log sigma for a batch (exposed for bound checks).
    [[nodiscard]] Matrix<T> log_sigma(const Matrix<T>& obs) const { return head(obs).second; }

  private:
    [[nodiscard]] std::pair<Matrix<T>, Matrix<T>> head(const Matrix<T>& obs) const {
        const Matrix<T> out = trunk_.predict(obs);
        if (!out.allFinite()) throw std::runtime_error("policy network produced a non-finite output");
        const auto d = static_cast<Eigen::Index>(act_dim_);
        Matrix<T> ls = out.middleCols(d, d).cwiseMax(T(kLogSigmaMin)).cwiseMin(T(kLogSigmaMax));
        return {out.leftCols(d), std::move(ls)};
    }

    static Matrix<T> log_density(const Matrix<T>& u, const Matrix<T>& xi, const Matrix<T>& log_sigma) {
        const auto x = (T(-2) * u).array();
        const auto sp = x.max(T(0)) + (-x.abs()).exp().log1p();
        const auto corr = T(2) * (T(std::numbers::ln2) - u.array() - sp);
        const auto g = T(-0.5) * xi.array().square() - log_sigma.array() - T(0.5 * std::log(2.0 * std::numbers::pi));
        return (g - corr).matrix().rowwise().sum();
    }

    std::size_t act_dim_ = 0;
    Mlp<T> trunk_;
};

/// o -> tanh(mlp(o)), used by MADDPG.
template <class T>
class DeterministicPolicy {
  public:
    DeterministicPolicy() = default;
    DeterministicPolicy(std::size_t obs_dim, std::size_t act_dim, std::size_t hidden, std::size_t layers,
                        std::mt19937_64& rng, const std::string& name = "actor")
        : net_(layer_widths(obs_dim, hidden, layers, act_dim), rng, name) {}

    [[nodiscard]] std::size_t obs_dim() const { return net_.input_dim(); }
    [[nodiscard]] std::size_t act_dim() const { return net_.output_dim(); }
    Mlp<T>& net() { return net_; }
    [[nodiscard]] const Mlp<T>& net() const { return net_; }

    Var<T> forward(Tape<T>& tape, Var<T> obs, bool trainable = true) {
        return tanh(net_.forward(tape, obs, trainable));
    }

    [[nodiscard]] Matrix<T> act(const Matrix<T>& obs) const {
        const Matrix<T> out = net_.predict(obs);
        if (!out.allFinite()) throw std::runtime_error("policy network produced a non-finite output");
        return out.array().tanh().matrix();
    }

    /// Action plus clipped Gaussian exploration noise.
    [[nodiscard]] Matrix<T> act_noisy(const Matrix<T>& obs, double noise, std::mt19937_64& rng) const {
        Matrix<T> a = act(obs);
        if (noise > 0.0) a += standard_normal<T>(a.rows(), a.cols(), rng) * static_cast<T>(noise);
        return a.cwiseMax(T(-1)).cwiseMin(T(1));
    }

  private:
    Mlp<T> net_;
};

}  // namespace vvc::neural
