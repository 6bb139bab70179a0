#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/neural/tape.hpp"

namespace vvc::neural {

/// Fully connected network with ReLU on hidden layers and a linear output layer.
/// Weights are stored input-major (fan_in x fan_out) so a batch row-vector times W works.
template <class T>
class Mlp {
  public:
    Mlp() = default;

    /// widths = {input, hidden..., output}. Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Mlp(std::vector<std::size_t> widths, std::mt19937_64& rng, const std::string& name = "mlp")
        : widths_(std::move(widths)) {
        if (widths_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
        for (auto w : widths_) {
            if (w == 0) throw std::invalid_argument("Mlp layer width must be positive");
        }
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            const auto fan_in = static_cast<Eigen::Index>(widths_[l]);
            const auto fan_out = static_cast<Eigen::Index>(widths_[l + 1]);
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            std::uniform_real_distribution<double> u(-bound, bound);
            Parameter<T> w{name + ".w" + std::to_string(l), Matrix<T>(fan_in, fan_out), {}};
            Parameter<T> b{name + ".b" + std::to_string(l), Matrix<T>(1, fan_out), {}};
            for (Eigen::Index c = 0; c < fan_out; ++c) {
                for (Eigen::Index r = 0; r < fan_in; ++r) w.value(r, c) = static_cast<T>(u(rng));
            }
            for (Eigen::Index c = 0; c < fan_out; ++c) b.value(0, c) = static_cast<T>(u(rng));
            w.zero_grad();
            b.zero_grad();
            params_.push_back(std::move(w));
            params_.push_back(std::move(b));
        }
    }

    [[nodiscard]] std::size_t input_dim() const { return widths_.front(); }
    [[nodiscard]] std::size_t output_dim() const { return widths_.back(); }
    [[nodiscard]] const std::vector<std::size_t>& widths() const { return widths_; }
    [[nodiscard]] std::size_t layer_count() const { return widths_.size() - 1; }

    [[nodiscard]] std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
        return n;
    }

    std::vector<Parameter<T>>& parameters() { return params_; }
    [[nodiscard]] const std::vector<Parameter<T>>& parameters() const { return params_; }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    /// Recorded forward pass. With trainable = false the weights enter the tape as constants,
    /// so gradients still flow to the input but nothing accumulates into this network.
    Var<T> forward(Tape<T>& tape, Var<T> x, bool trainable = true) {
        check_input(x.cols());
        Var<T> h = x;
        for (std::size_t l = 0; l < layer_count(); ++l) {
            auto& w = params_[2 * l];
            auto& b = params_[2 * l + 1];
            const Var<T> wv = trainable ? tape.parameter(w) : tape.constant_view(w.value);
            const Var<T> bv = trainable ? tape.parameter(b) : tape.constant_view(b.value);
            h = add_row(matmul(h, wv), bv);
            if (l + 1 < layer_count()) h = relu(h);
        }
        return h;
    }

    /// Plain forward pass without recording.
    [[nodiscard]] Matrix<T> predict(const Matrix<T>& x) const {
        check_input(x.cols());
        Matrix<T> h = x;
        for (std::size_t l = 0; l < layer_count(); ++l) {
            Matrix<T> next = h * params_[2 * l].value;
            next.rowwise() += params_[2 * l + 1].value.row(0);
            if (l + 1 < layer_count()) next = next.cwiseMax(T(0));
            h = std::move(next);
        }
        return h;
    }

  private:
    void check_input(Eigen::Index cols) const {
        if (static_cast<std::size_t>(cols) != input_dim()) {
            throw std::invalid_argument("Mlp input has " + std::to_string(cols) + " columns, expected " +
                                        std::to_string(input_dim()));
        }
    }

    std::vector<std::size_t> widths_;
    std::vector<Parameter<T>> params_;
};

/// Convenience: {in, hidden x layers, out}.
inline std::vector<std::size_t> layer_widths(std::size_t in, std::size_t hidden, std::size_t layers, std::size_t out) {
    std::vector<std::size_t> w{in};
    for (std::size_t l = 0; l < layers; ++l) w.push_back(hidden);
    w.push_back(out);
    return w;
}

}  // namespace vvc::neural
