#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/neural/tape.hpp"

namespace vvc::neural {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over a fixed list of parameters.
template <class T>
class Adam {
  public:
    Adam() = default;
    Adam(const std::vector<Parameter<T>>& params, AdamOptions opts = {}) : opts_(opts) {
        for (const auto& p : params) {
            m_.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
            v_.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
        }
    }

    [[nodiscard]] std::uint64_t steps() const { return step_; }
    [[nodiscard]] const AdamOptions& options() const { return opts_; }
    [[nodiscard]] const std::vector<Matrix<T>>& first_moments() const { return m_; }
    [[nodiscard]] const std::vector<Matrix<T>>& second_moments() const { return v_; }

    /// Applies one update from each parameter's grad field.
    void step(std::vector<Parameter<T>>& params) {
        if (params.size() != m_.size()) throw std::invalid_argument("Adam: parameter count changed");
        for (std::size_t k = 0; k < params.size(); ++k) {
            const auto& p = params[k];
            if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() || p.value.rows() != m_[k].rows() ||
                p.value.cols() != m_[k].cols()) {
                throw std::invalid_argument("Adam: shape mismatch for '" + p.name + "'");
            }
        }
        ++step_;
        const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
        const T b1 = static_cast<T>(opts_.beta1);
        const T b2 = static_cast<T>(opts_.beta2);
        const T lr = static_cast<T>(opts_.lr / c1);
        const T inv_c2 = static_cast<T>(1.0 / c2);
        const T eps = static_cast<T>(opts_.eps);
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& p = params[k];
            m_[k] = b1 * m_[k] + (T(1) - b1) * p.grad;
            v_[k] = b2 * v_[k] + (T(1) - b2) * p.grad.cwiseProduct(p.grad);
            p.value.array() -= lr * m_[k].array() / ((v_[k].array() * inv_c2).sqrt() + eps);
        }
    }

  private:
    AdamOptions opts_;
    std::vector<Matrix<T>> m_;
    std::vector<Matrix<T>> v_;
    std::uint64_t step_ = 0;
};

/// target <- eta * target + (1 - eta) * online, parameter by parameter.
template <class T>
void polyak_update(std::vector<Parameter<T>>& target, const std::vector<Parameter<T>>& online, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("polyak coefficient must lie in [0, 1]");
    if (target.size() != online.size()) throw std::invalid_argument("polyak: parameter count mismatch");
    for (std::size_t k = 0; k < target.size(); ++k) {
        if (target[k].value.rows() != online[k].value.rows() || target[k].value.cols() != online[k].value.cols()) {
            throw std::invalid_argument("polyak: shape mismatch for '" + target[k].name + "'");
        }
    }
    const T e = static_cast<T>(eta);
    for (std::size_t k = 0; k < target.size(); ++k) {
        target[k].value = e * target[k].value + (T(1) - e) * online[k].value;
    }
}

}  // namespace vvc::neural
