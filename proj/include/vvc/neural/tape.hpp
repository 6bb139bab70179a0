#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vvc::neural {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

class GradientError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A named trainable tensor with its accumulated gradient.
template <class T>
struct Parameter {
    std::string name;
    Matrix<T> value;
    Matrix<T> grad;

    void zero_grad() {
        if (grad.rows() == value.rows() && grad.cols() == value.cols()) {
            grad.setZero();
        } else {
            grad = Matrix<T>::Zero(value.rows(), value.cols());
        }
    }
};

template <class T>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
template <class T>
class Var {
  public:
    Var() = default;
    Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

    [[nodiscard]] const Matrix<T>& value() const { return tape_->value(id_); }
    [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
    [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
    [[nodiscard]] std::size_t id() const { return id_; }
    [[nodiscard]] Tape<T>& tape() const { return *tape_; }
    [[nodiscard]] T scalar() const { return value()(0, 0); }

  private:
    Tape<T>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode recorder. Every op appends a node holding its value and a closure that
/// pushes the node's gradient onto its inputs. backward() walks the nodes in reverse.
template <class T>
class Tape {
  public:
    using Backward = std::function<void(Tape&, const Matrix<T>&)>;

    Var<T> constant(Matrix<T> value) { return push(std::move(value), false, nullptr, {}); }

    /// Constant leaf that refers to storage outliving the tape instead of copying it.
    Var<T> constant_view(const Matrix<T>& value) {
        nodes_.push_back(Node{Matrix<T>(), Matrix<T>(), false, nullptr, Backward{}, &value});
        return Var<T>(this, nodes_.size() - 1);
    }

    /// Records a parameter leaf; backward() adds its gradient into parameter.grad.
    Var<T> parameter(Parameter<T>& p) {
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
        nodes_.push_back(Node{Matrix<T>(), Matrix<T>(), true, &p, Backward{}, &p.value});
        return Var<T>(this, nodes_.size() - 1);
    }

    Var<T> record(Matrix<T> value, std::initializer_list<Var<T>> inputs, Backward backward) {
        bool needs = false;
        for (const auto& in : inputs) needs = needs || nodes_[in.id()].needs_grad;
        return push(std::move(value), needs, nullptr, needs ? std::move(backward) : Backward{});
    }

    [[nodiscard]] const Matrix<T>& value(std::size_t id) const {
        const auto& node = nodes_[id];
        return node.view != nullptr ? *node.view : node.value;
    }
    [[nodiscard]] bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    /// Gradient buffer of a node; only valid during backward().
    Matrix<T>& grad(std::size_t id) {
        auto& node = nodes_[id];
        if (node.grad.size() == 0) {
            const auto& v = value(id);
            node.grad = Matrix<T>::Zero(v.rows(), v.cols());
        }
        return node.grad;
    }

    /// Gradient of a recorded node after backward() (zero if it received none).
    [[nodiscard]] Matrix<T> gradient(Var<T> v) const {
        const auto& node = nodes_[v.id()];
        if (node.grad.size() == 0) return Matrix<T>::Zero(value(v.id()).rows(), value(v.id()).cols());
        return node.grad;
    }

    /// Propagates d(loss)/d(node) for a 1x1 loss and accumulates into parameters.
    void backward(Var<T> loss) {
        if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward needs a scalar loss");
        grad(loss.id()) = Matrix<T>::Constant(1, 1, T(1));
        for (std::size_t k = loss.id() + 1; k-- > 0;) {
            auto& node = nodes_[k];
            if (!node.needs_grad || node.grad.size() == 0) continue;
            if (node.param != nullptr) {
                // A finite sum implies finite entries; overflow of the sum is flagged as well.
                if (!std::isfinite(static_cast<double>(node.grad.sum()))) {
                    throw GradientError("non-finite gradient for parameter '" + node.param->name + "'");
                }
                node.param->grad += node.grad;
            } else if (node.backward) {
                // Closures only touch earlier nodes, so the buffer stays put while they run.
                node.backward(*this, node.grad);
            }
        }
    }

  private:
    struct Node {
        Matrix<T> value;
        Matrix<T> grad;
        bool needs_grad = false;
        Parameter<T>* param = nullptr;
        Backward backward;
        const Matrix<T>* view = nullptr;
    };

    Var<T> push(Matrix<T> value, bool needs_grad, Parameter<T>* param, Backward backward) {
        nodes_.push_back(Node{std::move(value), Matrix<T>(), needs_grad, param, std::move(backward), nullptr});
        return Var<T>(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------------------
// Ops. Shapes follow row-major batch convention: a batch of B vectors is a B x n matrix.

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
    auto& t = a.tape();
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
    Matrix<T> out = a.value() * b.value();
    const auto ia = a.id();
    const auto ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<T>& tp, const Matrix<T>& g) {
        if (tp.needs_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
        if (tp.needs_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
    });
}

/// x (B x n) plus a 1 x n row broadcast over the batch.
template <class T>
Var<T> add_row(Var<T> x, Var<T> row) {
    auto& t = x.tape();
    if (row.rows() != 1 || row.cols() != x.cols()) throw std::invalid_argument("add_row shape mismatch");
    Matrix<T> out = x.value().rowwise() + row.value().row(0);
    const auto ix = x.id();
    const auto ir = row.id();
    return t.record(std::move(out), {x, row}, [ix, ir](Tape<T>& tp, const Matrix<T>& g) {
        if (tp.needs_grad(ix)) tp.grad(ix) += g;
        if (tp.needs_grad(ir)) tp.grad(ir) += g.colwise().sum();
    });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
    auto& t = a.tape();
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add shape mismatch");
    Matrix<T> out = a.value() + b.value();
    const auto ia = a.id();
    const auto ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<T>& tp, const Matrix<T>& g) {
        if (tp.needs_grad(ia)) tp.grad(ia) += g;
        if (tp.needs_grad(ib)) tp.grad(ib) += g;
    });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
    auto& t = a.tape();
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("sub shape mismatch");
    Matrix<T> out = a.value() - b.value();
    const auto ia = a.id();
    const auto ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<T>& tp, const Matrix<T>& g) {
        if (tp.needs_grad(ia)) tp.grad(ia) += g;
        if (tp.needs_grad(ib)) tp.grad(ib) -= g;
    });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
    auto& t = a.tape();
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("mul shape mismatch");
    Matrix<T> out = a.value().cwiseProduct(b.value());
    const auto ia = a.id();
    const auto ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<T>& tp, const Matrix<T>& g) {
        if (tp.needs_grad(ia)) tp.grad(ia) += g.cwiseProduct(tp.value(ib));
        if (tp.needs_grad(ib)) tp.grad(ib) += g.cwiseProduct(tp.value(ia));
    });
}

template <class T>
Var<T> scale(Var<T> a, T factor) {
    auto& t = a.tape();
    Matrix<T> out = a.value() * factor;
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, factor](Tape<T>& tp, const Matrix<T>& g) { tp.grad(ia) += g * factor; });
}

template <class T>
Var<T> add_scalar(Var<T> a, T c) {
    auto& t = a.tape();
    Matrix<T> out = a.value().array() + c;
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape<T>& tp, const Matrix<T>& g) { tp.grad(ia) += g; });
}

template <class T>
Var<T> relu(Var<T> a) {
    auto& t = a.tape();
    Matrix<T> out = a.value().cwiseMax(T(0));
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape<T>& tp, const Matrix<T>& g) {
        tp.grad(ia) += (tp.value(ia).array() > T(0)).select(g, T(0));
    });
}

template <class T>
Var<T> tanh(Var<T> a) {
    auto& t = a.tape();
    Matrix<T> out = a.value().array().tanh().matrix();
    const auto ia = a.id();
    return t.record(out, {a}, [ia, out](Tape<T>& tp, const Matrix<T>& g) {
        tp.grad(ia) += g.cwiseProduct((T(1) - out.array().square()).matrix());
    });
}

template <class T>
Var<T> exp(Var<T> a) {
    auto& t = a.tape();
    Matrix<T> out = a.value().array().exp().matrix();
    const auto ia = a.id();
    return t.record(out, {a}, [ia, out](Tape<T>& tp, const Matrix<T>& g) { tp.grad(ia) += g.cwiseProduct(out); });
}

template <class T>
Var<T> square(Var<T> a) {
    auto& t = a.tape();
    Matrix<T> out = a.value().array().square().matrix();
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape<T>& tp, const Matrix<T>& g) {
        tp.grad(ia) += (g.array() * T(2) * tp.value(ia).array()).matrix();
    });
}

/// log(1 + exp(x)) without overflow.
template <class T>
Var<T> softplus(Var<T> a) {
    auto& t = a.tape();
    const auto& x = a.value();
    Matrix<T> out = (x.array().max(T(0)) + (-x.array().abs()).exp().log1p()).matrix();
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape<T>& tp, const Matrix<T>& g) {
        const auto& xv = tp.value(ia);
        const Matrix<T> sig = (T(1) / (T(1) + (-xv.array()).exp())).matrix();
        tp.grad(ia) += g.cwiseProduct(sig);
    });
}

/// Elementwise clamp; the gradient is passed only where the input lies inside [lo, hi].
template <class T>
Var<T> clamp(Var<T> a, T lo, T hi) {
    auto& t = a.tape();
    Matrix<T> out = a.value().cwiseMax(lo).cwiseMin(hi);
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, lo, hi](Tape<T>& tp, const Matrix<T>& g) {
        const auto& x = tp.value(ia);
        tp.grad(ia) += ((x.array() >= lo) && (x.array() <= hi)).select(g, T(0));
    });
}

template <class T>
Var<T> minimum(Var<T> a, Var<T> b) {
    auto& t = a.tape();
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("minimum shape mismatch");
    Matrix<T> out = a.value().cwiseMin(b.value());
    const auto ia = a.id();
    const auto ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape<T>& tp, const Matrix<T>& g) {
        const auto take_a = (tp.value(ia).array() <= tp.value(ib).array());
        if (tp.needs_grad(ia)) tp.grad(ia) += take_a.select(g, T(0));
        if (tp.needs_grad(ib)) tp.grad(ib) += take_a.select(T(0), g);
    });
}

/// Sum over all entries -> 1 x 1.
template <class T>
Var<T> sum(Var<T> a) {
    auto& t = a.tape();
    Matrix<T> out = Matrix<T>::Constant(1, 1, a.value().sum());
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape<T>& tp, const Matrix<T>& g) {
        tp.grad(ia).array() += g(0, 0);
    });
}

template <class T>
Var<T> mean(Var<T> a) {
    return scale(sum(a), T(1) / static_cast<T>(a.value().size()));
}

/// Row sums: B x n -> B x 1.
template <class T>
Var<T> sum_cols(Var<T> a) {
    auto& t = a.tape();
    Matrix<T> out = a.value().rowwise().sum();
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape<T>& tp, const Matrix<T>& g) {
        tp.grad(ia).colwise() += g.col(0);
    });
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols needs inputs");
    auto& t = parts.front().tape();
    const auto rows = parts.front().rows();
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw std::invalid_argument("concat_cols row mismatch");
        cols += p.cols();
    }
    Matrix<T> out(rows, cols);
    std::vector<std::pair<std::size_t, Eigen::Index>> spans;
    Eigen::Index offset = 0;
    bool needs = false;
    for (const auto& p : parts) {
        out.middleCols(offset, p.cols()) = p.value();
        spans.emplace_back(p.id(), offset);
        offset += p.cols();
        needs = needs || t.needs_grad(p.id());
    }
    auto backward = [spans](Tape<T>& tp, const Matrix<T>& g) {
        for (const auto& [id, off] : spans) {
            if (tp.needs_grad(id)) tp.grad(id) += g.middleCols(off, tp.value(id).cols());
        }
    };
    // record() only inspects its inputs for needs_grad, so one grad-carrying part suffices.
    if (!needs) return t.constant(std::move(out));
    Var<T> anchor = parts.front();
    for (const auto& p : parts) {
        if (t.needs_grad(p.id())) {
            anchor = p;
            break;
        }
    }
    return t.record(std::move(out), {anchor}, std::move(backward));
}

template <class T>
Var<T> slice_cols(Var<T> a, Eigen::Index start, Eigen::Index count) {
    auto& t = a.tape();
    if (start < 0 || start + count > a.cols()) throw std::invalid_argument("slice_cols out of range");
    Matrix<T> out = a.value().middleCols(start, count);
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, start, count](Tape<T>& tp, const Matrix<T>& g) {
        tp.grad(ia).middleCols(start, count) += g;
    });
}

template <class T>
Var<T> operator+(Var<T> a, Var<T> b) { return add(a, b); }
template <class T>
Var<T> operator-(Var<T> a, Var<T> b) { return sub(a, b); }
template <class T>
Var<T> operator*(Var<T> a, Var<T> b) { return mul(a, b); }

}  // namespace vvc::neural
