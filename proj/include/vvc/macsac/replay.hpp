#pragma once

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/neural/tape.hpp"

namespace vvc::macsac {

/// One joint experience {x, a, r, r_c, x'}. x and a are the agents' vectors concatenated in
/// agent order; r and r_c hold one entry per agent.
struct Transition {
    std::vector<double> x;
    std::vector<double> a;
    std::vector<double> r;
    std::vector<double> r_c;
    std::vector<double> x_next;
    bool done = false;
};

/// Column layout of the concatenated vectors.
struct JointLayout {
    std::vector<std::size_t> obs_dims;
    std::vector<std::size_t> act_dims;

    [[nodiscard]] std::size_t agents() const { return obs_dims.size(); }
    [[nodiscard]] std::size_t obs_total() const { return std::accumulate(obs_dims.begin(), obs_dims.end(), std::size_t{0}); }
    [[nodiscard]] std::size_t act_total() const { return std::accumulate(act_dims.begin(), act_dims.end(), std::size_t{0}); }
    [[nodiscard]] std::size_t obs_offset(std::size_t i) const {
        return std::accumulate(obs_dims.begin(), obs_dims.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
    }
    [[nodiscard]] std::size_t act_offset(std::size_t i) const {
        return std::accumulate(act_dims.begin(), act_dims.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
    }
};

template <class T>
struct Batch {
    neural::Matrix<T> x;       // B x sum(obs)
    neural::Matrix<T> a;       // B x sum(act)
    neural::Matrix<T> r;       // B x N
    neural::Matrix<T> r_c;     // B x N
    neural::Matrix<T> x_next;  // B x sum(obs)
    neural::Matrix<T> done;    // B x 1, 1 for terminal

    [[nodiscard]] Eigen::Index size() const { return x.rows(); }
};

/// Fixed-capacity ring of transitions. Sampling is uniform with replacement and consumes
/// only the generator passed in.
class ReplayBuffer {
  public:
    ReplayBuffer(JointLayout layout, std::size_t capacity) : layout_(std::move(layout)), capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
    }

    [[nodiscard]] std::size_t size() const { return items_.size(); }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }
    [[nodiscard]] std::uint64_t total_added() const { return added_; }
    [[nodiscard]] const JointLayout& layout() const { return layout_; }
    [[nodiscard]] const Transition& at(std::size_t k) const { return items_.at(k); }

    void add(Transition t) {
        check(t);
        if (items_.size() < capacity_) {
            items_.push_back(std::move(t));
        } else {
            items_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
        ++added_;
    }

    /// Reorders the stored transitions (used to test order independence).
    template <class Urbg>
    void shuffle(Urbg& rng) {
        std::shuffle(items_.begin(), items_.end(), rng);
    }

    [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const {
        if (items_.empty()) throw std::logic_error("cannot sample an empty replay buffer");
        std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
        std::vector<std::size_t> idx(batch);
        for (auto& k : idx) k = pick(rng);
        return idx;
    }

    template <class T>
    [[nodiscard]] Batch<T> gather(const std::vector<std::size_t>& idx) const {
        const auto b = static_cast<Eigen::Index>(idx.size());
        const auto n = static_cast<Eigen::Index>(layout_.agents());
        Batch<T> out;
        out.x.resize(b, static_cast<Eigen::Index>(layout_.obs_total()));
        out.x_next.resize(b, out.x.cols());
        out.a.resize(b, static_cast<Eigen::Index>(layout_.act_total()));
        out.r.resize(b, n);
        out.r_c.resize(b, n);
        out.done.resize(b, 1);
        for (Eigen::Index row = 0; row < b; ++row) {
            const auto& t = items_[idx[static_cast<std::size_t>(row)]];
            for (Eigen::Index c = 0; c < out.x.cols(); ++c) {
                out.x(row, c) = static_cast<T>(t.x[static_cast<std::size_t>(c)]);
                out.x_next(row, c) = static_cast<T>(t.x_next[static_cast<std::size_t>(c)]);
            }
            for (Eigen::Index c = 0; c < out.a.cols(); ++c) out.a(row, c) = static_cast<T>(t.a[static_cast<std::size_t>(c)]);
            for (Eigen::Index c = 0; c < n; ++c) {
                out.r(row, c) = static_cast<T>(t.r[static_cast<std::size_t>(c)]);
                out.r_c(row, c) = static_cast<T>(t.r_c[static_cast<std::size_t>(c)]);
            }
            out.done(row, 0) = t.done ? T(1) : T(0);
        }
        return out;
    }

    template <class T>
    [[nodiscard]] Batch<T> sample(std::size_t batch, std::mt19937_64& rng) const {
        return gather<T>(sample_indices(batch, rng));
    }

  private:
    void check(const Transition& t) const {
        const auto n = layout_.agents();
        if (t.x.size() != layout_.obs_total() || t.x_next.size() != layout_.obs_total() ||
            t.a.size() != layout_.act_total() || t.r.size() != n || t.r_c.size() != n) {
            throw std::invalid_argument("transition does not match the replay layout");
        }
        for (double c : t.r_c) {
            if (!(c >= 0.0)) throw std::invalid_argument("transition cost must be nonnegative");
        }
    }

    JointLayout layout_;
    std::size_t capacity_;
    std::vector<Transition> items_;
    std::size_t next_ = 0;
    std::uint64_t added_ = 0;
};

}  // namespace vvc::macsac
