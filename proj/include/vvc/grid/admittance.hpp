#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "vvc/grid/network.hpp"

namespace vvc::grid {

struct Admittance {
    double g = 0.0;
    double b = 0.0;
};

/// Bus admittance matrix (G + jB) plus a branch lookup. Built once per network and
/// shared by every power-flow call on that network.
class AdmittanceStructure {
  public:
    AdmittanceStructure() = default;

    explicit AdmittanceStructure(const NetworkModel& net) {
        validate(net);
        const auto n = static_cast<Eigen::Index>(net.bus_count());
        g_bus_ = Eigen::MatrixXd::Zero(n, n);
        b_bus_ = Eigen::MatrixXd::Zero(n, n);
        neighbours_.assign(net.bus_count(), {});
        for (std::size_t k = 0; k < net.branches.size(); ++k) {
            const auto& br = net.branches[k];
            const auto i = static_cast<Eigen::Index>(br.from);
            const auto j = static_cast<Eigen::Index>(br.to);
            g_bus_(i, i) += br.g;
            b_bus_(i, i) += br.b;
            g_bus_(j, j) += br.g;
            b_bus_(j, j) += br.b;
            g_bus_(i, j) -= br.g;
            b_bus_(i, j) -= br.b;
            g_bus_(j, i) -= br.g;
            b_bus_(j, i) -= br.b;
            lookup_.emplace(std::minmax(br.from, br.to), k);
            neighbours_[static_cast<std::size_t>(br.from)].push_back(br.to);
            neighbours_[static_cast<std::size_t>(br.to)].push_back(br.from);
        }
        for (const auto& bus : net.buses) {
            const auto i = static_cast<Eigen::Index>(bus.id);
            g_bus_(i, i) += bus.g_shunt;
            b_bus_(i, i) += bus.b_shunt;
        }
        branches_ = net.branches;
    }

    /// Series admittance of the branch joining i and j, in either orientation.
    [[nodiscard]] std::optional<Admittance> branch(int i, int j) const {
        const auto it = lookup_.find(std::minmax(i, j));
        if (it == lookup_.end()) return std::nullopt;
        const auto& br = branches_[it->second];
        return Admittance{br.g, br.b};
    }

    [[nodiscard]] std::optional<std::size_t> branch_index(int i, int j) const {
        const auto it = lookup_.find(std::minmax(i, j));
        if (it == lookup_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] std::size_t branch_count() const { return branches_.size(); }
    [[nodiscard]] std::size_t bus_count() const { return neighbours_.size(); }
    [[nodiscard]] const Eigen::MatrixXd& g_bus() const { return g_bus_; }
    [[nodiscard]] const Eigen::MatrixXd& b_bus() const { return b_bus_; }
    [[nodiscard]] const std::vector<int>& neighbours(int bus) const {
        return neighbours_[static_cast<std::size_t>(bus)];
    }

  private:
    Eigen::MatrixXd g_bus_;
    Eigen::MatrixXd b_bus_;
    std::map<std::pair<int, int>, std::size_t> lookup_;
    std::vector<std::vector<int>> neighbours_;
    std::vector<Branch> branches_;
};

inline AdmittanceStructure build_admittance(const NetworkModel& net) { return AdmittanceStructure(net); }

}  // namespace vvc::grid
