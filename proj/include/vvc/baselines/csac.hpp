#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "vvc/env/task.hpp"
#include "vvc/macsac/macsac.hpp"

namespace vvc::baselines {

/// Centralized constrained SAC: one agent that observes and acts for the whole network.
/// It runs the MACSAC code path with N = 1; only the name differs.
template <class T>
class Csac : public macsac::Macsac<T> {
  public:
    Csac(macsac::JointLayout layout, macsac::MacsacConfig config)
        : macsac::Macsac<T>(checked(std::move(layout)), std::move(config)) {}

    [[nodiscard]] std::string name() const override { return "csac"; }

  private:
    static macsac::JointLayout checked(macsac::JointLayout l) {
        if (l.agents() != 1) throw std::invalid_argument("csac needs a single-agent layout");
        return l;
    }
};

/// Wraps a multi-agent task as the single centralized agent CSAC controls.
inline std::shared_ptr<env::Task> centralized_task(std::shared_ptr<env::Task> inner, double beta = 1.0) {
    return std::make_shared<env::CentralizedView>(std::move(inner), beta);
}

}  // namespace vvc::baselines
