#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vvc::oldc {

/// Timing of the three asynchronous loops, in integer simulated time units.
///   control: every agent acts every dt
///   upload:  every t_s the last m transitions of the window are sent to the server
///   train:   every t_u the server runs one update and ships fresh policies
/// Periodic events fire at the last control tick of their period, after that tick's control.
struct OldcSchedule {
    std::int64_t dt = 1;
    std::int64_t t_s = 1;
    std::int64_t t_u = 1;
    std::size_t m = 1;
    std::int64_t comm_delay = 0;  // applied to sample uploads and policy shipments
    double drop_prob = 0.0;       // each uploaded sample is lost independently

    [[nodiscard]] std::size_t window_steps() const { return static_cast<std::size_t>(t_s / dt); }
    bool operator==(const OldcSchedule&) const = default;
};

class ScheduleError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline void validate(const OldcSchedule& s) {
    if (s.dt <= 0) throw ScheduleError("schedule.dt must be positive");
    if (s.t_s < s.dt) throw ScheduleError("schedule.t_s must be at least dt");
    if (s.t_u < s.dt) throw ScheduleError("schedule.t_u must be at least dt");
    if (s.t_s % s.dt != 0) throw ScheduleError("schedule.t_s must be a multiple of dt");
    if (s.t_u % s.dt != 0) throw ScheduleError("schedule.t_u must be a multiple of dt");
    if (s.m > s.window_steps()) {
        throw ScheduleError("schedule.m = " + std::to_string(s.m) + " exceeds the " + std::to_string(s.window_steps()) +
                            " steps of an upload window");
    }
    if (s.comm_delay < 0) throw ScheduleError("schedule.comm_delay must be nonnegative");
    if (!(s.drop_prob >= 0.0 && s.drop_prob <= 1.0)) throw ScheduleError("schedule.drop_prob must lie in [0, 1]");
}

enum class Exploration { deterministic, stochastic };

/// Only the last m control steps of every upload window explore; the rest act on the mode.
inline Exploration select_exploration(std::size_t step, const OldcSchedule& s) {
    const auto w = s.window_steps();
    if (w == 0) throw ScheduleError("schedule.t_s must be at least dt");
    return step % w >= w - s.m ? Exploration::stochastic : Exploration::deterministic;
}

}  // namespace vvc::oldc
