#pragma once

#include <cstdint>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/macsac/learner.hpp"
#include "vvc/macsac/replay.hpp"

namespace vvc::oldc {

/// Lower value wins a tie at the same simulated time.
enum class EventKind : int { control = 0, policy_arrival = 1, sample_arrival = 2, upload = 3, train = 4 };

inline const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::control: return "control";
        case EventKind::policy_arrival: return "policy_arrival";
        case EventKind::sample_arrival: return "sample_arrival";
        case EventKind::upload: return "upload";
        case EventKind::train: return "train";
    }
    return "unknown";
}

struct Event {
    std::int64_t time = 0;
    EventKind kind = EventKind::control;
    std::uint64_t seq = 0;
    std::size_t agent = 0;                              // policy_arrival
    std::size_t step = 0;                               // sample_arrival: originating control step
    std::shared_ptr<const macsac::LocalPolicy> policy;  // policy_arrival
    std::shared_ptr<const macsac::Transition> sample;   // sample_arrival
};

/// Time-ordered queue; ties go to the kind priority, then to insertion order.
class EventQueue {
  public:
    void push(Event e) {
        if (e.time < now_) throw std::logic_error("event scheduled in the past");
        e.seq = next_seq_++;
        heap_.push(std::move(e));
    }

    Event pop() {
        if (heap_.empty()) throw std::logic_error("pop from an empty event queue");
        Event e = heap_.top();
        heap_.pop();
        now_ = e.time;
        return e;
    }

    [[nodiscard]] bool empty() const { return heap_.empty(); }
    [[nodiscard]] std::size_t size() const { return heap_.size(); }
    [[nodiscard]] const Event& top() const { return heap_.top(); }
    [[nodiscard]] std::int64_t now() const { return now_; }

  private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_seq_ = 0;
    std::int64_t now_ = 0;
};

}  // namespace vvc::oldc
