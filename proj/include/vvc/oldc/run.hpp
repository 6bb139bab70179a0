#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/env/task.hpp"
#include "vvc/macsac/learner.hpp"
#include "vvc/oldc/events.hpp"
#include "vvc/oldc/schedule.hpp"
#include "vvc/util/hash.hpp"

namespace vvc::oldc {

/// One processed event. Fields not meaningful for a kind keep their defaults and are omitted
/// from the JSON line.
struct LogEntry {
    std::int64_t time = 0;
    EventKind kind = EventKind::control;
    std::int64_t agent = -1;
    std::uint64_t version = 0;          // policy version held (control) or carried (arrival)
    std::uint64_t learner_version = 0;  // learner update count at this instant
    std::uint64_t digest = 0;           // payload digest
    std::int64_t step = -1;             // control step index
    bool stochastic = false;
    std::uint32_t sent = 0;             // upload: samples sent
    std::uint32_t dropped = 0;          // upload: samples lost
    bool trained = false;               // train: whether an update ran
    bool failed = false;                // control: the joint step failed
};

inline nlohmann::json to_json(const LogEntry& e) {
    nlohmann::json j{{"t", e.time}, {"kind", kind_name(e.kind)}};
    switch (e.kind) {
        case EventKind::control:
            j["agent"] = e.agent;
            j["step"] = e.step;
            j["version"] = e.version;
            j["learner_version"] = e.learner_version;
            j["stochastic"] = e.stochastic;
            j["digest"] = e.digest;
            if (e.failed) j["failed"] = true;
            break;
        case EventKind::policy_arrival:
            j["agent"] = e.agent;
            j["version"] = e.version;
            j["digest"] = e.digest;
            break;
        case EventKind::sample_arrival:
            j["step"] = e.step;
            j["digest"] = e.digest;
            break;
        case EventKind::upload:
            j["sent"] = e.sent;
            j["dropped"] = e.dropped;
            break;
        case EventKind::train:
            j["trained"] = e.trained;
            j["learner_version"] = e.learner_version;
            break;
    }
    return j;
}

/// Outcome of one joint control step.
struct StepRecord {
    std::size_t episode = 0;
    std::size_t t = 0;        // step within the episode
    std::size_t step = 0;     // global control step
    std::int64_t time = 0;
    double loss_mw = 0.0;
    double vvr = 0.0;         // system-wide cost of the step
    double reward = 0.0;      // shared reward of the first agent
    bool stochastic = false;
    bool failed = false;
    std::uint64_t min_version = 0;
    std::uint64_t max_version = 0;
};

struct RunLog {
    OldcSchedule schedule;
    std::vector<LogEntry> events;
    std::vector<StepRecord> steps;
    std::size_t samples_generated = 0;
    std::size_t samples_uploaded = 0;
    std::size_t samples_dropped = 0;
    std::size_t samples_stored = 0;
    std::size_t train_ticks = 0;
    std::size_t updates = 0;
    std::size_t failures = 0;
};

inline void write_event_log(const RunLog& log, std::ostream& out) {
    for (const auto& e : log.events) out << to_json(e).dump() << '\n';
}

inline std::uint64_t event_log_digest(const RunLog& log) {
    std::ostringstream s;
    write_event_log(log, s);
    return util::fnv1a(s.str());
}

struct RunOptions {
    std::size_t episodes = 1;
    std::uint64_t seed = 0;
    std::function<void(const StepRecord&)> on_step;  // optional progress hook
    std::function<void(std::int64_t, const macsac::TrainMetrics&)> on_train;  // optional, every train tick
};

namespace detail {

inline std::uint64_t digest_values(const std::vector<double>& v, std::uint64_t h = util::kFnvOffset) {
    return util::fnv1a(v.data(), v.size() * sizeof(double), h);
}

inline std::uint64_t digest_transition(const macsac::Transition& t) {
    std::uint64_t h = digest_values(t.x);
    h = digest_values(t.a, h);
    h = digest_values(t.r, h);
    h = digest_values(t.r_c, h);
    h = digest_values(t.x_next, h);
    const unsigned char done = t.done ? 1 : 0;
    return util::fnv1a(&done, 1, h);
}

inline void check_dimensions(const env::Task& task, const macsac::Learner& learner) {
    const auto& l = learner.layout();
    if (l.agents() != task.agent_count()) {
        throw std::invalid_argument("learner has " + std::to_string(l.agents()) + " agents, task has " +
                                    std::to_string(task.agent_count()));
    }
    for (std::size_t i = 0; i < l.agents(); ++i) {
        if (l.obs_dims[i] != task.obs_dim(i) || l.act_dims[i] != task.act_dim(i)) {
            throw std::invalid_argument("agent " + std::to_string(i) + " dimensions differ between learner and task");
        }
    }
}

}  // namespace detail

/// Simulates the online timeline: decentralized control every dt on possibly stale local
/// snapshots, windowed uploads of the exploring steps, and periodic centralized training.
/// Training never delays control: control ticks fire at exact multiples of dt.
inline RunLog run(const OldcSchedule& schedule, env::Task& task, macsac::Learner& learner, const RunOptions& opts) {
    validate(schedule);
    detail::check_dimensions(task, learner);
    if (task.horizon() == 0) throw std::invalid_argument("task horizon must be positive");

    RunLog log;
    log.schedule = schedule;
    const auto n = task.agent_count();
    const std::size_t horizon = task.horizon();
    std::mt19937_64 act_rng(opts.seed);
    std::mt19937_64 drop_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    std::bernoulli_distribution drop(schedule.drop_prob);

    std::vector<std::shared_ptr<const macsac::LocalPolicy>> local(n);
    for (std::size_t i = 0; i < n; ++i) {
        local[i] = learner.ship_policy(i);
        log.events.push_back(LogEntry{0, EventKind::policy_arrival, static_cast<std::int64_t>(i), local[i]->version(),
                                      learner.updates(), local[i]->digest()});
    }

    struct Pending {
        std::size_t step;
        macsac::Transition transition;
    };
    std::vector<Pending> window;  // exploring transitions awaiting the next upload

    EventQueue q;
    const auto last_of_period = [&](std::int64_t period) { return period - schedule.dt; };
    if (opts.episodes > 0) {
        q.push(Event{0, EventKind::control});
        q.push(Event{last_of_period(schedule.t_s), EventKind::upload});
        q.push(Event{last_of_period(schedule.t_u), EventKind::train});
    }

    std::size_t episode = 0;
    std::size_t t_in_episode = 0;
    std::size_t step = 0;
    std::vector<std::vector<double>> obs;
    bool controls_done = opts.episodes == 0;
    std::int64_t last_control_time = 0;

    while (!q.empty()) {
        if (controls_done && q.top().time > last_control_time) break;
        Event ev = q.pop();
        switch (ev.kind) {
            case EventKind::control: {
                if (t_in_episode == 0) obs = task.reset(episode);
                const bool stochastic = select_exploration(step, schedule) == Exploration::stochastic;
                std::vector<std::vector<double>> actions(n);
                StepRecord rec;
                rec.episode = episode;
                rec.t = t_in_episode;
                rec.step = step;
                rec.time = ev.time;
                rec.stochastic = stochastic;
                rec.min_version = std::numeric_limits<std::uint64_t>::max();
                for (std::size_t i = 0; i < n; ++i) {
                    // Each controller sees only its own observation and its own snapshot.
                    actions[i] = local[i]->act(obs[i], stochastic, act_rng);
                    rec.min_version = std::min(rec.min_version, local[i]->version());
                    rec.max_version = std::max(rec.max_version, local[i]->version());
                }
                auto result = task.step(actions);
                for (std::size_t i = 0; i < n; ++i) {
                    LogEntry e{ev.time, EventKind::control, static_cast<std::int64_t>(i), local[i]->version(),
                               learner.updates(), detail::digest_values(actions[i])};
                    e.step = static_cast<std::int64_t>(step);
                    e.stochastic = stochastic;
                    e.failed = result.failed;
                    log.events.push_back(e);
                }
                bool episode_over = false;
                if (result.failed) {
                    rec.failed = true;
                    rec.loss_mw = std::numeric_limits<double>::quiet_NaN();
                    rec.vvr = std::numeric_limits<double>::quiet_NaN();
                    rec.reward = std::numeric_limits<double>::quiet_NaN();
                    ++log.failures;
                    episode_over = true;
                } else {
                    rec.loss_mw = result.loss_mw;
                    rec.vvr = result.system_cost;
                    rec.reward = result.rewards.front();
                    ++log.samples_generated;
                    if (stochastic) {
                        macsac::Transition tr;
                        for (const auto& o : obs) tr.x.insert(tr.x.end(), o.begin(), o.end());
                        for (const auto& a : actions) tr.a.insert(tr.a.end(), a.begin(), a.end());
                        for (const auto& o : result.next_obs) tr.x_next.insert(tr.x_next.end(), o.begin(), o.end());
                        tr.r = result.rewards;
                        tr.r_c = result.costs;
                        window.push_back(Pending{step, std::move(tr)});
                    }
                    obs = std::move(result.next_obs);
                    episode_over = t_in_episode + 1 == horizon;
                }
                log.steps.push_back(rec);
                if (opts.on_step) opts.on_step(rec);
                last_control_time = ev.time;
                ++step;
                if (episode_over) {
                    ++episode;
                    t_in_episode = 0;
                } else {
                    ++t_in_episode;
                }
                if (episode < opts.episodes) {
                    q.push(Event{ev.time + schedule.dt, EventKind::control});
                } else {
                    controls_done = true;
                }
                break;
            }
            case EventKind::upload: {
                LogEntry e{ev.time, EventKind::upload};
                for (auto& p : window) {
                    if (schedule.drop_prob > 0.0 && drop(drop_rng)) {
                        ++e.dropped;
                        continue;
                    }
                    ++e.sent;
                    Event arrival{ev.time + schedule.comm_delay, EventKind::sample_arrival};
                    arrival.step = p.step;
                    arrival.sample = std::make_shared<const macsac::Transition>(std::move(p.transition));
                    q.push(std::move(arrival));
                }
                log.samples_uploaded += e.sent;
                log.samples_dropped += e.dropped;
                window.clear();
                log.events.push_back(e);
                q.push(Event{ev.time + schedule.t_s, EventKind::upload});
                break;
            }
            case EventKind::sample_arrival: {
                LogEntry e{ev.time, EventKind::sample_arrival};
                e.step = static_cast<std::int64_t>(ev.step);
                e.digest = detail::digest_transition(*ev.sample);
                learner.store(*ev.sample);
                ++log.samples_stored;
                log.events.push_back(e);
                break;
            }
            case EventKind::train: {
                const auto m = learner.train_step();
                ++log.train_ticks;
                if (opts.on_train) opts.on_train(ev.time, m);
                LogEntry e{ev.time, EventKind::train};
                e.trained = m.trained;
                e.learner_version = learner.updates();
                log.events.push_back(e);
                if (m.trained) {
                    ++log.updates;
                    for (std::size_t i = 0; i < n; ++i) {
                        Event ship{ev.time + schedule.comm_delay, EventKind::policy_arrival};
                        ship.agent = i;
                        ship.policy = learner.ship_policy(i);
                        q.push(std::move(ship));
                    }
                }
                q.push(Event{ev.time + schedule.t_u, EventKind::train});
                break;
            }
            case EventKind::policy_arrival: {
                auto& held = local.at(ev.agent);
                if (ev.policy->version() > held->version()) held = ev.policy;
                log.events.push_back(LogEntry{ev.time, EventKind::policy_arrival, static_cast<std::int64_t>(ev.agent),
                                              ev.policy->version(), learner.updates(), ev.policy->digest()});
                break;
            }
        }
    }
    return log;
}

}  // namespace vvc::oldc
