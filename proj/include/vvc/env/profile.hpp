#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/env/case.hpp"

namespace vvc::env {

/// Per-step load multipliers for every bus and available PV active power for every device
/// (p.u.; always zero for compensators).
struct Profile {
    std::vector<std::vector<double>> load_multiplier;  // [step][bus]
    std::vector<std::vector<double>> pv_available;     // [step][device]

    [[nodiscard]] std::size_t steps() const { return load_multiplier.size(); }
};

/// Shape of the synthetic daily profiles:
///   load(t)  = scale * day * (0.7 + 0.3 sin(2 pi t / T + phase) + eps),  eps ~ N(0, load_noise)
///   pv(t)    = pv_peak * S * max(0, sin(pi (t - T/4) / (T/2))) * cloud(t)
/// where day ~ U(1 - day_spread, 1 + day_spread) and cloud(t) is a clipped AR(1) attenuation.
struct ProfileOptions {
    std::size_t steps = 96;
    double load_scale = 1.0;
    double load_base = 0.7;
    double load_amplitude = 0.3;
    double phase = -3.40;  // evening peak near step 76 of 96
    double load_noise = 0.02;
    double day_spread = 0.1;
    double pv_peak = 0.9;  // fraction of the inverter rating at clear-sky noon
    double cloud_depth = 0.3;
    double cloud_persistence = 0.8;

    bool operator==(const ProfileOptions&) const = default;
};

inline void validate_profile(const Profile& profile, const Case& c) {
    if (profile.steps() == 0) throw std::invalid_argument("profile is empty");
    if (profile.pv_available.size() != profile.steps()) {
        throw std::invalid_argument("profile PV series length differs from load series length");
    }
    for (std::size_t t = 0; t < profile.steps(); ++t) {
        if (profile.load_multiplier[t].size() != c.network.bus_count()) {
            throw std::invalid_argument("profile step " + std::to_string(t) + " has wrong bus count");
        }
        if (profile.pv_available[t].size() != c.devices.size()) {
            throw std::invalid_argument("profile step " + std::to_string(t) + " has wrong device count");
        }
        for (double m : profile.load_multiplier[t]) {
            if (!std::isfinite(m)) throw std::invalid_argument("non-finite load multiplier");
        }
        for (std::size_t d = 0; d < c.devices.size(); ++d) {
            const double p = profile.pv_available[t][d];
            const auto& dev = c.devices[d];
            const double cap = dev.kind == DeviceKind::inverter ? dev.s_rated : 0.0;
            if (!(p >= 0.0 && p <= cap + 1e-12)) {
                throw std::invalid_argument("PV availability of device " + std::to_string(d) + " at step " +
                                            std::to_string(t) + " outside [0, s_rated]");
            }
        }
    }
}

inline Profile constant_profile(const Case& c, std::size_t steps, double multiplier = 1.0) {
    Profile p;
    p.load_multiplier.assign(steps, std::vector<double>(c.network.bus_count(), multiplier));
    p.pv_available.assign(steps, std::vector<double>(c.devices.size(), 0.0));
    return p;
}

namespace detail {

inline double clear_sky(std::size_t t, std::size_t steps) {
    const double x = (static_cast<double>(t) - steps / 4.0) / (steps / 2.0);
    return x <= 0.0 || x >= 1.0 ? 0.0 : std::sin(std::numbers::pi * x);
}

inline double load_shape(const ProfileOptions& o, std::size_t t) {
    return o.load_base + o.load_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                                         static_cast<double>(o.steps) +
                                                     o.phase);
}

}  // namespace detail

/// Seeded synthetic day. Identical (case, seed, options) give identical profiles.
inline Profile synthetic_profile(const Case& c, std::uint64_t seed, const ProfileOptions& o = {}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const double day = 1.0 + o.day_spread * uniform(rng);

    Profile p;
    p.load_multiplier.assign(o.steps, std::vector<double>(c.network.bus_count(), 0.0));
    p.pv_available.assign(o.steps, std::vector<double>(c.devices.size(), 0.0));
    for (std::size_t t = 0; t < o.steps; ++t) {
        const double shape = detail::load_shape(o, t);
        for (std::size_t b = 0; b < c.network.bus_count(); ++b) {
            p.load_multiplier[t][b] = std::max(0.0, o.load_scale * day * (shape + o.load_noise * gauss(rng)));
        }
    }
    for (std::size_t d = 0; d < c.devices.size(); ++d) {
        const auto& dev = c.devices[d];
        double cloud = 0.0;
        for (std::size_t t = 0; t < o.steps; ++t) {
            cloud = o.cloud_persistence * cloud +
                    std::sqrt(1.0 - o.cloud_persistence * o.cloud_persistence) * gauss(rng);
            if (dev.kind != DeviceKind::inverter) continue;
            const double attenuation = std::clamp(1.0 - o.cloud_depth * std::abs(cloud), 0.0, 1.0);
            p.pv_available[t][d] =
                std::min(dev.s_rated, o.pv_peak * dev.s_rated * detail::clear_sky(t, o.steps) * attenuation);
        }
    }
    return p;
}

/// The noise-free shape a planner would forecast: no load noise, no day scaling, clear sky.
inline Profile forecast_profile(const Case& c, const ProfileOptions& o = {}) {
    Profile p;
    p.load_multiplier.assign(o.steps, std::vector<double>(c.network.bus_count(), 0.0));
    p.pv_available.assign(o.steps, std::vector<double>(c.devices.size(), 0.0));
    for (std::size_t t = 0; t < o.steps; ++t) {
        std::fill(p.load_multiplier[t].begin(), p.load_multiplier[t].end(),
                  std::max(0.0, o.load_scale * detail::load_shape(o, t)));
        for (std::size_t d = 0; d < c.devices.size(); ++d) {
            const auto& dev = c.devices[d];
            if (dev.kind == DeviceKind::inverter) {
                p.pv_available[t][d] = std::min(dev.s_rated, o.pv_peak * dev.s_rated * detail::clear_sky(t, o.steps));
            }
        }
    }
    return p;
}

/// CSV layout: header "step,kind,id,value"; kind is "load" (id = bus, value = multiplier)
/// or "pv" (id = device index, value = available active power in p.u.).
inline void write_profile_csv(const Profile& p, std::ostream& out) {
    out << "step,kind,id,value\n";
    out << std::setprecision(17);
    for (std::size_t t = 0; t < p.steps(); ++t) {
        for (std::size_t b = 0; b < p.load_multiplier[t].size(); ++b) {
            out << t << ",load," << b << ',' << p.load_multiplier[t][b] << '\n';
        }
        for (std::size_t d = 0; d < p.pv_available[t].size(); ++d) {
            out << t << ",pv," << d << ',' << p.pv_available[t][d] << '\n';
        }
    }
}

inline Profile read_profile_csv(std::istream& in, const Case& c) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("step,kind,id,value", 0) != 0) {
        throw std::invalid_argument("profile CSV must start with header 'step,kind,id,value'");
    }
    Profile p;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string step_s, kind, id_s, value_s;
        if (!std::getline(row, step_s, ',') || !std::getline(row, kind, ',') || !std::getline(row, id_s, ',') ||
            !std::getline(row, value_s)) {
            throw std::invalid_argument("profile CSV line " + std::to_string(line_no) + " is malformed");
        }
        const auto t = static_cast<std::size_t>(std::stoul(step_s));
        const auto id = static_cast<std::size_t>(std::stoul(id_s));
        const double value = std::stod(value_s);
        if (t >= p.steps()) {
            p.load_multiplier.resize(t + 1, std::vector<double>(c.network.bus_count(), 0.0));
            p.pv_available.resize(t + 1, std::vector<double>(c.devices.size(), 0.0));
        }
        if (kind == "load" && id < c.network.bus_count()) {
            p.load_multiplier[t][id] = value;
        } else if (kind == "pv" && id < c.devices.size()) {
            p.pv_available[t][id] = value;
        } else {
            throw std::invalid_argument("profile CSV line " + std::to_string(line_no) + " has bad kind/id");
        }
    }
    validate_profile(p, c);
    return p;
}

}  // namespace vvc::env
