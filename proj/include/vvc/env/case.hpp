#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/grid/ieee33.hpp"
#include "vvc/grid/network.hpp"
#include "vvc/grid/network_json.hpp"

namespace vvc::env {

enum class DeviceKind { inverter, compensator };

struct DeviceSpec {
    int node = 0;
    DeviceKind kind = DeviceKind::inverter;
    double s_rated = 0.0;  // MVA, inverters only
    double q_min = 0.0;    // p.u., compensators only
    double q_max = 0.0;
    int area = 0;
};

/// A branch crossing an area cut, oriented so that positive flow leaves the area.
struct BoundaryBranch {
    std::size_t branch = 0;
    bool leaves_from_side = true;  // area holds branch.from
};

struct AreaPartition {
    std::vector<std::vector<int>> areas;
    std::vector<std::vector<BoundaryBranch>> boundary;
    std::vector<int> area_of_bus;

    [[nodiscard]] std::size_t size() const { return areas.size(); }
};

/// A network plus the controllable devices and the agent areas that own them.
struct Case {
    grid::NetworkModel network;
    std::vector<DeviceSpec> devices;
    std::vector<std::vector<int>> areas;
};

inline AreaPartition make_partition(const grid::NetworkModel& net, std::vector<std::vector<int>> node_sets) {
    const auto n = net.bus_count();
    AreaPartition part;
    part.area_of_bus.assign(n, -1);
    for (std::size_t a = 0; a < node_sets.size(); ++a) {
        if (node_sets[a].empty()) throw std::invalid_argument("area " + std::to_string(a) + " is empty");
        for (int bus : node_sets[a]) {
            if (bus < 0 || static_cast<std::size_t>(bus) >= n) {
                throw std::invalid_argument("area " + std::to_string(a) + " references unknown bus " +
                                            std::to_string(bus));
            }
            auto& owner = part.area_of_bus[static_cast<std::size_t>(bus)];
            if (owner != -1) {
                throw std::invalid_argument("bus " + std::to_string(bus) + " belongs to areas " +
                                            std::to_string(owner) + " and " + std::to_string(a));
            }
            owner = static_cast<int>(a);
        }
        std::sort(node_sets[a].begin(), node_sets[a].end());
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (part.area_of_bus[i] == -1) {
            throw std::invalid_argument("bus " + std::to_string(i) + " is not covered by any area");
        }
    }
    part.areas = std::move(node_sets);
    part.boundary.assign(part.areas.size(), {});
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        const int af = part.area_of_bus[static_cast<std::size_t>(br.from)];
        const int at = part.area_of_bus[static_cast<std::size_t>(br.to)];
        if (af != at) {
            part.boundary[static_cast<std::size_t>(af)].push_back({k, true});
            part.boundary[static_cast<std::size_t>(at)].push_back({k, false});
        }
    }
    return part;
}

inline void validate_case(const Case& c) {
    grid::validate(c.network);
    const auto part = make_partition(c.network, c.areas);
    std::set<int> device_nodes;
    for (std::size_t d = 0; d < c.devices.size(); ++d) {
        const auto& dev = c.devices[d];
        const auto label = "device " + std::to_string(d);
        if (dev.node < 0 || static_cast<std::size_t>(dev.node) >= c.network.bus_count()) {
            throw std::invalid_argument(label + " sits on an unknown bus");
        }
        if (dev.area < 0 || static_cast<std::size_t>(dev.area) >= c.areas.size()) {
            throw std::invalid_argument(label + " references an unknown area");
        }
        if (part.area_of_bus[static_cast<std::size_t>(dev.node)] != dev.area) {
            throw std::invalid_argument(label + " node is outside its area");
        }
        if (dev.node == c.network.slack_bus()) throw std::invalid_argument(label + " sits on the slack bus");
        if (!device_nodes.insert(dev.node).second) {
            throw std::invalid_argument(label + " shares bus " + std::to_string(dev.node) +
                                        " with another device");
        }
        if (dev.kind == DeviceKind::inverter && !(dev.s_rated > 0.0)) {
            throw std::invalid_argument(label + " needs s_rated > 0");
        }
        if (dev.kind == DeviceKind::compensator &&
            (!(dev.q_min <= dev.q_max) || !std::isfinite(dev.q_min) || !std::isfinite(dev.q_max))) {
            throw std::invalid_argument(label + " needs q_min <= q_max");
        }
    }
    for (std::size_t a = 0; a < c.areas.size(); ++a) {
        const bool has_device = std::any_of(c.devices.begin(), c.devices.end(),
                                            [&](const DeviceSpec& d) { return d.area == static_cast<int>(a); });
        if (!has_device) throw std::invalid_argument("area " + std::to_string(a) + " controls no device");
    }
}

/// Default 33-bus setup: three PV inverters and one SVC, each owned by its own station.
/// Bus ids are 0-based (published bus k is id k-1).
inline Case ieee33_case() {
    Case c;
    c.network = grid::ieee33();
    auto range = [](int first, int last) {
        std::vector<int> out;
        for (int i = first; i <= last; ++i) out.push_back(i - 1);
        return out;
    };
    auto area0 = range(1, 5);
    const auto lateral = range(19, 25);
    area0.insert(area0.end(), lateral.begin(), lateral.end());
    c.areas = {area0, range(6, 12), range(13, 18), range(26, 33)};
    c.devices = {
        DeviceSpec{24, DeviceKind::inverter, 1.0, 0.0, 0.0, 0},
        DeviceSpec{9, DeviceKind::inverter, 1.0, 0.0, 0.0, 1},
        DeviceSpec{17, DeviceKind::inverter, 1.0, 0.0, 0.0, 2},
        DeviceSpec{29, DeviceKind::compensator, 0.0, -1.0, 1.0, 3},
    };
    return c;
}

/// Collapses every area into one, giving a single agent that owns all devices.
inline Case centralize(Case c) {
    std::vector<int> all;
    for (const auto& area : c.areas) all.insert(all.end(), area.begin(), area.end());
    std::sort(all.begin(), all.end());
    c.areas = {all};
    for (auto& dev : c.devices) dev.area = 0;
    return c;
}

inline Case case_from_json(const nlohmann::json& doc) {
    Case c;
    c.network = grid::network_from_json(doc);
    try {
        for (const auto& jd : doc.at("devices")) {
            DeviceSpec dev;
            dev.node = jd.at("node").get<int>();
            const auto kind = jd.at("kind").get<std::string>();
            if (kind == "inverter") {
                dev.kind = DeviceKind::inverter;
            } else if (kind == "compensator") {
                dev.kind = DeviceKind::compensator;
            } else {
                throw std::invalid_argument("unknown device kind '" + kind + "'");
            }
            dev.s_rated = jd.value("s_rated", 0.0);
            dev.q_min = jd.value("q_min", 0.0);
            dev.q_max = jd.value("q_max", 0.0);
            dev.area = jd.at("area").get<int>();
            c.devices.push_back(dev);
        }
        c.areas = doc.at("areas").get<std::vector<std::vector<int>>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed case document: ") + e.what());
    }
    validate_case(c);
    return c;
}

inline nlohmann::json case_to_json(const Case& c) {
    auto doc = grid::network_to_json(c.network);
    auto& devices = doc["devices"] = nlohmann::json::array();
    for (const auto& dev : c.devices) {
        devices.push_back({{"node", dev.node},
                           {"kind", dev.kind == DeviceKind::inverter ? "inverter" : "compensator"},
                           {"s_rated", dev.s_rated},
                           {"q_min", dev.q_min},
                           {"q_max", dev.q_max},
                           {"area", dev.area}});
    }
    doc["areas"] = c.areas;
    return doc;
}

/// Resolves "builtin:ieee33" or a path to a JSON case file.
inline Case load_case(const std::string& spec) {
    if (spec == "builtin:ieee33" || spec == "ieee33") return ieee33_case();
    std::ifstream in(spec);
    if (!in) throw std::invalid_argument("cannot open network file '" + spec + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("cannot parse network file '" + spec + "': " + e.what());
    }
    return case_from_json(doc);
}

}  // namespace vvc::env
