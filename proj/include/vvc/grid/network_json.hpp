#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <string>

#include "vvc/grid/network.hpp"

namespace vvc::grid {

/// Reads the "base_mva", "v_limits", "buses" and "branches" members of a case document.
/// Buses may appear in any order; they are sorted by id before validation.
inline NetworkModel network_from_json(const nlohmann::json& doc) {
    NetworkModel net;
    try {
        net.base_mva = doc.value("base_mva", 1.0);
        if (doc.contains("v_limits")) {
            const auto& lim = doc.at("v_limits");
            net.v_limits = VoltageLimits{lim.at(0).get<double>(), lim.at(1).get<double>()};
        }
        for (const auto& jb : doc.at("buses")) {
            Bus bus;
            bus.id = jb.at("id").get<int>();
            const auto kind = jb.value("kind", std::string("load"));
            if (kind == "slack") {
                bus.kind = BusKind::slack;
            } else if (kind == "load") {
                bus.kind = BusKind::load;
            } else {
                throw NetworkError("bus " + std::to_string(bus.id) + " has unknown kind '" + kind + "'");
            }
            bus.g_shunt = jb.value("g_sh", 0.0);
            bus.b_shunt = jb.value("b_sh", 0.0);
            bus.p_load = jb.value("p_load", 0.0);
            bus.q_load = jb.value("q_load", 0.0);
            net.buses.push_back(bus);
        }
        for (const auto& jl : doc.at("branches")) {
            net.branches.push_back(Branch{jl.at("from").get<int>(), jl.at("to").get<int>(),
                                          jl.at("g").get<double>(), jl.at("b").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw NetworkError(std::string("malformed network document: ") + e.what());
    }
    std::sort(net.buses.begin(), net.buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    validate(net);
    return net;
}

inline nlohmann::json network_to_json(const NetworkModel& net) {
    nlohmann::json doc;
    doc["base_mva"] = net.base_mva;
    doc["v_limits"] = {net.v_limits.lower, net.v_limits.upper};
    auto& buses = doc["buses"] = nlohmann::json::array();
    for (const auto& bus : net.buses) {
        buses.push_back({{"id", bus.id},
                         {"kind", bus.kind == BusKind::slack ? "slack" : "load"},
                         {"g_sh", bus.g_shunt},
                         {"b_sh", bus.b_shunt},
                         {"p_load", bus.p_load},
                         {"q_load", bus.q_load}});
    }
    auto& branches = doc["branches"] = nlohmann::json::array();
    for (const auto& br : net.branches) {
        branches.push_back({{"from", br.from}, {"to", br.to}, {"g", br.g}, {"b", br.b}});
    }
    return doc;
}

}  // namespace vvc::grid
