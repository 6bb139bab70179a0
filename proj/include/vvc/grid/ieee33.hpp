#pragma once

#include <array>

#include "vvc/grid/network.hpp"

namespace vvc::grid {

namespace detail {

struct FeederLine {
    int from;  // 1-based bus numbers as published
    int to;
    double r_ohm;
    double x_ohm;
};

struct FeederLoad {
    int bus;
    double p_kw;
    double q_kvar;
};

// Baran & Wu 33-bus radial feeder, 12.66 kV.
inline constexpr std::array<FeederLine, 32> kIeee33Lines{{
    {1, 2, 0.0922, 0.0470},  {2, 3, 0.4930, 0.2511},   {3, 4, 0.3660, 0.1864},
    {4, 5, 0.3811, 0.1941},  {5, 6, 0.8190, 0.7070},   {6, 7, 0.1872, 0.6188},
    {7, 8, 0.7114, 0.2351},  {8, 9, 1.0300, 0.7400},   {9, 10, 1.0440, 0.7400},
    {10, 11, 0.1966, 0.0650}, {11, 12, 0.3744, 0.1238}, {12, 13, 1.4680, 1.1550},
    {13, 14, 0.5416, 0.7129}, {14, 15, 0.5910, 0.5260}, {15, 16, 0.7463, 0.5450},
    {16, 17, 1.2890, 1.7210}, {17, 18, 0.7320, 0.5740}, {2, 19, 0.1640, 0.1565},
    {19, 20, 1.5042, 1.3554}, {20, 21, 0.4095, 0.4784}, {21, 22, 0.7089, 0.9373},
    {3, 23, 0.4512, 0.3083},  {23, 24, 0.8980, 0.7091}, {24, 25, 0.8960, 0.7011},
    {6, 26, 0.2030, 0.1034},  {26, 27, 0.2842, 0.1447}, {27, 28, 1.0590, 0.9337},
    {28, 29, 0.8042, 0.7006}, {29, 30, 0.5075, 0.2585}, {30, 31, 0.9744, 0.9630},
    {31, 32, 0.3105, 0.3619}, {32, 33, 0.3410, 0.5302},
}};

inline constexpr std::array<FeederLoad, 32> kIeee33Loads{{
    {2, 100, 60},  {3, 90, 40},   {4, 120, 80},  {5, 60, 30},   {6, 60, 20},   {7, 200, 100},
    {8, 200, 100}, {9, 60, 20},   {10, 60, 20},  {11, 45, 30},  {12, 60, 35},  {13, 60, 35},
    {14, 120, 80}, {15, 60, 10},  {16, 60, 20},  {17, 60, 20},  {18, 90, 40},  {19, 90, 40},
    {20, 90, 40},  {21, 90, 40},  {22, 90, 40},  {23, 90, 50},  {24, 420, 200}, {25, 420, 200},
    {26, 60, 25},  {27, 60, 25},  {28, 60, 20},  {29, 120, 70}, {30, 200, 600}, {31, 150, 70},
    {32, 210, 100}, {33, 60, 40},
}};

}  // namespace detail

/// The 33-bus test feeder on a 1 MVA base with 0-based bus ids (published bus k is id k-1).
inline NetworkModel ieee33(double base_kv = 12.66, double base_mva = 1.0) {
    NetworkModel net;
    net.base_mva = base_mva;
    const double z_base = base_kv * base_kv / base_mva;
    net.buses.resize(33);
    for (int i = 0; i < 33; ++i) {
        net.buses[static_cast<std::size_t>(i)].id = i;
    }
    net.buses[0].kind = BusKind::slack;
    for (const auto& load : detail::kIeee33Loads) {
        auto& bus = net.buses[static_cast<std::size_t>(load.bus - 1)];
        bus.p_load = load.p_kw / 1000.0 / base_mva;
        bus.q_load = load.q_kvar / 1000.0 / base_mva;
    }
    for (const auto& line : detail::kIeee33Lines) {
        net.branches.push_back(
            branch_from_impedance(line.from - 1, line.to - 1, line.r_ohm / z_base, line.x_ohm / z_base));
    }
    return net;
}

}  // namespace vvc::grid
