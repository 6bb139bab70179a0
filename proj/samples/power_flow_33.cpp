// Solves the embedded 33-bus feeder at nominal load and prints the voltage profile.

#include <cstdio>

#include "vvc/grid/ieee33.hpp"
#include "vvc/grid/power_flow.hpp"

int main() {
    const auto net = vvc::grid::ieee33();
    const auto [p, q] = vvc::grid::load_injections(net);
    const auto sol = vvc::grid::solve_power_flow(net, p, q);
    if (!sol.converged) {
        std::fprintf(stderr, "power flow did not converge\n");
        return 1;
    }
    std::printf("converged in %d iterations, loss %.2f kW\n", sol.iterations, sol.p_loss_total * 1000.0);
    for (std::size_t i = 0; i < sol.v_mag.size(); ++i) {
        const bool low = sol.v_mag[i] < net.v_limits.lower;
        std::printf("bus %2zu  |V| %.4f p.u.%s\n", i + 1, sol.v_mag[i], low ? "  below limit" : "");
    }
}
