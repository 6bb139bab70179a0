#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support/finite_diff.hpp"
#include "support/pf_oracle.hpp"
#include "support/scripted.hpp"
#include "support/toy_games.hpp"
#include "vvc/baselines/csac.hpp"
#include "vvc/baselines/maddpg.hpp"
#include "vvc/baselines/vvo.hpp"
#include "vvc/env/case.hpp"
#include "vvc/env/profile.hpp"

using namespace vvc;
using namespace vvc::baselines;
using macsac::JointLayout;
using macsac::Transition;
using neural::Matrix;
using Catch::Matchers::WithinAbs;

namespace {

MaddpgConfig small_maddpg(std::uint64_t seed = 0) {
    MaddpgConfig c;
    c.hidden = 16;
    c.batch_size = 8;
    c.buffer_capacity = 1000;
    c.seed = seed;
    return c;
}

Transition random_transition(const JointLayout& l, std::mt19937_64& rng, bool done = false) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Transition t;
    for (std::size_t k = 0; k < l.obs_total(); ++k) {
        t.x.push_back(n(rng));
        t.x_next.push_back(n(rng));
    }
    for (std::size_t k = 0; k < l.act_total(); ++k) t.a.push_back(u(rng));
    for (std::size_t i = 0; i < l.agents(); ++i) {
        t.r.push_back(n(rng));
        t.r_c.push_back(std::abs(n(rng)));
    }
    t.done = done;
    return t;
}

double test_vvr(const std::vector<double>& v, const grid::VoltageLimits& lim) {
    double s = 0.0;
    for (double x : v) {
        if (x > lim.upper) s += (x - lim.upper) * (x - lim.upper);
        if (x < lim.lower) s += (lim.lower - x) * (lim.lower - x);
    }
    return s;
}

/// Slack bus 0 feeding a load at bus 1 through r + jx, with a compensator at bus 1.
env::ControlProblem two_bus(double p_load, double q_load, double r, double x) {
    grid::NetworkModel net;
    net.buses = {grid::Bus{0, grid::BusKind::slack}, grid::Bus{1, grid::BusKind::load, 0.0, 0.0, p_load, q_load}};
    net.branches = {grid::branch_from_impedance(0, 1, r, x)};
    env::Case c;
    c.network = net;
    c.areas = {{0, 1}};
    c.devices = {env::DeviceSpec{1, env::DeviceKind::compensator, 0.0, -1.0, 1.0, 0}};
    return env::make_control_problem(c, env::constant_profile(c, 1), 0);
}

/// Dense grid over the single compensator, scored with the independent fixed-point flow.
std::pair<double, double> grid_oracle(const env::ControlProblem& prob, double penalty, int points) {
    double best = 1e300, arg = 0.0;
    for (int k = 0; k < points; ++k) {
        const double a = -1.0 + 2.0 * k / (points - 1);
        const auto [p, q] = prob.injections(prob.setpoints(std::vector<double>{a}));
        const auto f = testing::fixed_point_flow(*prob.network, p, q);
        REQUIRE(f.converged);
        std::vector<double> v;
        for (const auto& c : f.v) v.push_back(std::abs(c));
        const double obj = f.loss_pu * prob.network->base_mva + penalty * test_vvr(v, prob.network->v_limits);
        if (obj < best) {
            best = obj;
            arg = a;
        }
    }
    return {arg, best};
}

env::ControlProblem nominal33(std::size_t t = 70) {
    const auto c = env::ieee33_case();
    return env::make_control_problem(c, env::synthetic_profile(c, 3), t);
}

}  // namespace

TEST_CASE("MADDPG targets fold the cost into the reward") {
    const JointLayout l{{3, 2}, {1, 2}};
    auto cfg = small_maddpg();
    cfg.gamma = 0.0;
    cfg.penalty = 10.0;
    cfg.reward_scale = 0.5;
    Maddpg<double> m(l, cfg);
    macsac::ReplayBuffer buf(l, 10);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 3; ++k) buf.add(random_transition(l, rng));
    const auto b = buf.gather<double>({0, 1, 2});
    const auto y = m.critic_target_values(1, b);
    for (Eigen::Index r = 0; r < 3; ++r) CHECK_THAT(y(r, 0), WithinAbs(0.5 * (b.r(r, 1) - 10.0 * b.r_c(r, 1)), 1e-12));

    cfg.gamma = 0.9;
    Maddpg<double> m2(l, cfg);
    testing::make_constant(m2.critic_target(0), 3.0);
    const auto y2 = m2.critic_target_values(0, b);
    for (Eigen::Index r = 0; r < 3; ++r) {
        CHECK_THAT(y2(r, 0), WithinAbs(0.5 * (b.r(r, 0) - 10.0 * b.r_c(r, 0)) + 0.9 * 3.0, 1e-12));
    }
}

TEST_CASE("MADDPG losses match finite differences") {
    const JointLayout l{{3, 2}, {1, 2}};
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Maddpg<double> m(l, small_maddpg(seed));
        macsac::ReplayBuffer buf(l, 10);
        std::mt19937_64 rng(10 + seed);
        for (int k = 0; k < 6; ++k) buf.add(random_transition(l, rng, k == 0));
        const auto b = buf.gather<double>({0, 1, 2, 3, 4, 5});
        for (std::size_t i = 0; i < 2; ++i) {
            const auto y = m.critic_target_values(i, b);
            auto res = testing::check_gradients(
                testing::pointers(m.critic(i).parameters()),
                [&] {
                    neural::Tape<double> t;
                    return m.critic_loss(t, i, b, y).scalar();
                },
                [&] {
                    neural::Tape<double> t;
                    t.backward(m.critic_loss(t, i, b, y));
                });
            INFO(res.worst_name);
            CHECK(res.worst_rel <= 1e-4);
            res = testing::check_gradients(
                testing::pointers(m.actor(i).net().parameters()),
                [&] {
                    neural::Tape<double> t;
                    return m.actor_loss(t, i, b).scalar();
                },
                [&] {
                    neural::Tape<double> t;
                    t.backward(m.actor_loss(t, i, b));
                });
            INFO(res.worst_name);
            CHECK(res.worst_rel <= 1e-4);
        }
    }
}

TEST_CASE("MADDPG actor ascends a scripted critic") {
    const JointLayout l{{1}, {1}};
    auto cfg = small_maddpg(2);
    cfg.hidden = 32;
    cfg.noise = 0.0;
    cfg.batch_size = 16;
    Maddpg<double> m(l, cfg);
    std::mt19937_64 rng(3);
    testing::fit_critic(m.critic(0), [](double a) { return a; }, rng);
    for (int k = 0; k < 16; ++k) m.store(Transition{{1.0}, {0.0}, {0.0}, {0.0}, {1.0}, false});
    const auto o = Matrix<double>::Ones(1, 1);
    const double before = m.actor(0).act(o)(0, 0);
    macsac::Batch<double> b;
    b.x = Matrix<double>::Ones(16, 1);
    b.a = Matrix<double>::Zero(16, 1);
    neural::Adam<double> opt(m.actor(0).net().parameters());
    for (int s = 0; s < 100; ++s) {
        m.actor(0).net().zero_grad();
        neural::Tape<double> t;
        t.backward(m.actor_loss(t, 0, b));
        opt.step(m.actor(0).net().parameters());
    }
    CHECK(m.actor(0).act(o)(0, 0) > before + 0.2);
}

TEST_CASE("MADDPG exploration stays inside the action box") {
    const JointLayout l{{2}, {3}};
    auto cfg = small_maddpg(4);
    cfg.noise = 5.0;
    Maddpg<double> m(l, cfg);
    const auto pi = m.ship_policy(0);
    std::mt19937_64 rng(5);
    bool moved = false;
    for (int k = 0; k < 1000; ++k) {
        const auto a = pi->act({0.3, -0.4}, true, rng);
        for (double v : a) CHECK((v >= -1.0 && v <= 1.0));
        moved = moved || std::abs(a[0]) == 1.0;
    }
    CHECK(moved);
    CHECK(pi->act({0.3, -0.4}, false, rng) == pi->act({0.3, -0.4}, false, rng));
}

TEST_CASE("MADDPG is a no-op on a short buffer and reproducible") {
    const JointLayout l{{3, 2}, {1, 2}};
    Maddpg<double> idle(l, small_maddpg());
    CHECK_FALSE(idle.train_step().trained);
    auto run = [&] {
        Maddpg<double> m(l, small_maddpg(6));
        std::mt19937_64 rng(7);
        for (int k = 0; k < 20; ++k) m.store(random_transition(l, rng));
        for (int s = 0; s < 4; ++s) m.train_step();
        return m.checkpoint().dump();
    };
    CHECK(run() == run());
    Maddpg<double> m(l, small_maddpg(6));
    std::mt19937_64 rng(7);
    for (int k = 0; k < 20; ++k) m.store(random_transition(l, rng));
    m.train_step();
    Maddpg<double> r(l, small_maddpg(8));
    r.restore(nlohmann::json::parse(m.checkpoint().dump()));
    CHECK(r.ship_policy(1)->digest() == m.ship_policy(1)->digest());
    CHECK(r.updates() == 1);
}

TEST_CASE("MADDPG reaches the enumerated optimum of a coordination game") {
    auto game = testing::coordination_game();
    const auto best = testing::enumerate_optimum(game);
    auto cfg = small_maddpg(9);
    cfg.hidden = 32;
    cfg.gamma = 0.0;
    cfg.batch_size = 32;
    cfg.noise = 0.2;
    Maddpg<double> m(testing::layout_of(game), cfg);
    testing::train_synchronously(game, m, 150, 10);
    std::mt19937_64 rng(0);
    CHECK_THAT(m.ship_policy(0)->act({1.0}, false, rng)[0], WithinAbs(best[0], 0.1));
    CHECK_THAT(m.ship_policy(1)->act({1.0}, false, rng)[0], WithinAbs(best[1], 0.1));
}

TEST_CASE("CSAC is MACSAC with one agent") {
    CHECK_THROWS_AS(Csac<double>(JointLayout{{1, 1}, {1, 1}}, {}), std::invalid_argument);

    auto inner = std::make_shared<testing::BanditGame>(testing::coordination_game());
    auto central = centralized_task(inner);
    CHECK(central->obs_dim(0) == inner->obs_dim(0) + inner->obs_dim(1));
    CHECK(central->act_dim(0) == 2);

    macsac::MacsacConfig cfg;
    cfg.hidden = 16;
    cfg.batch_size = 16;
    cfg.gamma = 0.5;
    cfg.seed = 11;
    macsac::Macsac<double> a(testing::layout_of(*central), cfg);
    Csac<double> b(testing::layout_of(*central), cfg);
    CHECK(b.name() == "csac");
    const auto ra = testing::train_synchronously(*central, a, 6, 12);
    const auto rb = testing::train_synchronously(*central, b, 6, 12);
    CHECK(ra == rb);
    auto ja = a.checkpoint();
    auto jb = b.checkpoint();
    CHECK(ja.at("tensors") == jb.at("tensors"));
    CHECK(ja.at("meta").at("lambda") == jb.at("meta").at("lambda"));
}

TEST_CASE("CSAC reaches the coordination optimum through the centralized view") {
    auto inner = std::make_shared<testing::BanditGame>(testing::coordination_game());
    auto central = centralized_task(inner);
    const auto best = testing::enumerate_optimum(*inner);
    macsac::MacsacConfig cfg;
    cfg.hidden = 32;
    cfg.batch_size = 32;
    cfg.gamma = 0.0;
    cfg.alpha = {0.01};
    cfg.seed = 13;
    Csac<double> learner(testing::layout_of(*central), cfg);
    testing::train_synchronously(*central, learner, 300, 14);
    std::mt19937_64 rng(0);
    const auto a = learner.ship_policy(0)->act({1.0, 1.0}, false, rng);
    CHECK_THAT(a[0], WithinAbs(best[0], 0.1));
    CHECK_THAT(a[1], WithinAbs(best[1], 0.1));
}

TEST_CASE("VVO without devices returns the uncontrolled loss") {
    auto prob = nominal33();
    prob.devices.clear();
    prob.pv_available.clear();
    const auto r = vvo_solve(prob);
    const auto [p, q] = prob.injections(std::vector<double>{});
    const auto f = testing::fixed_point_flow(*prob.network, p, q);
    CHECK(r.actions.empty());
    CHECK(r.converged);
    CHECK_THAT(r.loss_mw, WithinAbs(f.loss_pu * prob.network->base_mva, 1e-9));
}

TEST_CASE("VVO on two buses matches a dense grid search") {
    struct Case2 {
        double p, q, r, x;
    };
    // Interior loss optimum; then a heavy load where the voltage penalty shapes the optimum.
    for (const auto& c : {Case2{0.5, 0.3, 0.01, 0.02}, Case2{1.2, 0.4, 0.02, 0.08}}) {
        const auto prob = two_bus(c.p, c.q, c.r, c.x);
        const auto r = vvo_solve(prob);
        const int points = 20001;
        const auto [arg, best] = grid_oracle(prob, 1000.0, points);
        INFO("load " << c.p << " + j" << c.q);
        CHECK(r.objective <= best + 1e-9);
        CHECK_THAT(r.actions[0], WithinAbs(arg, 2.0 / (points - 1)));
    }
}

TEST_CASE("VVO dominates a random probe on the 33-bus feeder") {
    const auto prob = nominal33();
    const auto r = vvo_solve(prob);
    REQUIRE(r.converged);
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_gap = 1e300;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> a(prob.control_count());
        for (auto& v : a) v = u(rng);
        const auto e = evaluate_actions(prob, a, 1000.0);
        REQUIRE(e.ok);
        worst_gap = std::min(worst_gap, e.objective - r.objective);
        CHECK(r.loss_mw <= e.loss_mw + 1e-4 + 1000.0 * e.vvr);
    }
    CHECK(worst_gap >= 0.0);
    // The chosen setpoints respect each device's capability.
    for (std::size_t d = 0; d < prob.control_count(); ++d) {
        const auto [lo, hi] = env::reactive_range(prob.devices[d], prob.pv_available[d]);
        CHECK((r.setpoints[d] >= lo - 1e-12 && r.setpoints[d] <= hi + 1e-12));
    }
    CHECK(r.vvr >= 0.0);
}

TEST_CASE("VVO is reproducible and warm starts do not hurt") {
    const auto prob = nominal33(40);
    const auto a = vvo_solve(prob);
    const auto b = vvo_solve(prob);
    CHECK(a.actions == b.actions);
    const auto warm = vvo_solve(prob, {}, &a.actions);
    CHECK(warm.objective <= a.objective);
    const std::vector<double> short_guess{0.0};
    CHECK_THROWS_AS(vvo_solve(prob, {}, &short_guess), std::invalid_argument);
}

TEST_CASE("VVO episode matches step-by-step solves") {
    const auto c = env::ieee33_case();
    auto profile = env::synthetic_profile(c, 4);
    profile.load_multiplier.resize(3);
    profile.pv_available.resize(3);
    const auto ep = vvo_episode(c, profile);
    REQUIRE(ep.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        const auto single = vvo_solve(env::make_control_problem(c, profile, t));
        CHECK_THAT(ep[t].objective, WithinAbs(single.objective, 1e-7));
    }
}

TEST_CASE("AVVO with a perfect model equals VVO") {
    const auto truth = nominal33();
    const auto model = with_network(truth, perturbed_network(*truth.network, AvvoOptions{0.0, 1}));
    const auto v = vvo_solve(truth);
    const auto a = avvo_solve(truth, model);
    CHECK(a.actions == v.actions);
    CHECK(a.loss_mw == v.loss_mw);
}

TEST_CASE("AVVO with admittance errors never beats VVO on the true network") {
    const auto truth = nominal33();
    const auto v = vvo_solve(truth);
    int strictly_worse = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto model = with_network(truth, perturbed_network(*truth.network, AvvoOptions{0.2, seed}));
        const auto a = avvo_solve(truth, model);
        CHECK(a.objective >= v.objective - 1e-4);
        strictly_worse += a.objective > v.objective + 1e-9 ? 1 : 0;
    }
    CHECK(strictly_worse == 5);
}

TEST_CASE("admittance perturbation is seeded and bounded") {
    const auto net = grid::ieee33();
    const auto a = perturbed_network(net, AvvoOptions{0.2, 7});
    const auto b = perturbed_network(net, AvvoOptions{0.2, 7});
    const auto c = perturbed_network(net, AvvoOptions{0.2, 8});
    bool differs = false;
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        CHECK(a.branches[k].g == b.branches[k].g);
        const double f = a.branches[k].g / net.branches[k].g;
        CHECK((f >= 0.8 && f <= 1.2));
        CHECK_THAT(a.branches[k].b / net.branches[k].b, WithinAbs(f, 1e-12));
        differs = differs || c.branches[k].g != a.branches[k].g;
    }
    CHECK(differs);
    CHECK_THROWS_AS(perturbed_network(net, AvvoOptions{1.5, 0}), std::invalid_argument);
}
