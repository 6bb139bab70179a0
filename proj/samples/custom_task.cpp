// Plugs a user-defined task into MACSAC: two agents share a reward for pushing their mean
// action up, while a cost bound caps how far they may go.

#include <algorithm>
#include <cstdio>
#include <random>
#include <vector>

#include "vvc/env/task.hpp"
#include "vvc/macsac/macsac.hpp"
#include "vvc/oldc/run.hpp"

using namespace vvc;

class MeanPush : public env::Task {
  public:
    [[nodiscard]] std::size_t agent_count() const override { return 2; }
    [[nodiscard]] std::size_t obs_dim(std::size_t) const override { return 1; }
    [[nodiscard]] std::size_t act_dim(std::size_t) const override { return 1; }
    [[nodiscard]] std::size_t horizon() const override { return 32; }

    std::vector<std::vector<double>> reset(std::uint64_t) override {
        t_ = 0;
        return {{1.0}, {1.0}};
    }

    env::TaskStep step(const std::vector<std::vector<double>>& a) override {
        const double mean = 0.5 * (std::clamp(a[0][0], -1.0, 1.0) + std::clamp(a[1][0], -1.0, 1.0));
        const double cost = std::max(0.0, mean) * std::max(0.0, mean);
        env::TaskStep s;
        s.rewards = {mean, mean};
        s.costs = {cost, cost};
        s.system_cost = cost;
        s.done = ++t_ >= horizon();
        s.next_obs = {{1.0}, {1.0}};
        return s;
    }

  private:
    std::size_t t_ = 0;
};

int main() {
    MeanPush task;
    macsac::MacsacConfig cfg;
    cfg.hidden = 32;
    cfg.batch_size = 32;
    cfg.gamma = 0.5;
    cfg.alpha = {0.01, 0.01};
    cfg.cost_bound = {0.5, 0.5};
    cfg.lambda_lr = 0.01;
    cfg.seed = 3;
    macsac::Macsac<double> learner(macsac::JointLayout{{1, 1}, {1, 1}}, cfg);
    oldc::run(oldc::OldcSchedule{}, task, learner, oldc::RunOptions{200, 3});

    std::mt19937_64 rng(0);
    const double a0 = learner.ship_policy(0)->act({1.0}, false, rng)[0];
    const double a1 = learner.ship_policy(1)->act({1.0}, false, rng)[0];
    std::printf("modes %.3f %.3f (mean %.3f), multipliers %.3f %.3f\n", a0, a1, 0.5 * (a0 + a1), learner.lambda(0),
                learner.lambda(1));
    std::printf("without the bound both modes go to 1; with it the mean settles near 0.5\n");
}
