// Trains MACSAC on the 33-bus feeder under the online schedule for a few synthetic days and
// prints the daily mean loss and voltage violation next to the uncontrolled feeder.

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "vvc/env/case.hpp"
#include "vvc/env/task.hpp"
#include "vvc/macsac/macsac.hpp"
#include "vvc/oldc/run.hpp"

using namespace vvc;

int main(int argc, char** argv) {
    const std::size_t days = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20;
    env::FeederTask task(env::ieee33_case(), env::ProfileOptions{}, 1000);

    macsac::JointLayout layout;
    for (std::size_t i = 0; i < task.agent_count(); ++i) {
        layout.obs_dims.push_back(task.obs_dim(i));
        layout.act_dims.push_back(task.act_dim(i));
    }
    macsac::MacsacConfig cfg;
    cfg.gamma = 0.9;
    cfg.batch_size = 64;
    cfg.reward_scale = 20.0;
    cfg.cost_scale = 100.0;
    cfg.seed = 1;
    macsac::Macsac<float> learner(layout, cfg);

    // Reference: every device left at zero output on the same days.
    std::vector<double> idle_loss(days, 0.0);
    std::vector<double> idle_vvr(days, 0.0);
    for (std::size_t d = 0; d < days; ++d) {
        task.reset(d);
        for (bool done = false; !done;) {
            std::vector<std::vector<double>> zero;
            for (std::size_t i = 0; i < task.agent_count(); ++i) zero.emplace_back(task.act_dim(i), 0.0);
            const auto s = task.step(zero);
            idle_loss[d] += s.loss_mw / static_cast<double>(task.horizon());
            idle_vvr[d] += s.system_cost / static_cast<double>(task.horizon());
            done = s.done;
        }
    }

    std::vector<double> loss(days, 0.0);
    std::vector<double> vvr(days, 0.0);
    oldc::RunOptions opts{days, 1};
    opts.on_step = [&](const oldc::StepRecord& r) {
        loss[r.episode] += r.loss_mw / static_cast<double>(task.horizon());
        vvr[r.episode] += r.vvr / static_cast<double>(task.horizon());
    };
    const auto log = oldc::run(oldc::OldcSchedule{1, 8, 8, 1, 0, 0.0}, task, learner, opts);

    std::printf("day   loss MW  (idle)     VVR       (idle)\n");
    for (std::size_t d = 0; d < days; ++d) {
        std::printf("%3zu   %.4f   (%.4f)   %.2e  (%.2e)\n", d, loss[d], idle_loss[d], vvr[d], idle_vvr[d]);
    }
    std::printf("%llu updates, %zu samples stored\n", static_cast<unsigned long long>(log.updates), log.samples_stored);
}
