#pragma once

#include "offsim/cost_model.hpp"
#include "offsim/rng.hpp"
#include "offsim/trainer.hpp"

namespace offsim {

enum class BaselineKind { Greedy, Random, PlainRl };

// Picks the placement with the smallest delay; energy is ignored. Exact
// delay ties fall to Local, then Edge, then Cloud.
inline OffloadDecision greedy_decide(const Task& t, const SystemParams& p,
                                     double upload_rate_bps) {
    const double delays[kNumActions] = {
        local_cost(t, p).delay_s,
        edge_cost(t, p, upload_rate_bps).delay_s,
        cloud_cost(t, p, upload_rate_bps).delay_s,
    };
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
        if (delays[a] < delays[best]) best = a;
    return kActionOrder[best];
}

// Uniform draw over the three placements; ignores the task entirely.
inline OffloadDecision random_decide([[maybe_unused]] const Task& t, Rng& rng) {
    const double u = rng.uniform();
    if (u < 1.0 / 3.0) return OffloadDecision::Local;
    if (u < 2.0 / 3.0) return OffloadDecision::Edge;
    return OffloadDecision::Cloud;
}

// The learned baseline: the same training loop with the transport term
// disabled throughout (lambda1 forced to zero).
inline TrainResult plain_rl_train(const Scenario& sc, const TrainConfig& cfg,
                                  const AnnealingSchedule& schedule,
                                  const FeatureScaling& fs = {}) {
    return train(sc, cfg, schedule, fs, /*disable_ot=*/true);
}

} // namespace offsim
