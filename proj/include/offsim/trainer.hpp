#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "offsim/policy.hpp"
#include "offsim/rng.hpp"
#include "offsim/scenario.hpp"
#include "offsim/transport.hpp"

namespace offsim {

// Three-phase weight schedule for the joint loss: an imitation-heavy warmup,
// an exploration ramp, and a fine-tune tail that re-raises the transport
// weight to its midpoint. Weights may jump at phase boundaries; within a
// phase they are continuous.
struct AnnealingSchedule {
    double lambda1_start = 1.0, lambda1_end = 0.1;  // transport term
    double lambda2_start = 0.1, lambda2_end = 1.0;  // reinforcement term
    std::array<double, 3> phase_fractions = {0.2, 0.6, 0.2};
    enum class Mode { Linear, Exponential } mode = Mode::Linear;
};

inline void validate(const AnnealingSchedule& s) {
    double sum = 0;
    for (double f : s.phase_fractions) {
        if (!(f > 0.0) || !(f < 1.0))
            throw std::invalid_argument("annealing: phase fractions must lie in (0, 1)");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("annealing: phase fractions must sum to 1");
    for (double l : {s.lambda1_start, s.lambda1_end, s.lambda2_start, s.lambda2_end})
        if (l < 0.0 || !std::isfinite(l))
            throw std::invalid_argument("annealing: lambda endpoints must be finite and >= 0");
}

namespace detail {

inline double interpolate(double start, double end, double t, AnnealingSchedule::Mode mode) {
    if (mode == AnnealingSchedule::Mode::Exponential && start > 0.0 && end > 0.0)
        return start * std::pow(end / start, t);
    return start + (end - start) * t;  // exponential falls back here at a zero endpoint
}

} // namespace detail

// Weights (lambda1, lambda2) for a 1-based training iteration.
inline std::pair<double, double> annealing_scheme(int iteration, const AnnealingSchedule& s,
                                                  int max_iter) {
    validate(s);
    if (max_iter < 1)
        throw std::invalid_argument("annealing_scheme: max_iter must be >= 1");
    if (iteration < 1 || iteration > max_iter)
        throw std::out_of_range("annealing_scheme: iteration " + std::to_string(iteration) +
                                " outside [1, " + std::to_string(max_iter) + "]");
    const int n1 = static_cast<int>(std::llround(s.phase_fractions[0] * max_iter));
    const int n2 = static_cast<int>(std::llround((s.phase_fractions[0] + s.phase_fractions[1]) * max_iter));
    if (iteration <= n1)
        return {s.lambda1_start, s.lambda2_start};
    if (iteration <= n2) {
        const int lo = n1 + 1;
        const double t = (n2 == lo) ? 1.0
                                    : static_cast<double>(iteration - lo) / static_cast<double>(n2 - lo);
        return {detail::interpolate(s.lambda1_start, s.lambda1_end, t, s.mode),
                detail::interpolate(s.lambda2_start, s.lambda2_end, t, s.mode)};
    }
    return {0.5 * (s.lambda1_start + s.lambda1_end), s.lambda2_end};
}

// Joint objective: lambda1 * transport_cost - lambda2 * average_reward.
// The reward enters negated so that minimizing the loss maximizes reward.
inline double joint_loss(double ot_cost, double avg_reward, double lambda1, double lambda2) {
    if (!std::isfinite(ot_cost) || !std::isfinite(avg_reward))
        throw std::invalid_argument("joint_loss: inputs must be finite");
    return lambda1 * ot_cost - lambda2 * avg_reward;
}

struct TrainConfig {
    int max_iter = 50;
    int batch_episodes = 8;
    double epsilon = 0.01;       // transport regularization
    double tolerance = 1e-6;     // transport marginal tolerance
    int max_sinkhorn_iter = 10000;
    double learning_rate = 0.3;  // sized so 50 iterations saturate the softmax
    double discount = 0.9;
    double grad_clip = 5.0;
    std::uint64_t seed = 1;
};

inline void validate(const TrainConfig& c) {
    if (c.max_iter < 1) throw std::invalid_argument("train config: max_iter must be >= 1");
    if (c.batch_episodes < 1) throw std::invalid_argument("train config: batch_episodes must be >= 1");
    if (!(c.epsilon > 0.0)) throw std::invalid_argument("train config: epsilon must be positive");
    if (!(c.tolerance > 0.0)) throw std::invalid_argument("train config: tolerance must be positive");
    if (c.max_sinkhorn_iter < 1)
        throw std::invalid_argument("train config: max_sinkhorn_iter must be >= 1");
    if (!(c.learning_rate > 0.0))
        throw std::invalid_argument("train config: learning_rate must be positive");
    if (!(c.discount >= 0.0) || !(c.discount < 1.0))
        throw std::invalid_argument("train config: discount must lie in [0, 1)");
}

struct TraceRow {
    int iteration = 0;
    double lambda1 = 0, lambda2 = 0;
    double ot_cost = 0, avg_reward = 0, joint_loss = 0;
};

using TrainTrace = std::vector<TraceRow>;

struct TrainResult {
    PolicyParams theta;
    TrainTrace trace;
};

struct OfflineResult {
    PolicyParams theta;
    bool ot_converged = false;
};

namespace detail {

// One pass over the task list in arrival order. The shared upload rate is
// taken from the offloader concurrency realized last (previous episode), so
// successive episodes iterate toward the same self-consistent rate the
// evaluator settles on; the episode returns its own offloader count to feed
// the next one.
inline Trajectory rollout_episode(const Scenario& sc, const PolicyParams& theta,
                                  const FeatureScaling& fs, double discount, double rate,
                                  Rng& rng, int& offloaders_out) {
    Trajectory traj;
    traj.discount = discount;
    traj.steps.reserve(sc.tasks.size());
    int offloaded = 0;
    for (std::size_t i = 0; i < sc.tasks.size(); ++i) {
        State st;
        st.task = sc.tasks[i];
        st.current_upload_rate = rate;
        st.pending_count = static_cast<int>(sc.tasks.size() - i);
        const auto probs = action_probabilities(theta, st, fs);
        const OffloadDecision a = sample_action(probs, rng);
        const CostBreakdown base = local_cost(st.task, sc.params);
        const CostBreakdown chosen = decision_cost(st.task, a, sc.params, st.current_upload_rate);
        traj.steps.push_back({st, a, reward(base, chosen, sc.params)});
        if (a != OffloadDecision::Local) ++offloaded;
    }
    offloaders_out = offloaded;
    return traj;
}

// Gradient of the mean log-likelihood of fixed target decisions under the
// softmax policy; shares the score-function form with policy_gradient.
inline std::vector<double> imitation_gradient(const std::vector<State>& states,
                                              const std::vector<OffloadDecision>& targets,
                                              const PolicyParams& theta, const FeatureScaling& fs) {
    if (states.size() != targets.size() || states.empty())
        throw std::invalid_argument("imitation_gradient: states/targets mismatch");
    std::vector<double> grad(kFeatureDim, 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto probs = action_probabilities(theta, states[i], fs);
        const auto base = base_features(states[i], fs);
        const int target = action_index(targets[i]);
        for (int a = 0; a < kNumActions; ++a) {
            const double w = ((a == target) ? 1.0 : 0.0) - probs[a];
            for (int k = 0; k < kBaseFeatures; ++k) grad[a * kBaseFeatures + k] += w * base[k];
        }
    }
    for (double& g : grad) g /= static_cast<double>(states.size());
    return grad;
}

inline std::vector<State> canonical_states(const Scenario& sc, double rate) {
    std::vector<State> states;
    states.reserve(sc.tasks.size());
    for (std::size_t i = 0; i < sc.tasks.size(); ++i) {
        State st;
        st.task = sc.tasks[i];
        st.current_upload_rate = rate;
        st.pending_count = static_cast<int>(sc.tasks.size() - i);
        states.push_back(st);
    }
    return states;
}

} // namespace detail

// Total cross-entropy of target decisions under the policy (natural log);
// N * ln(3) for uniform theta = 0.
inline double imitation_loss(const std::vector<State>& states,
                             const std::vector<OffloadDecision>& targets,
                             const PolicyParams& theta, const FeatureScaling& fs) {
    double loss = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto probs = action_probabilities(theta, states[i], fs);
        loss -= std::log(probs[action_index(targets[i])]);
    }
    return loss;
}

// Solves the assignment problem once and fits theta by gradient ascent on
// the log-likelihood of the rounded plan decisions (fixed 200 steps). If the
// transport solve does not converge the policy falls back to zeros and the
// result carries ot_converged = false.
inline OfflineResult offline_train(const Scenario& sc, const TrainConfig& cfg,
                                   const FeatureScaling& fs = {}) {
    validate(cfg);
    if (sc.tasks.empty()) throw std::invalid_argument("offline_train: empty scenario");
    const auto nodes = default_nodes(sc.params);
    const double rate = upload_rate(sc.params, static_cast<int>(sc.tasks.size()));
    const auto problem = build_problem(sc.tasks, nodes, sc.params, rate, cfg.epsilon);
    const auto plan = sinkhorn(problem, cfg.max_sinkhorn_iter, cfg.tolerance);
    OfflineResult out{PolicyParams::zeros(), plan.converged};
    if (!plan.converged) return out;

    const auto targets = plan_to_decisions(plan, problem, nodes);
    const auto states = detail::canonical_states(sc, rate);
    for (int step = 0; step < 200; ++step) {
        const auto grad = detail::imitation_gradient(states, targets, out.theta, fs);
        out.theta = gradient_step(out.theta, grad, cfg.learning_rate, cfg.grad_clip);
    }
    return out;
}

// Hybrid training loop. Each iteration anneals the loss weights, rolls out a
// batch of episodes with the current policy, refreshes the node-side mass
// from the realized decisions (blended 50/50 with the capacity prior),
// re-solves the transport problem, and ascends the weighted sum of the
// imitation gradient toward the plan and the score-function gradient of the
// batch. Passing disable_ot forces lambda1 to zero, which is the plain
// policy-gradient baseline; the transport cost is still solved and recorded
// so traces stay comparable row for row.
inline TrainResult train(const Scenario& sc, const TrainConfig& cfg,
                         const AnnealingSchedule& schedule, const FeatureScaling& fs = {},
                         bool disable_ot = false) {
    validate(cfg);
    validate(schedule);
    if (sc.tasks.empty()) throw std::invalid_argument("train: empty scenario");

    const auto nodes = default_nodes(sc.params);
    const std::size_t n = sc.tasks.size();
    double capacity_total = 0;
    for (const auto& node : nodes) capacity_total += node.capacity_weight;

    TrainResult result;
    result.theta = PolicyParams::zeros();
    result.trace.reserve(static_cast<std::size_t>(cfg.max_iter));
    Rng rng(cfg.seed);
    // Concurrency assumption for the first episode: everyone offloads, the
    // same starting point the evaluator uses.
    int concurrency = static_cast<int>(n);

    for (int it = 1; it <= cfg.max_iter; ++it) {
        auto [l1, l2] = annealing_scheme(it, schedule, cfg.max_iter);
        if (disable_ot) l1 = 0.0;

        std::vector<Trajectory> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_episodes));
        std::array<double, kNumActions> occupancy{};
        long offload_steps = 0;
        for (int e = 0; e < cfg.batch_episodes; ++e) {
            const double episode_rate = upload_rate(sc.params, std::max(1, concurrency));
            batch.push_back(detail::rollout_episode(sc, result.theta, fs, cfg.discount,
                                                    episode_rate, rng, concurrency));
            for (const auto& step : batch.back().steps) {
                occupancy[static_cast<std::size_t>(action_index(step.action))] += 1.0;
                if (step.action != OffloadDecision::Local) ++offload_steps;
            }
        }
        const double total_steps = static_cast<double>(n) * cfg.batch_episodes;
        const double avg_reward_batch = average_reward(batch);

        // The objective is an average-reward one, so the score-function term
        // uses differential returns: rewards centered by the batch mean.
        // Uncentered returns inflate whichever action block is sampled and
        // saturate the softmax long before the per-task split is learned.
        std::vector<Trajectory> centered = batch;
        for (auto& traj : centered)
            for (auto& step : traj.steps) step.reward -= avg_reward_batch;

        // Node-side mass: capacity prior blended with realized occupancy.
        auto blended_nodes = nodes;
        for (std::size_t j = 0; j < blended_nodes.size(); ++j)
            blended_nodes[j].capacity_weight =
                0.5 * (nodes[j].capacity_weight / capacity_total) + 0.5 * (occupancy[j] / total_steps);

        const int offloaders =
            std::max(1, static_cast<int>(std::llround(static_cast<double>(offload_steps) /
                                                      cfg.batch_episodes)));
        const double rate = upload_rate(sc.params, offloaders);
        const auto problem = build_problem(sc.tasks, blended_nodes, sc.params, rate, cfg.epsilon);
        const auto plan = sinkhorn(problem, cfg.max_sinkhorn_iter, cfg.tolerance);
        const double ot_cost = primal_cost(plan, problem);

        std::vector<double> grad = policy_gradient(centered, result.theta, fs);
        for (double& g : grad) g *= l2;
        if (!disable_ot && l1 > 0.0) {
            const auto targets = plan_to_decisions(plan, problem, nodes);
            const auto states = detail::canonical_states(sc, rate);
            const auto imit = detail::imitation_gradient(states, targets, result.theta, fs);
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += l1 * imit[k];
        }
        result.theta = gradient_step(result.theta, grad, cfg.learning_rate, cfg.grad_clip);

        const double loss = joint_loss(ot_cost, avg_reward_batch, l1, l2);
        if (!std::isfinite(loss))
            throw std::runtime_error("train: non-finite joint loss at iteration " +
                                     std::to_string(it));
        result.trace.push_back({it, l1, l2, ot_cost, avg_reward_batch, loss});
    }
    return result;
}

} // namespace offsim
