#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "offsim/cost_model.hpp"
#include "offsim/rng.hpp"

namespace offsim {

inline constexpr int kNumActions = 3;
inline constexpr int kBaseFeatures = 5;
inline constexpr int kFeatureDim = kNumActions * kBaseFeatures;

inline constexpr std::array<OffloadDecision, kNumActions> kActionOrder = {
    OffloadDecision::Local, OffloadDecision::Edge, OffloadDecision::Cloud};

inline int action_index(OffloadDecision d) { return to_int(d) + 1; }

// What the learner observes before deciding one task.
struct State {
    Task task;
    double current_upload_rate = 0;  // bits/s seen if this task offloads now
    int pending_count = 0;           // tasks not yet decided in the episode
};

inline void validate(const State& s) {
    validate(s.task);
    if (!(s.current_upload_rate > 0.0))
        throw std::invalid_argument("state: current_upload_rate must be positive");
    if (s.pending_count < 0)
        throw std::invalid_argument("state: pending_count must be >= 0");
}

// Affine scalings of the log features, z = (log10(1 + x) - offset) / span.
// The offsets and spans are configuration: experiments normalize to the
// ranges their scenarios actually produce, since the softmax learns a
// within-scenario decision boundary whose sharpness is limited by the
// feature spread.
struct FeatureScaling {
    double size_log_offset = 4.5, size_log_span = 4.0;     // bits, covers ~3e4..3e8
    double cycles_log_offset = 9.0, cycles_log_span = 4.5; // cycles, covers ~1e9..3e13
    double rate_log_offset = 4.0, rate_log_span = 3.0;     // bits/s, covers ~1e4..1e7
    double pending_span = 200.0;
};

inline std::array<double, kBaseFeatures> base_features(const State& s, const FeatureScaling& fs) {
    auto log_scaled = [](double x, double offset, double span) {
        return (std::log10(1.0 + x) - offset) / span;
    };
    return {1.0,
            log_scaled(s.task.data_size_bits, fs.size_log_offset, fs.size_log_span),
            log_scaled(s.task.cycles_required, fs.cycles_log_offset, fs.cycles_log_span),
            log_scaled(s.current_upload_rate, fs.rate_log_offset, fs.rate_log_span),
            static_cast<double>(s.pending_count) / fs.pending_span};
}

// phi(s, a): the 5 base features placed in the block of the chosen action,
// zero elsewhere. Length kFeatureDim = 15.
inline std::vector<double> features(const State& s, OffloadDecision a, const FeatureScaling& fs) {
    std::vector<double> phi(kFeatureDim, 0.0);
    const auto base = base_features(s, fs);
    const int off = action_index(a) * kBaseFeatures;
    for (int k = 0; k < kBaseFeatures; ++k) phi[off + k] = base[k];
    return phi;
}

// The learnable weights of the softmax policy.
struct PolicyParams {
    std::vector<double> theta;
    int feature_dim = kFeatureDim;

    static PolicyParams zeros() { return {std::vector<double>(kFeatureDim, 0.0), kFeatureDim}; }
};

inline void validate(const PolicyParams& p) {
    if (p.feature_dim != static_cast<int>(p.theta.size()))
        throw std::invalid_argument("policy params: feature_dim does not match theta length");
    for (double v : p.theta)
        if (!std::isfinite(v)) throw std::invalid_argument("policy params: theta must be finite");
}

namespace detail {

// One dot product per action; exploits the block structure of phi.
inline std::array<double, kNumActions> logits(const PolicyParams& theta, const State& s,
                                              const FeatureScaling& fs) {
    if (theta.feature_dim != kFeatureDim || theta.theta.size() != kFeatureDim)
        throw std::invalid_argument("logits: theta has wrong dimension");
    const auto base = base_features(s, fs);
    std::array<double, kNumActions> out{};
    for (int a = 0; a < kNumActions; ++a) {
        double z = 0;
        for (int k = 0; k < kBaseFeatures; ++k) z += theta.theta[a * kBaseFeatures + k] * base[k];
        out[a] = z;
    }
    return out;
}

} // namespace detail

// softmax(phi(s, .) . theta), computed with max-logit subtraction.
inline std::array<double, kNumActions> action_probabilities(const PolicyParams& theta,
                                                            const State& s,
                                                            const FeatureScaling& fs) {
    const auto z = detail::logits(theta, s, fs);
    double zmax = z[0];
    for (double v : z) {
        if (!std::isfinite(v)) throw std::domain_error("action_probabilities: non-finite logit");
        zmax = std::max(zmax, v);
    }
    std::array<double, kNumActions> p{};
    double sum = 0;
    for (int a = 0; a < kNumActions; ++a) {
        p[a] = std::exp(z[a] - zmax);
        sum += p[a];
    }
    for (double& v : p) v /= sum;
    return p;
}

// Inverse-CDF draw over (Local, Edge, Cloud) in that fixed order.
inline OffloadDecision sample_action(const std::array<double, kNumActions>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0;
    for (int a = 0; a < kNumActions; ++a) {
        acc += probs[a];
        if (u < acc) return kActionOrder[a];
    }
    return kActionOrder[kNumActions - 1];
}

inline OffloadDecision argmax_action(const std::array<double, kNumActions>& probs) {
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
        if (probs[a] > probs[best]) best = a;
    return kActionOrder[best];
}

struct TrajectoryStep {
    State state;
    OffloadDecision action = OffloadDecision::Local;
    double reward = 0;
};

// One episode of decisions with the discount used for its returns.
struct Trajectory {
    std::vector<TrajectoryStep> steps;
    double discount = 0.9;
};

inline void validate(const Trajectory& t) {
    if (t.steps.empty())
        throw std::invalid_argument("trajectory: empty");
    if (!(t.discount >= 0.0) || !(t.discount < 1.0))
        throw std::invalid_argument("trajectory: discount must lie in [0, 1)");
    for (const auto& s : t.steps)
        if (!std::isfinite(s.reward) || s.reward > 1.0 + 1e-12)
            throw std::invalid_argument("trajectory: rewards must be finite and <= 1");
}

namespace detail {

// Ops only require a usable trajectory; the reward bound above is the
// invariant of rollouts, not of the centered pseudo-trajectories the
// trainer differentiates through.
inline void check_usable(const Trajectory& t) {
    if (t.steps.empty())
        throw std::invalid_argument("trajectory: empty");
    if (!(t.discount >= 0.0) || !(t.discount < 1.0))
        throw std::invalid_argument("trajectory: discount must lie in [0, 1)");
    for (const auto& s : t.steps)
        if (!std::isfinite(s.reward))
            throw std::invalid_argument("trajectory: rewards must be finite");
}

} // namespace detail

// Discounted return per step, Q_t = r_t + gamma * Q_{t+1}.
inline std::vector<double> q_estimates(const Trajectory& traj) {
    detail::check_usable(traj);
    std::vector<double> q(traj.steps.size());
    double acc = 0;
    for (std::size_t k = traj.steps.size(); k-- > 0;) {
        acc = traj.steps[k].reward + traj.discount * acc;
        q[k] = acc;
    }
    return q;
}

// Mean per-step reward across the whole batch.
inline double average_reward(const std::vector<Trajectory>& batch) {
    if (batch.empty())
        throw std::invalid_argument("average_reward: empty batch");
    double sum = 0;
    std::size_t count = 0;
    for (const auto& traj : batch) {
        detail::check_usable(traj);
        for (const auto& step : traj.steps) sum += step.reward;
        count += traj.steps.size();
    }
    return sum / static_cast<double>(count);
}

// Score-function gradient of the average return:
// (1/steps) * sum over steps of (phi(s,a) - E_{b~pi}[phi(s,b)]) * Q(s,a).
inline std::vector<double> policy_gradient(const std::vector<Trajectory>& batch,
                                           const PolicyParams& theta, const FeatureScaling& fs) {
    if (batch.empty())
        throw std::invalid_argument("policy_gradient: empty batch");
    validate(theta);
    std::vector<double> grad(kFeatureDim, 0.0);
    std::size_t total_steps = 0;
    for (const auto& traj : batch) {
        const auto q = q_estimates(traj);
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& step = traj.steps[t];
            const auto probs = action_probabilities(theta, step.state, fs);
            const auto base = base_features(step.state, fs);
            const int taken = action_index(step.action);
            for (int a = 0; a < kNumActions; ++a) {
                const double w = ((a == taken) ? 1.0 : 0.0) - probs[a];
                for (int k = 0; k < kBaseFeatures; ++k)
                    grad[a * kBaseFeatures + k] += w * base[k] * q[t];
            }
            ++total_steps;
        }
    }
    for (double& g : grad) g /= static_cast<double>(total_steps);
    return grad;
}

// Ascent step theta + lr * grad, with an optional L2 clip of the gradient.
// Pass clip_norm <= 0 to disable clipping.
inline PolicyParams gradient_step(const PolicyParams& theta, const std::vector<double>& grad,
                                  double learning_rate, double clip_norm = 0.0) {
    if (grad.size() != theta.theta.size())
        throw std::invalid_argument("gradient_step: gradient shape mismatch");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("gradient_step: learning_rate must be positive");
    double scale = 1.0;
    if (clip_norm > 0.0) {
        double norm = 0;
        for (double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm > clip_norm) scale = clip_norm / norm;
    }
    PolicyParams out = theta;
    for (std::size_t k = 0; k < grad.size(); ++k) {
        out.theta[k] += learning_rate * scale * grad[k];
        if (!std::isfinite(out.theta[k]))
            throw std::domain_error("gradient_step: update produced non-finite parameters");
    }
    return out;
}

} // namespace offsim
