#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "offsim/baselines.hpp"
#include "offsim/policy.hpp"
#include "offsim/scenario.hpp"
#include "offsim/trainer.hpp"

namespace offsim {

enum class Algorithm { Otrl, PlainRl, Greedy, Random };

inline const char* to_string(Algorithm a) {
    switch (a) {
    case Algorithm::Otrl: return "otrl";
    case Algorithm::PlainRl: return "plainrl";
    case Algorithm::Greedy: return "greedy";
    case Algorithm::Random: return "random";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& name) {
    if (name == "otrl") return Algorithm::Otrl;
    if (name == "plainrl") return Algorithm::PlainRl;
    if (name == "greedy") return Algorithm::Greedy;
    if (name == "random") return Algorithm::Random;
    throw std::invalid_argument("unknown algorithm '" + name + "' (expected otrl, plainrl, greedy or random)");
}

// Aggregate metrics of one algorithm run over one scenario.
struct EvalResult {
    double avg_cost = 0;      // mean normalized cost, Local == 1
    double avg_delay_s = 0;
    double avg_energy_j = 0;
    double offload_ratio = 0; // fraction of tasks not executed locally
    bool stable = true;       // decision/rate fixed point settled within the pass budget
    int passes_used = 0;
    double final_upload_rate = 0;
    std::vector<OffloadDecision> decisions;
};

// Decides task i given the state it would see at the current shared rate.
using DecisionRule = std::function<OffloadDecision(const State&, std::size_t)>;

// Runs every task through the rule, then re-derives the shared upload rate
// from how many tasks actually offloaded and repeats until the decisions
// stop changing (at most max_passes). The first pass prices the band as if
// every device offloads. Metrics are computed at the rate implied by the
// final decisions, so a stable fixed point is self-consistent.
inline EvalResult evaluate_rule(const Scenario& sc, const DecisionRule& rule, int max_passes = 5) {
    if (sc.tasks.empty()) throw std::invalid_argument("evaluate: empty scenario");
    if (max_passes < 1) throw std::invalid_argument("evaluate: max_passes must be >= 1");
    const std::size_t n = sc.tasks.size();

    std::vector<OffloadDecision> decisions(n, OffloadDecision::Local);
    int offloaders = static_cast<int>(n);
    EvalResult out;
    out.stable = false;
    for (int pass = 0; pass < max_passes; ++pass) {
        const double rate = upload_rate(sc.params, std::max(1, offloaders));
        std::vector<OffloadDecision> next(n);
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            State st;
            st.task = sc.tasks[i];
            st.current_upload_rate = rate;
            st.pending_count = static_cast<int>(n - i);
            next[i] = rule(st, i);
            if (next[i] != OffloadDecision::Local) ++count;
        }
        out.passes_used = pass + 1;
        const bool same = (pass > 0 && next == decisions);
        decisions = std::move(next);
        offloaders = count;
        if (same) {
            out.stable = true;
            break;
        }
    }

    const double rate = upload_rate(sc.params, std::max(1, offloaders));
    double cost = 0, delay = 0, energy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const CostBreakdown cb = decision_cost(sc.tasks[i], decisions[i], sc.params, rate);
        cost += cb.normalized_cost;
        delay += cb.delay_s;
        energy += cb.energy_j;
    }
    out.avg_cost = cost / static_cast<double>(n);
    out.avg_delay_s = delay / static_cast<double>(n);
    out.avg_energy_j = energy / static_cast<double>(n);
    out.offload_ratio = static_cast<double>(offloaders) / static_cast<double>(n);
    out.final_upload_rate = rate;
    out.decisions = std::move(decisions);
    return out;
}

// Learned policies are evaluated by their argmax decision, not by sampling.
inline EvalResult evaluate_policy(const Scenario& sc, const PolicyParams& theta,
                                  const FeatureScaling& fs = {}, int max_passes = 5) {
    validate(theta);
    return evaluate_rule(
        sc,
        [&](const State& st, std::size_t) {
            return argmax_action(action_probabilities(theta, st, fs));
        },
        max_passes);
}

inline EvalResult evaluate_greedy(const Scenario& sc, int max_passes = 5) {
    return evaluate_rule(
        sc,
        [&](const State& st, std::size_t) {
            return greedy_decide(st.task, sc.params, st.current_upload_rate);
        },
        max_passes);
}

// Random decisions are drawn once per task so the fixed point is trivially
// stable; the draw stream depends only on the seed and the task order.
inline EvalResult evaluate_random(const Scenario& sc, std::uint64_t seed, int max_passes = 5) {
    Rng rng(substream_seed(seed, 0x72616e646f6dull));
    std::vector<OffloadDecision> drawn;
    drawn.reserve(sc.tasks.size());
    for (const auto& t : sc.tasks) drawn.push_back(random_decide(t, rng));
    return evaluate_rule(
        sc, [&](const State&, std::size_t i) { return drawn[i]; }, max_passes);
}

// Everything needed to run one experiment cell end to end.
struct ExperimentConfig {
    ScenarioConfig scenario;
    TrainConfig train;
    AnnealingSchedule anneal;
    FeatureScaling features;
};

// Trains the algorithm if it is a learned one, then evaluates it on the
// scenario. The training seed is derived from the scenario seed so a cell is
// fully determined by (config, algorithm).
inline EvalResult run_algorithm(Algorithm algo, const Scenario& sc, const ExperimentConfig& cfg) {
    switch (algo) {
    case Algorithm::Greedy: return evaluate_greedy(sc);
    case Algorithm::Random: return evaluate_random(sc, sc.seed);
    case Algorithm::Otrl: {
        TrainConfig tc = cfg.train;
        tc.seed = substream_seed(sc.seed, 0x6f74726cull);
        const auto trained = train(sc, tc, cfg.anneal, cfg.features);
        return evaluate_policy(sc, trained.theta, cfg.features);
    }
    case Algorithm::PlainRl: {
        TrainConfig tc = cfg.train;
        tc.seed = substream_seed(sc.seed, 0x6f74726cull);
        const auto trained = plain_rl_train(sc, tc, cfg.anneal, cfg.features);
        return evaluate_policy(sc, trained.theta, cfg.features);
    }
    }
    throw std::invalid_argument("run_algorithm: bad algorithm");
}

enum class SweepAxis { DataSizeKb, CpuGcycles, NumEds };

inline const char* to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::DataSizeKb: return "data_size_kb";
    case SweepAxis::CpuGcycles: return "cpu_gcycles";
    case SweepAxis::NumEds: return "num_eds";
    }
    return "?";
}

inline SweepAxis parse_axis(const std::string& name) {
    if (name == "data_size_kb") return SweepAxis::DataSizeKb;
    if (name == "cpu_gcycles") return SweepAxis::CpuGcycles;
    if (name == "num_eds") return SweepAxis::NumEds;
    throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

struct SweepSpec {
    SweepAxis axis = SweepAxis::DataSizeKb;
    std::vector<double> points;
    int repetitions = 10;  // seeds per point
    std::vector<Algorithm> algorithms = {Algorithm::Otrl, Algorithm::PlainRl, Algorithm::Greedy,
                                         Algorithm::Random};
};

inline void validate(const SweepSpec& s) {
    if (s.points.empty()) throw std::invalid_argument("sweep: no points");
    for (std::size_t k = 1; k < s.points.size(); ++k)
        if (!(s.points[k] > s.points[k - 1]))
            throw std::invalid_argument("sweep: points must be strictly increasing");
    if (s.repetitions < 1) throw std::invalid_argument("sweep: repetitions must be >= 1");
    if (s.algorithms.empty()) throw std::invalid_argument("sweep: no algorithms");
}

struct ResultRow {
    std::string algorithm;
    std::string axis;
    double axis_value = 0;
    std::uint64_t seed = 0;
    double avg_cost = 0;
    double avg_delay_s = 0;
    double avg_energy_j = 0;
    double offload_ratio = 0;
    std::string flag;  // empty, "unstable", or "error:<reason>"
};

namespace detail {

// The swept value replaces the matching scenario field; the sweep axis sets
// a degenerate (point) distribution for task attributes so the axis value is
// exact, matching how the reference experiments standardize the other factor.
inline ScenarioConfig apply_axis(ScenarioConfig base, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::DataSizeKb:
        base.data_size_kb_lo = base.data_size_kb_hi = value;
        break;
    case SweepAxis::CpuGcycles:
        base.cycles_mode = CyclesMode::Gcycles;
        base.gcycles_lo = base.gcycles_hi = value;
        break;
    case SweepAxis::NumEds:
        base.num_eds = static_cast<int>(value);
        break;
    }
    return base;
}

inline std::string sanitize_flag(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

} // namespace detail

// Runs every (point, seed, algorithm) cell, retraining learned algorithms
// per cell. Cell failures become rows flagged "error:<reason>" instead of
// aborting the sweep. Output order is point-major, then seed, then the
// configured algorithm order.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec, const ExperimentConfig& base) {
    validate(spec);
    std::vector<ResultRow> rows;
    rows.reserve(spec.points.size() * static_cast<std::size_t>(spec.repetitions) *
                 spec.algorithms.size());
    for (double point : spec.points) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            ScenarioConfig sc_cfg = detail::apply_axis(base.scenario, spec.axis, point);
            sc_cfg.seed = base.scenario.seed + static_cast<std::uint64_t>(rep);
            for (Algorithm algo : spec.algorithms) {
                ResultRow row;
                row.algorithm = to_string(algo);
                row.axis = to_string(spec.axis);
                row.axis_value = point;
                row.seed = sc_cfg.seed;
                try {
                    const Scenario sc = generate_scenario(sc_cfg);
                    const EvalResult r = run_algorithm(algo, sc, base);
                    row.avg_cost = r.avg_cost;
                    row.avg_delay_s = r.avg_delay_s;
                    row.avg_energy_j = r.avg_energy_j;
                    row.offload_ratio = r.offload_ratio;
                    if (!r.stable) row.flag = "unstable";
                } catch (const std::exception& e) {
                    row.flag = detail::sanitize_flag(std::string("error:") + e.what());
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

// Trains the hybrid learner and the plain policy-gradient baseline on the
// same scenario and seed and returns both traces, hybrid first.
inline std::vector<std::pair<std::string, TraceRow>> convergence_traces(
    const ExperimentConfig& cfg) {
    const Scenario sc = generate_scenario(cfg.scenario);
    TrainConfig tc = cfg.train;
    tc.seed = substream_seed(sc.seed, 0x6f74726cull);
    std::vector<std::pair<std::string, TraceRow>> rows;
    const auto otrl = train(sc, tc, cfg.anneal, cfg.features);
    for (const auto& r : otrl.trace) rows.emplace_back(to_string(Algorithm::Otrl), r);
    const auto plain = plain_rl_train(sc, tc, cfg.anneal, cfg.features);
    for (const auto& r : plain.trace) rows.emplace_back(to_string(Algorithm::PlainRl), r);
    return rows;
}

} // namespace offsim
