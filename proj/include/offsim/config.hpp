#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "offsim/evaluate.hpp"

namespace offsim {

using Json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known)
            throw ConfigError("config: unknown key '" + where + it.key() + "'");
    }
}

inline double get_number(const Json& obj, const std::string& where, const char* key,
                         double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError("config: '" + where + key + "' must be a number");
    return v.get<double>();
}

inline int get_int(const Json& obj, const std::string& where, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw ConfigError("config: '" + where + key + "' must be an integer");
    return v.get<int>();
}

inline std::uint64_t get_u64(const Json& obj, const std::string& where, const char* key,
                             std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError("config: '" + where + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::pair<double, double> get_range(const Json& obj, const std::string& where,
                                           const char* key, std::pair<double, double> fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("config: '" + where + key + "' must be a [lo, hi] number pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline SystemParams parse_params(const Json& obj, const std::string& where, SystemParams p) {
    reject_unknown_keys(obj, where,
                        {"bandwidth_hz", "num_channels", "tx_power_w", "compute_power_w",
                         "idle_power_w", "channel_gain", "noise_psd_w_per_hz", "f_end_hz",
                         "f_edge_hz", "f_cloud_hz", "backhaul_rate_bps", "weight_delay",
                         "weight_energy"});
    p.bandwidth_hz = get_number(obj, where, "bandwidth_hz", p.bandwidth_hz);
    p.num_channels = get_int(obj, where, "num_channels", p.num_channels);
    p.tx_power_w = get_number(obj, where, "tx_power_w", p.tx_power_w);
    p.compute_power_w = get_number(obj, where, "compute_power_w", p.compute_power_w);
    p.idle_power_w = get_number(obj, where, "idle_power_w", p.idle_power_w);
    p.channel_gain = get_number(obj, where, "channel_gain", p.channel_gain);
    p.noise_psd_w_per_hz = get_number(obj, where, "noise_psd_w_per_hz", p.noise_psd_w_per_hz);
    p.f_end_hz = get_number(obj, where, "f_end_hz", p.f_end_hz);
    p.f_edge_hz = get_number(obj, where, "f_edge_hz", p.f_edge_hz);
    p.f_cloud_hz = get_number(obj, where, "f_cloud_hz", p.f_cloud_hz);
    p.backhaul_rate_bps = get_number(obj, where, "backhaul_rate_bps", p.backhaul_rate_bps);
    p.weight_delay = get_number(obj, where, "weight_delay", p.weight_delay);
    p.weight_energy = get_number(obj, where, "weight_energy", p.weight_energy);
    return p;
}

inline ScenarioConfig parse_scenario(const Json& obj, ScenarioConfig c) {
    const std::string where = "scenario.";
    reject_unknown_keys(obj, where,
                        {"num_eds", "data_size_kb", "cycles_gcycles", "cycles_per_bit", "seed",
                         "params"});
    c.num_eds = get_int(obj, where, "num_eds", c.num_eds);
    std::tie(c.data_size_kb_lo, c.data_size_kb_hi) =
        get_range(obj, where, "data_size_kb", {c.data_size_kb_lo, c.data_size_kb_hi});
    if (obj.contains("cycles_gcycles") && obj.contains("cycles_per_bit"))
        throw ConfigError("config: 'scenario.cycles_gcycles' and 'scenario.cycles_per_bit' are exclusive");
    if (obj.contains("cycles_gcycles")) {
        c.cycles_mode = CyclesMode::Gcycles;
        std::tie(c.gcycles_lo, c.gcycles_hi) =
            get_range(obj, where, "cycles_gcycles", {c.gcycles_lo, c.gcycles_hi});
    } else if (obj.contains("cycles_per_bit")) {
        c.cycles_mode = CyclesMode::PerBit;
        c.cycles_per_bit = get_number(obj, where, "cycles_per_bit", c.cycles_per_bit);
    }
    c.seed = get_u64(obj, where, "seed", c.seed);
    if (obj.contains("params")) {
        if (!obj.at("params").is_object())
            throw ConfigError("config: 'scenario.params' must be an object");
        c.params = parse_params(obj.at("params"), where + "params.", c.params);
    }
    return c;
}

inline TrainConfig parse_train(const Json& obj, TrainConfig c) {
    const std::string where = "train.";
    reject_unknown_keys(obj, where,
                        {"max_iter", "batch_episodes", "epsilon", "tolerance",
                         "max_sinkhorn_iter", "learning_rate", "discount", "grad_clip", "seed"});
    c.max_iter = get_int(obj, where, "max_iter", c.max_iter);
    c.batch_episodes = get_int(obj, where, "batch_episodes", c.batch_episodes);
    c.epsilon = get_number(obj, where, "epsilon", c.epsilon);
    c.tolerance = get_number(obj, where, "tolerance", c.tolerance);
    c.max_sinkhorn_iter = get_int(obj, where, "max_sinkhorn_iter", c.max_sinkhorn_iter);
    c.learning_rate = get_number(obj, where, "learning_rate", c.learning_rate);
    c.discount = get_number(obj, where, "discount", c.discount);
    c.grad_clip = get_number(obj, where, "grad_clip", c.grad_clip);
    c.seed = get_u64(obj, where, "seed", c.seed);
    return c;
}

inline AnnealingSchedule parse_anneal(const Json& obj, AnnealingSchedule s) {
    const std::string where = "anneal.";
    reject_unknown_keys(obj, where, {"lambda1", "lambda2", "phase_fractions", "mode"});
    std::tie(s.lambda1_start, s.lambda1_end) =
        get_range(obj, where, "lambda1", {s.lambda1_start, s.lambda1_end});
    std::tie(s.lambda2_start, s.lambda2_end) =
        get_range(obj, where, "lambda2", {s.lambda2_start, s.lambda2_end});
    if (obj.contains("phase_fractions")) {
        const auto& v = obj.at("phase_fractions");
        if (!v.is_array() || v.size() != 3)
            throw ConfigError("config: 'anneal.phase_fractions' must be three fractions");
        for (std::size_t k = 0; k < 3; ++k) {
            if (!v[k].is_number())
                throw ConfigError("config: 'anneal.phase_fractions' must be three fractions");
            s.phase_fractions[k] = v[k].get<double>();
        }
    }
    if (obj.contains("mode")) {
        const auto& v = obj.at("mode");
        if (!v.is_string())
            throw ConfigError("config: 'anneal.mode' must be \"linear\" or \"exponential\"");
        const std::string m = v.get<std::string>();
        if (m == "linear")
            s.mode = AnnealingSchedule::Mode::Linear;
        else if (m == "exponential")
            s.mode = AnnealingSchedule::Mode::Exponential;
        else
            throw ConfigError("config: 'anneal.mode' must be \"linear\" or \"exponential\"");
    }
    return s;
}

inline FeatureScaling parse_features(const Json& obj, FeatureScaling f) {
    const std::string where = "features.";
    reject_unknown_keys(obj, where, {"size_log", "cycles_log", "rate_log", "pending_span"});
    std::tie(f.size_log_offset, f.size_log_span) =
        get_range(obj, where, "size_log", {f.size_log_offset, f.size_log_span});
    std::tie(f.cycles_log_offset, f.cycles_log_span) =
        get_range(obj, where, "cycles_log", {f.cycles_log_offset, f.cycles_log_span});
    std::tie(f.rate_log_offset, f.rate_log_span) =
        get_range(obj, where, "rate_log", {f.rate_log_offset, f.rate_log_span});
    f.pending_span = get_number(obj, where, "pending_span", f.pending_span);
    return f;
}

inline SweepSpec parse_sweep(const Json& obj, SweepSpec s) {
    const std::string where = "sweep.";
    reject_unknown_keys(obj, where, {"axis", "points", "repetitions", "algorithms"});
    if (obj.contains("axis")) {
        if (!obj.at("axis").is_string())
            throw ConfigError("config: 'sweep.axis' must be a string");
        s.axis = parse_axis(obj.at("axis").get<std::string>());
    }
    if (obj.contains("points")) {
        const auto& v = obj.at("points");
        if (!v.is_array() || v.empty())
            throw ConfigError("config: 'sweep.points' must be a non-empty array of numbers");
        s.points.clear();
        for (const auto& p : v) {
            if (!p.is_number())
                throw ConfigError("config: 'sweep.points' must be a non-empty array of numbers");
            s.points.push_back(p.get<double>());
        }
    }
    s.repetitions = get_int(obj, where, "repetitions", s.repetitions);
    if (obj.contains("algorithms")) {
        const auto& v = obj.at("algorithms");
        if (!v.is_array() || v.empty())
            throw ConfigError("config: 'sweep.algorithms' must be a non-empty array of names");
        s.algorithms.clear();
        for (const auto& a : v) {
            if (!a.is_string())
                throw ConfigError("config: 'sweep.algorithms' must be a non-empty array of names");
            s.algorithms.push_back(parse_algorithm(a.get<std::string>()));
        }
    }
    return s;
}

} // namespace detail

// Full harness configuration; every section is optional and falls back to
// the documented defaults.
struct HarnessConfig {
    ExperimentConfig experiment;
    SweepSpec sweep;
};

inline HarnessConfig parse_config(const Json& root) {
    if (!root.is_object())
        throw ConfigError("config: top level must be an object");
    detail::reject_unknown_keys(root, "", {"scenario", "train", "anneal", "features", "sweep"});
    HarnessConfig cfg;
    auto section = [&](const char* key) -> const Json* {
        if (!root.contains(key)) return nullptr;
        if (!root.at(key).is_object())
            throw ConfigError(std::string("config: '") + key + "' must be an object");
        return &root.at(key);
    };
    if (const Json* s = section("scenario"))
        cfg.experiment.scenario = detail::parse_scenario(*s, cfg.experiment.scenario);
    if (const Json* s = section("train"))
        cfg.experiment.train = detail::parse_train(*s, cfg.experiment.train);
    if (const Json* s = section("anneal"))
        cfg.experiment.anneal = detail::parse_anneal(*s, cfg.experiment.anneal);
    if (const Json* s = section("features"))
        cfg.experiment.features = detail::parse_features(*s, cfg.experiment.features);
    if (const Json* s = section("sweep")) {
        cfg.sweep = detail::parse_sweep(*s, cfg.sweep);
        validate(cfg.sweep);  // a config without a sweep section is fine until one is run
    }
    validate(cfg.experiment.scenario);
    validate(cfg.experiment.train);
    validate(cfg.experiment.anneal);
    return cfg;
}

inline HarnessConfig parse_config_text(const std::string& text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(root);
}

inline HarnessConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// Checkpoint format: {"feature_dim": int, "theta": [floats]}.
inline Json checkpoint_to_json(const PolicyParams& p) {
    validate(p);
    Json out;
    out["feature_dim"] = p.feature_dim;
    out["theta"] = p.theta;
    return out;
}

inline PolicyParams checkpoint_from_json(const Json& obj) {
    if (!obj.is_object() || !obj.contains("feature_dim") || !obj.contains("theta"))
        throw ConfigError("checkpoint: expected {\"feature_dim\": int, \"theta\": [floats]}");
    detail::reject_unknown_keys(obj, "checkpoint.", {"feature_dim", "theta"});
    PolicyParams p;
    p.feature_dim = obj.at("feature_dim").get<int>();
    p.theta = obj.at("theta").get<std::vector<double>>();
    validate(p);
    return p;
}

inline void save_checkpoint(const PolicyParams& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("checkpoint: cannot write '" + path + "'");
    out << checkpoint_to_json(p).dump(2) << '\n';
}

inline PolicyParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
    Json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    return checkpoint_from_json(obj);
}

} // namespace offsim
