#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "offsim/cost_model.hpp"
#include "offsim/rng.hpp"

namespace offsim {

inline constexpr double kBitsPerKb = 8192.0;  // 1 KB = 1024 bytes

// How task CPU demand is drawn: an explicit Gcycles range, or proportional
// to the payload via a cycles-per-bit factor.
enum class CyclesMode { Gcycles, PerBit };

struct ScenarioConfig {
    int num_eds = 100;  // one task per end device
    double data_size_kb_lo = 100.0;
    double data_size_kb_hi = 500.0;
    CyclesMode cycles_mode = CyclesMode::Gcycles;
    double gcycles_lo = 300.0;
    double gcycles_hi = 600.0;
    double cycles_per_bit = 200.0;
    SystemParams params = default_scenario_params();
    std::uint64_t seed = 1;

    // Library defaults describe a single device in a clean channel; the
    // simulated deployment uses the shared-band gain of a cell serving up
    // to a few hundred devices at long range, where the per-device rate is
    // only weakly coupled to how many devices offload.
    static SystemParams default_scenario_params() {
        SystemParams p;
        p.channel_gain = 3e-15;
        return p;
    }
};

inline void validate(const ScenarioConfig& c) {
    if (c.num_eds < 1)
        throw std::invalid_argument("scenario config: num_eds must be >= 1");
    if (!(c.data_size_kb_lo > 0.0) || c.data_size_kb_lo > c.data_size_kb_hi)
        throw std::invalid_argument("scenario config: data size range must satisfy 0 < lo <= hi");
    if (c.cycles_mode == CyclesMode::Gcycles) {
        if (!(c.gcycles_lo > 0.0) || c.gcycles_lo > c.gcycles_hi)
            throw std::invalid_argument("scenario config: gcycles range must satisfy 0 < lo <= hi");
    } else if (!(c.cycles_per_bit > 0.0)) {
        throw std::invalid_argument("scenario config: cycles_per_bit must be positive");
    }
    validate(c.params);
}

struct Scenario {
    std::vector<Task> tasks;
    SystemParams params;
    std::uint64_t seed = 0;
};

// Draws one task per end device. Each device uses its own substream, so a
// scenario with more devices extends a smaller one instead of reshuffling it.
inline Scenario generate_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    Scenario s;
    s.params = cfg.params;
    s.seed = cfg.seed;
    s.tasks.reserve(static_cast<std::size_t>(cfg.num_eds));
    for (int ed = 0; ed < cfg.num_eds; ++ed) {
        Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(ed)));
        Task t;
        t.id = static_cast<std::uint32_t>(ed);
        t.data_size_bits = rng.uniform(cfg.data_size_kb_lo, cfg.data_size_kb_hi) * kBitsPerKb;
        if (cfg.cycles_mode == CyclesMode::Gcycles)
            t.cycles_required = rng.uniform(cfg.gcycles_lo, cfg.gcycles_hi) * 1e9;
        else
            t.cycles_required = cfg.cycles_per_bit * t.data_size_bits;
        validate(t);
        s.tasks.push_back(t);
    }
    return s;
}

// FNV-1a over the bit patterns of every task and parameter; used by the
// fairness checks to prove all algorithms consumed the same scenario.
inline std::uint64_t scenario_hash(const Scenario& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix_bytes = [&h](const void* p, std::size_t n) {
        const unsigned char* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    };
    auto mix_double = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        mix_bytes(&bits, sizeof bits);
    };
    for (const auto& t : s.tasks) {
        mix_bytes(&t.id, sizeof t.id);
        mix_double(t.cycles_required);
        mix_double(t.data_size_bits);
    }
    const SystemParams& p = s.params;
    for (double v : {p.bandwidth_hz, static_cast<double>(p.num_channels), p.tx_power_w,
                     p.compute_power_w, p.idle_power_w, p.channel_gain, p.noise_psd_w_per_hz,
                     p.f_end_hz, p.f_edge_hz, p.f_cloud_hz, p.backhaul_rate_bps, p.weight_delay,
                     p.weight_energy})
        mix_double(v);
    return h;
}

} // namespace offsim
