#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace offsim {

// Where a task executes. Serialized as -1 (end device), 0 (edge server),
// 1 (cloud server).
enum class OffloadDecision : int { Local = -1, Edge = 0, Cloud = 1 };

inline int to_int(OffloadDecision d) { return static_cast<int>(d); }

inline const char* to_string(OffloadDecision d) {
    switch (d) {
    case OffloadDecision::Local: return "local";
    case OffloadDecision::Edge: return "edge";
    case OffloadDecision::Cloud: return "cloud";
    }
    return "?";
}

// One offloadable unit of work.
struct Task {
    std::uint32_t id = 0;
    double cycles_required = 0;  // CPU cycles to finish the task
    double data_size_bits = 0;   // input payload that must be uploaded
};

inline void validate(const Task& t) {
    if (!(t.cycles_required > 0.0) || !std::isfinite(t.cycles_required))
        throw std::invalid_argument("task " + std::to_string(t.id) + ": cycles_required must be positive");
    if (!(t.data_size_bits > 0.0) || !std::isfinite(t.data_size_bits))
        throw std::invalid_argument("task " + std::to_string(t.id) + ": data_size_bits must be positive");
}

// Physical constants of the simulated cloud-edge-end system.
struct SystemParams {
    double bandwidth_hz = 50e6;        // total uplink bandwidth, shared equally by offloaders
    int num_channels = 50;
    double tx_power_w = 0.1;           // radio power while uploading
    double compute_power_w = 0.5;      // on-device compute power
    double idle_power_w = 0.05;        // device power while waiting on a remote node
    double channel_gain = 1e-3;        // dimensionless uplink gain
    double noise_psd_w_per_hz = 2e-21; // -100 dBm total noise across the 50 MHz band
    double f_end_hz = 1e9;             // device CPU speed, cycles/s
    double f_edge_hz = 1e10;           // edge server speed
    double f_cloud_hz = 1e11;          // cloud server speed
    double backhaul_rate_bps = 1e8;    // base station -> cloud transfer rate
    double weight_delay = 0.5;         // cost weight on delay
    double weight_energy = 0.5;        // cost weight on energy; weights sum to 1
};

inline void validate(const SystemParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("system params: ") + name + " must be positive");
    };
    positive(p.bandwidth_hz, "bandwidth_hz");
    positive(p.tx_power_w, "tx_power_w");
    positive(p.compute_power_w, "compute_power_w");
    positive(p.idle_power_w, "idle_power_w");
    positive(p.noise_psd_w_per_hz, "noise_psd_w_per_hz");
    positive(p.f_end_hz, "f_end_hz");
    positive(p.f_edge_hz, "f_edge_hz");
    positive(p.f_cloud_hz, "f_cloud_hz");
    positive(p.backhaul_rate_bps, "backhaul_rate_bps");
    if (p.num_channels < 1)
        throw std::invalid_argument("system params: num_channels must be >= 1");
    if (p.channel_gain < 0.0 || !std::isfinite(p.channel_gain))
        throw std::invalid_argument("system params: channel_gain must be >= 0");
    if (p.weight_delay < 0.0 || p.weight_energy < 0.0)
        throw std::invalid_argument("system params: cost weights must be >= 0");
    if (std::abs(p.weight_delay + p.weight_energy - 1.0) > 1e-12)
        throw std::invalid_argument("system params: weight_delay + weight_energy must equal 1");
}

// Delay, energy and the dimensionless weighted cost of one placement.
// normalized_cost = wd * delay/local_delay + we * energy/local_energy,
// so executing locally costs exactly wd + we = 1.
struct CostBreakdown {
    double delay_s = 0;
    double energy_j = 0;
    double normalized_cost = 0;
};

// Uplink rate seen by one offloading device when `offloader_count` devices
// share the band equally: W' * log2(1 + P*G / (W'*V)) with W' = W/count.
inline double upload_rate(const SystemParams& p, int offloader_count) {
    if (offloader_count < 1)
        throw std::invalid_argument("upload_rate: offloader_count must be >= 1");
    const double w = p.bandwidth_hz / static_cast<double>(offloader_count);
    const double snr = p.tx_power_w * p.channel_gain / (w * p.noise_psd_w_per_hz);
    if (!std::isfinite(snr))
        throw std::invalid_argument("upload_rate: SNR is not finite; check powers, gain and noise");
    const double rate = w * std::log2(1.0 + snr);
    if (!std::isfinite(rate))
        throw std::invalid_argument("upload_rate: rate overflowed");
    return rate;
}

// Run on the device itself: delay c/f_end, energy P_compute * delay.
inline CostBreakdown local_cost(const Task& t, const SystemParams& p) {
    const double delay = t.cycles_required / p.f_end_hz;
    return {delay, p.compute_power_w * delay, p.weight_delay + p.weight_energy};
}

// Upload to the edge server and execute there. The device transmits at
// tx power for the upload and idles while the edge computes.
inline CostBreakdown edge_cost(const Task& t, const SystemParams& p, double upload_rate_bps) {
    if (!(upload_rate_bps > 0.0))
        throw std::invalid_argument("edge_cost: upload rate must be positive");
    const double t_up = t.data_size_bits / upload_rate_bps;
    const double t_exec = t.cycles_required / p.f_edge_hz;
    CostBreakdown c;
    c.delay_s = t_up + t_exec;
    c.energy_j = p.tx_power_w * t_up + p.idle_power_w * t_exec;
    const CostBreakdown base = local_cost(t, p);
    c.normalized_cost = p.weight_delay * c.delay_s / base.delay_s +
                        p.weight_energy * c.energy_j / base.energy_j;
    return c;
}

// Upload to the base station, forward over the backhaul, execute in the
// cloud. The device idles during backhaul transfer and cloud execution.
inline CostBreakdown cloud_cost(const Task& t, const SystemParams& p, double upload_rate_bps) {
    if (!(upload_rate_bps > 0.0))
        throw std::invalid_argument("cloud_cost: upload rate must be positive");
    if (!(p.backhaul_rate_bps > 0.0))
        throw std::invalid_argument("cloud_cost: backhaul rate must be positive");
    const double t_up = t.data_size_bits / upload_rate_bps;
    const double t_remote = t.data_size_bits / p.backhaul_rate_bps + t.cycles_required / p.f_cloud_hz;
    CostBreakdown c;
    c.delay_s = t_up + t_remote;
    c.energy_j = p.tx_power_w * t_up + p.idle_power_w * t_remote;
    const CostBreakdown base = local_cost(t, p);
    c.normalized_cost = p.weight_delay * c.delay_s / base.delay_s +
                        p.weight_energy * c.energy_j / base.energy_j;
    return c;
}

inline CostBreakdown decision_cost(const Task& t, OffloadDecision d, const SystemParams& p,
                                   double upload_rate_bps) {
    switch (d) {
    case OffloadDecision::Local: return local_cost(t, p);
    case OffloadDecision::Edge: return edge_cost(t, p, upload_rate_bps);
    case OffloadDecision::Cloud: return cloud_cost(t, p, upload_rate_bps);
    }
    throw std::invalid_argument("decision_cost: bad decision");
}

// Per-task reward of offloading relative to local execution:
// wd * (T_local - T_off)/T_local + we * (E_local - E_off)/E_local.
// Bounded above by wd + we = 1; may be arbitrarily negative.
inline double reward(const CostBreakdown& local, const CostBreakdown& offloaded,
                     const SystemParams& p) {
    if (!(local.delay_s > 0.0) || !(local.energy_j > 0.0))
        throw std::domain_error("reward: local delay and energy must be positive");
    return p.weight_delay * (local.delay_s - offloaded.delay_s) / local.delay_s +
           p.weight_energy * (local.energy_j - offloaded.energy_j) / local.energy_j;
}

} // namespace offsim
