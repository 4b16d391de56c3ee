#include <doctest.h>

#include <cmath>

#include "offsim/cost_model.hpp"
#include "offsim/rng.hpp"

using namespace offsim;

namespace {

SystemParams reference_params() {
    SystemParams p;
    p.bandwidth_hz = 1e6;
    p.tx_power_w = 0.1;
    p.channel_gain = 1e-3;
    p.noise_psd_w_per_hz = 1e-19;
    return p;
}

SystemParams random_params(Rng& rng) {
    SystemParams p;
    p.bandwidth_hz = std::pow(10.0, rng.uniform(5.0, 8.0));
    p.tx_power_w = rng.uniform(0.05, 1.0);
    p.channel_gain = std::pow(10.0, rng.uniform(-15.0, -2.0));
    p.noise_psd_w_per_hz = std::pow(10.0, rng.uniform(-21.0, -18.0));
    p.f_end_hz = rng.uniform(0.5e9, 2e9);
    p.f_edge_hz = rng.uniform(0.5e10, 2e10);
    p.f_cloud_hz = rng.uniform(0.5e11, 2e11);
    p.backhaul_rate_bps = rng.uniform(1e7, 1e9);
    return p;
}

Task random_task(Rng& rng) {
    Task t;
    t.id = static_cast<std::uint32_t>(rng.next_u64() & 0xffff);
    t.cycles_required = std::pow(10.0, rng.uniform(8.0, 12.0));
    t.data_size_bits = std::pow(10.0, rng.uniform(5.0, 8.0));
    return t;
}

} // namespace

TEST_CASE("upload rate matches hand evaluation at SNR 1e9") {
    const SystemParams p = reference_params();
    // W'=1e6 Hz, P=0.1 W, G=1e-3, V=1e-19 -> SNR = 1e9
    const double rate = upload_rate(p, 1);
    CHECK(rate == doctest::Approx(2.99e7).epsilon(0.001));
    CHECK(rate == doctest::Approx(1e6 * std::log2(1.0 + 1e9)).epsilon(1e-12));
}

TEST_CASE("zero channel gain gives exactly zero rate") {
    SystemParams p = reference_params();
    p.channel_gain = 0.0;
    CHECK(upload_rate(p, 1) == 0.0);
}

TEST_CASE("upload rate strictly decreases with offloader count") {
    const SystemParams ref = reference_params();
    CHECK(upload_rate(ref, 2) < upload_rate(ref, 1));
    Rng rng(17);
    for (int k = 0; k < 200; ++k) {
        const SystemParams p = random_params(rng);
        const int count = 1 + static_cast<int>(rng.next_u64() % 100);
        CHECK(upload_rate(p, count + 1) < upload_rate(p, count));
    }
}

TEST_CASE("upload rate strictly increases with transmit power") {
    Rng rng(18);
    for (int k = 0; k < 200; ++k) {
        SystemParams p = random_params(rng);
        const int count = 1 + static_cast<int>(rng.next_u64() % 50);
        const double base = upload_rate(p, count);
        p.tx_power_w *= rng.uniform(1.1, 4.0);
        CHECK(upload_rate(p, count) > base);
    }
}

TEST_CASE("upload rate rejects bad inputs") {
    SystemParams p = reference_params();
    CHECK_THROWS_AS(upload_rate(p, 0), std::invalid_argument);
    p.channel_gain = 1e308;
    p.noise_psd_w_per_hz = 1e-308;
    CHECK_THROWS_AS(upload_rate(p, 1), std::invalid_argument);
}

TEST_CASE("local cost worked example") {
    SystemParams p;
    Task t{0, 1e10, 8e6};
    const CostBreakdown c = local_cost(t, p);
    CHECK(c.delay_s == doctest::Approx(10.0));
    CHECK(c.energy_j == doctest::Approx(5.0));
    CHECK(c.normalized_cost == 1.0);
}

TEST_CASE("local cost vanishes with the workload") {
    SystemParams p;
    Task t{0, 1e-6, 8e6};
    const CostBreakdown c = local_cost(t, p);
    CHECK(c.delay_s == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.energy_j == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("edge cost worked example") {
    SystemParams p;
    Task t{0, 1e10, 8e6};
    const CostBreakdown c = edge_cost(t, p, 8e6);
    CHECK(c.delay_s == doctest::Approx(2.0));
    CHECK(c.energy_j == doctest::Approx(0.15));
    CHECK_THROWS_AS(edge_cost(t, p, 0.0), std::invalid_argument);

    // Nothing to ship and nothing to compute costs nothing.
    const CostBreakdown tiny = edge_cost({0, 1e-6, 1e-6}, p, 8e6);
    CHECK(tiny.delay_s == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(tiny.energy_j == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cloud cost worked example and limits") {
    SystemParams p;
    p.backhaul_rate_bps = 8e7;
    Task t{0, 1e10, 8e6};
    const CostBreakdown c = cloud_cost(t, p, 8e6);
    CHECK(c.delay_s == doctest::Approx(1.2));
    CHECK(c.energy_j == doctest::Approx(0.11));

    SystemParams fast = p;
    fast.backhaul_rate_bps = 1e300;
    fast.f_cloud_hz = 1e300;
    const CostBreakdown l = cloud_cost(t, fast, 8e6);
    CHECK(l.delay_s == doctest::Approx(1.0));
    CHECK(l.energy_j == doctest::Approx(0.1));
}

TEST_CASE("decision cost routes and normalizes") {
    SystemParams p;
    p.backhaul_rate_bps = 8e7;
    Task t{0, 1e10, 8e6};

    const CostBreakdown local = decision_cost(t, OffloadDecision::Local, p, 8e6);
    CHECK(local.normalized_cost == p.weight_delay + p.weight_energy);
    CHECK(local.normalized_cost == 1.0);

    // Cloud: delays 1.2 vs 10 s, energies 0.11 vs 5 J at equal weights.
    const CostBreakdown cloud = decision_cost(t, OffloadDecision::Cloud, p, 8e6);
    CHECK(cloud.normalized_cost == doctest::Approx(0.071).epsilon(1e-9));

    // An offload with half the local delay and energy costs exactly 0.5.
    CostBreakdown half{5.0, 2.5, 0};
    CHECK(reward(local_cost(t, p), half, p) == doctest::Approx(0.5));
}

TEST_CASE("reward worked examples") {
    SystemParams p;
    const CostBreakdown local{10.0, 5.0, 1.0};
    CHECK(reward(local, local, p) == 0.0);
    CHECK(reward(local, {5.0, 2.5, 0}, p) == doctest::Approx(0.5));
    CHECK(reward(local, {20.0, 10.0, 0}, p) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(reward({0.0, 1.0, 0}, local, p), std::domain_error);
    CHECK_THROWS_AS(reward({1.0, 0.0, 0}, local, p), std::domain_error);
}

TEST_CASE("reward equals one minus normalized cost") {
    Rng rng(19);
    for (int k = 0; k < 300; ++k) {
        SystemParams p = random_params(rng);
        const double wd = rng.uniform(0.05, 0.95);
        p.weight_delay = wd;
        p.weight_energy = 1.0 - wd;
        const Task t = random_task(rng);
        const double rate = upload_rate(p, 1 + static_cast<int>(rng.next_u64() % 40));
        for (OffloadDecision d :
             {OffloadDecision::Local, OffloadDecision::Edge, OffloadDecision::Cloud}) {
            const CostBreakdown c = decision_cost(t, d, p, rate);
            const double r = reward(local_cost(t, p), c, p);
            CHECK(r == doctest::Approx(1.0 - c.normalized_cost).epsilon(1e-9));
        }
    }
}

TEST_CASE("delay and energy are nonnegative and scale linearly") {
    Rng rng(20);
    for (int k = 0; k < 200; ++k) {
        const SystemParams p = random_params(rng);
        const Task t = random_task(rng);
        const double rate = upload_rate(p, 1 + static_cast<int>(rng.next_u64() % 20));
        for (OffloadDecision d :
             {OffloadDecision::Local, OffloadDecision::Edge, OffloadDecision::Cloud}) {
            const CostBreakdown c = decision_cost(t, d, p, rate);
            CHECK(c.delay_s >= 0.0);
            CHECK(c.energy_j >= 0.0);
        }
        // Doubling cycles doubles the compute-delay part; with the payload
        // fixed the edge delay decomposes exactly.
        Task cyc = t;
        cyc.cycles_required *= 2.0;
        const double up = t.data_size_bits / rate;
        CHECK(edge_cost(cyc, p, rate).delay_s - up ==
              doctest::Approx(2.0 * (edge_cost(t, p, rate).delay_s - up)).epsilon(1e-12));
        // Doubling payload doubles the transmission part.
        Task pay = t;
        pay.data_size_bits *= 2.0;
        const double exec = t.cycles_required / p.f_edge_hz;
        CHECK(edge_cost(pay, p, rate).delay_s - exec ==
              doctest::Approx(2.0 * (edge_cost(t, p, rate).delay_s - exec)).epsilon(1e-12));
    }
}

TEST_CASE("reward is invariant under joint rescaling of delays and energies") {
    Rng rng(21);
    SystemParams p;
    for (int k = 0; k < 200; ++k) {
        const CostBreakdown local{rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0), 1.0};
        const CostBreakdown off{rng.uniform(0.01, 20.0), rng.uniform(0.01, 20.0), 0.0};
        const double kd = rng.uniform(0.1, 50.0), ke = rng.uniform(0.1, 50.0);
        const CostBreakdown local2{local.delay_s * kd, local.energy_j * ke, 1.0};
        const CostBreakdown off2{off.delay_s * kd, off.energy_j * ke, 0.0};
        CHECK(reward(local, off, p) == doctest::Approx(reward(local2, off2, p)).epsilon(1e-9));
    }
}

TEST_CASE("validation rejects bad params and tasks") {
    SystemParams p;
    CHECK_NOTHROW(validate(p));
    p.weight_delay = 0.4;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p = SystemParams{};
    p.bandwidth_hz = 0;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);

    Task t{0, 0.0, 1.0};
    CHECK_THROWS_AS(validate(t), std::invalid_argument);
    t = {0, 1.0, -1.0};
    CHECK_THROWS_AS(validate(t), std::invalid_argument);
}
