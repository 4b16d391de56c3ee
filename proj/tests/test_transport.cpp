#include <doctest.h>

#include <cmath>
#include <vector>

#include "offsim/rng.hpp"
#include "offsim/transport.hpp"
#include "oracles.hpp"

using namespace offsim;

namespace {

TransportProblem make_problem(std::size_t n, std::size_t m, std::vector<double> cost,
                              std::vector<double> a, std::vector<double> b, double eps) {
    TransportProblem pb;
    pb.rows = n;
    pb.cols = m;
    pb.cost = std::move(cost);
    pb.source.weights = std::move(a);
    pb.target.weights = std::move(b);
    pb.epsilon = eps;
    return pb;
}

TransportProblem random_problem(Rng& rng, std::size_t n, std::size_t m, double eps) {
    std::vector<double> cost(n * m);
    for (double& c : cost) c = rng.uniform(0.0, 1.0);
    std::vector<double> a(n), b(m);
    double sa = 0, sb = 0;
    for (double& w : a) { w = rng.uniform(0.1, 1.0); sa += w; }
    for (double& w : b) { w = rng.uniform(0.1, 1.0); sb += w; }
    for (double& w : a) w /= sa;
    for (double& w : b) w /= sb;
    return make_problem(n, m, std::move(cost), std::move(a), std::move(b), eps);
}

} // namespace

TEST_CASE("oracle: hand-checked transport LPs") {
    // Uniform 2x2 with a free diagonal.
    CHECK(oracles::exact_ot_cost(2, 2, {0, 1, 1, 0}, {0.5, 0.5}, {0.5, 0.5}) ==
          doctest::Approx(0.0).epsilon(1e-12));
    // a=(0.3,0.7), b=(0.6,0.4), cost [[1,5],[2,1]]: optimum ships 0.3 at 1,
    // 0.3 at 2 and 0.4 at 1 for a total of 1.3.
    CHECK(oracles::exact_ot_cost(2, 2, {1, 5, 2, 1}, {0.3, 0.7}, {0.6, 0.4}) ==
          doctest::Approx(1.3));
    // Singleton.
    CHECK(oracles::exact_ot_cost(1, 1, {7.0}, {1.0}, {1.0}) == doctest::Approx(7.0));
}

TEST_CASE("build_problem composes measures and costs") {
    SystemParams p;
    std::vector<Task> tasks = {{0, 1e10, 8e6}};
    const auto nodes = default_nodes(p);

    SUBCASE("singleton measures") {
        const auto pb = build_problem(tasks, {nodes[0]}, p, 8e6, 0.01);
        CHECK(pb.source.weights == std::vector<double>{1.0});
        CHECK(pb.target.weights == std::vector<double>{1.0});
    }

    SUBCASE("capacity weights 1/10/100 normalize to 111ths") {
        const auto pb = build_problem(tasks, nodes, p, 8e6, 0.01);
        CHECK(pb.target.weights[0] == doctest::Approx(1.0 / 111.0).epsilon(1e-12));
        CHECK(pb.target.weights[1] == doctest::Approx(10.0 / 111.0).epsilon(1e-12));
        CHECK(pb.target.weights[2] == doctest::Approx(100.0 / 111.0).epsilon(1e-12));
    }

    SUBCASE("local column is all ones") {
        std::vector<Task> many;
        Rng rng(3);
        for (int i = 0; i < 5; ++i)
            many.push_back({static_cast<std::uint32_t>(i), rng.uniform(1e9, 1e11),
                            rng.uniform(1e5, 1e7)});
        const auto pb = build_problem(many, nodes, p, 1e6, 0.01);
        for (std::size_t i = 0; i < pb.rows; ++i) CHECK(pb.cost_at(i, 0) == 1.0);
        for (std::size_t i = 0; i < pb.rows; ++i)
            CHECK(pb.source.weights[i] == doctest::Approx(0.2).epsilon(1e-12));
    }

    SUBCASE("empty inputs rejected") {
        CHECK_THROWS_AS(build_problem({}, nodes, p, 1e6, 0.01), std::invalid_argument);
        CHECK_THROWS_AS(build_problem(tasks, {}, p, 1e6, 0.01), std::invalid_argument);
        CHECK_THROWS_AS(build_problem(tasks, nodes, p, 1e6, 0.0), std::invalid_argument);
    }
}

TEST_CASE("sinkhorn: singleton coupling is forced") {
    for (double eps : {0.5, 0.01}) {
        const auto pb = make_problem(1, 1, {3.7}, {1.0}, {1.0}, eps);
        const auto plan = sinkhorn(pb);
        REQUIRE(plan.converged);
        CHECK(plan.coupling[0] == doctest::Approx(1.0).epsilon(1e-9));
        // Dual equals the only cost entry; the gap vanishes.
        CHECK(dual_objective(plan, pb) == doctest::Approx(3.7).epsilon(1e-6));
        CHECK(primal_cost(plan, pb) == doctest::Approx(3.7).epsilon(1e-6));
    }
}

TEST_CASE("sinkhorn: 2x2 antidiagonal cost concentrates on the diagonal") {
    const auto pb = make_problem(2, 2, {0, 1, 1, 0}, {0.5, 0.5}, {0.5, 0.5}, 0.01);
    const auto plan = sinkhorn(pb);
    REQUIRE(plan.converged);
    CHECK(plan.coupling[0] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(plan.coupling[3] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(plan.coupling[1] < 1e-3);
    CHECK(plan.coupling[2] < 1e-3);
    CHECK(primal_cost(plan, pb) == doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("sinkhorn: converged plans satisfy both marginals") {
    Rng rng(101);
    for (double eps : {0.5, 0.1, 0.01}) {
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t n = 2 + rng.next_u64() % 4, m = 2 + rng.next_u64() % 3;
            const auto pb = random_problem(rng, n, m, eps);
            const auto plan = sinkhorn(pb, 20000, 1e-8);
            REQUIRE(plan.converged);
            for (std::size_t i = 0; i < n; ++i) {
                double row = 0;
                for (std::size_t j = 0; j < m; ++j) row += plan.coupling_at(i, j, m);
                CHECK(std::abs(row - pb.source.weights[i]) <= 1e-7);
            }
            for (std::size_t j = 0; j < m; ++j) {
                double col = 0;
                for (std::size_t i = 0; i < n; ++i) col += plan.coupling_at(i, j, m);
                CHECK(std::abs(col - pb.target.weights[j]) <= 1e-7);
            }
            for (double g : plan.coupling) CHECK(g >= 0.0);
        }
    }
}

TEST_CASE("sinkhorn: residual trace is non-increasing") {
    Rng rng(102);
    for (double eps : {0.5, 0.05, 0.01}) {
        for (int rep = 0; rep < 10; ++rep) {
            const auto pb = random_problem(rng, 5, 4, eps);
            const auto plan = sinkhorn(pb, 5000, 1e-9);
            for (std::size_t k = 1; k < plan.residual_trace.size(); ++k)
                CHECK(plan.residual_trace[k] <= plan.residual_trace[k - 1] + 1e-12);
            CHECK(plan.iterations_used == static_cast<int>(plan.residual_trace.size()));
        }
    }
}

TEST_CASE("sinkhorn: non-convergence reports through the flag") {
    Rng rng(103);
    const auto pb = random_problem(rng, 4, 3, 0.01);
    const auto plan = sinkhorn(pb, 1, 1e-14);
    CHECK_FALSE(plan.converged);
    CHECK(plan.iterations_used == 1);
    CHECK(plan.marginal_residual > 1e-14);
}

TEST_CASE("sinkhorn: linear-domain underflow raises a distinct error") {
    // epsilon 0.05 keeps the plain scaling path; costs of 1e5 drive
    // exp(-C/eps) to zero.
    auto pb = make_problem(2, 2, {1e5, 2e5, 2e5, 1e5}, {0.5, 0.5}, {0.5, 0.5}, 0.05);
    CHECK_THROWS_AS(sinkhorn(pb), SinkhornUnderflowError);
    // The log-domain path handles the same costs.
    pb.epsilon = 0.01;
    CHECK_NOTHROW(sinkhorn(pb));
}

TEST_CASE("primal cost worked examples") {
    auto pb = make_problem(2, 2, {2, 9, 9, 4}, {0.5, 0.5}, {0.5, 0.5}, 0.1);
    TransportPlan plan;
    plan.coupling = {0.5, 0.0, 0.0, 0.5};
    CHECK(primal_cost(plan, pb) == doctest::Approx(3.0));
    pb.cost = {0, 0, 0, 0};
    CHECK(primal_cost(plan, pb) == 0.0);
    plan.coupling = {0.5, 0.0};
    CHECK_THROWS_AS(primal_cost(plan, pb), std::invalid_argument);
}

TEST_CASE("weak duality and the entropic gap certificate") {
    Rng rng(104);
    for (int rep = 0; rep < 100; ++rep) {
        const double eps = (rep % 2 == 0) ? 0.1 : 0.01;
        const auto pb = random_problem(rng, 3, 3, eps);
        const auto plan = sinkhorn(pb, 20000, 1e-8);
        REQUIRE(plan.converged);
        const double gap = primal_cost(plan, pb) - dual_objective(plan, pb);
        CHECK(gap >= -1e-9);
        CHECK(gap <= eps * std::log(9.0) + 1e-4);
    }
}

TEST_CASE("duality gap shrinks with epsilon") {
    Rng rng(105);
    const auto base = random_problem(rng, 4, 3, 1.0);
    double prev = 1e18;
    for (double eps : {0.1, 0.01, 0.001}) {
        auto pb = base;
        pb.epsilon = eps;
        const auto plan = sinkhorn(pb, 100000, 1e-9);
        REQUIRE(plan.converged);
        const double gap = primal_cost(plan, pb) - dual_objective(plan, pb);
        CHECK(gap >= -1e-9);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("dual objective requires potentials") {
    const auto pb = make_problem(1, 1, {1.0}, {1.0}, {1.0}, 0.1);
    TransportPlan plan;
    plan.coupling = {1.0};
    CHECK_THROWS_AS(dual_objective(plan, pb), std::invalid_argument);
}

TEST_CASE("sinkhorn tracks the exact optimum on small instances") {
    Rng rng(106);
    for (int rep = 0; rep < 15; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 3;
        const auto pb = random_problem(rng, n, 3, 1e-3);
        const auto plan = sinkhorn(pb, 20000, 1e-7);
        const double exact =
            oracles::exact_ot_cost(n, 3, pb.cost, pb.source.weights, pb.target.weights);
        CHECK(std::abs(primal_cost(plan, pb) - exact) <= 5e-2);
        CHECK(primal_cost(plan, pb) >= exact - 1e-6);
    }
}

TEST_CASE("permuting tasks permutes coupling rows") {
    Rng rng(107);
    const auto pb = random_problem(rng, 5, 3, 0.05);
    auto permuted = pb;
    const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    for (std::size_t i = 0; i < 5; ++i) {
        permuted.source.weights[i] = pb.source.weights[perm[i]];
        for (std::size_t j = 0; j < 3; ++j)
            permuted.cost[i * 3 + j] = pb.cost[perm[i] * 3 + j];
    }
    const auto p1 = sinkhorn(pb, 20000, 1e-9);
    const auto p2 = sinkhorn(permuted, 20000, 1e-9);
    REQUIRE(p1.converged);
    REQUIRE(p2.converged);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(p2.coupling_at(i, j, 3) ==
                  doctest::Approx(p1.coupling_at(perm[i], j, 3)).epsilon(1e-9));
}

TEST_CASE("plan_to_decisions rounds rows with documented tie-breaks") {
    SystemParams p;
    const auto nodes = default_nodes(p);
    TransportProblem pb;
    pb.rows = 3;
    pb.cols = 3;
    pb.epsilon = 0.01;
    pb.source.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    pb.target.weights = {0.2, 0.3, 0.5};
    pb.cost = {1.0, 0.4, 0.9,
               1.0, 0.4, 0.9,
               1.0, 0.4, 0.9};
    TransportPlan plan;
    plan.coupling = {0.0, 0.0, 1.0,    // unanimous row
                     0.2, 0.2, 0.6,    // plain argmax
                     0.5, 0.5, 0.0};   // coupling tie, cheaper column wins
    const auto d = plan_to_decisions(plan, pb, nodes);
    CHECK(d[0] == OffloadDecision::Cloud);
    CHECK(d[1] == OffloadDecision::Cloud);
    CHECK(d[2] == OffloadDecision::Edge);

    // Full tie on coupling and cost falls back to column order: Local first.
    plan.coupling = {0.5, 0.5, 0.0, 0.2, 0.2, 0.6, 0.5, 0.5, 0.0};
    auto tied = pb;
    tied.cost = {0.4, 0.4, 0.9, 1.0, 0.4, 0.9, 0.4, 0.4, 0.9};
    const auto d2 = plan_to_decisions(plan, tied, nodes);
    CHECK(d2[0] == OffloadDecision::Local);
}

TEST_CASE("problem validation catches malformed inputs") {
    auto pb = make_problem(2, 2, {0, 1, 1, 0}, {0.5, 0.5}, {0.5, 0.5}, 0.1);
    CHECK_NOTHROW(validate(pb));
    pb.cost[1] = -0.1;
    CHECK_THROWS_AS(validate(pb), std::invalid_argument);
    pb = make_problem(2, 2, {0, 1, 1, 0}, {0.5, 0.4}, {0.5, 0.5}, 0.1);
    CHECK_THROWS_AS(validate(pb), std::invalid_argument);
    pb = make_problem(2, 2, {0, 1, 1, 0}, {0.5, 0.5}, {0.5, 0.5}, -1.0);
    CHECK_THROWS_AS(validate(pb), std::invalid_argument);
}
