#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "offsim/cost_model.hpp"

namespace offsim {

// Discrete probability measure: nonnegative weights summing to 1.
struct DiscreteMeasure {
    std::vector<double> weights;

    std::size_t support_size() const { return weights.size(); }
};

inline void validate(const DiscreteMeasure& m) {
    if (m.weights.empty())
        throw std::invalid_argument("measure: empty support");
    double sum = 0;
    for (double w : m.weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw std::invalid_argument("measure: weights must be finite and >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("measure: weights must sum to 1, got " + std::to_string(sum));
}

// One target slot of the assignment problem: a compute node kind with its
// speed and the share of task mass it should attract.
struct TransportNode {
    OffloadDecision kind = OffloadDecision::Local;
    double speed_hz = 0;
    double capacity_weight = 0;
};

// Discrete transport problem between tasks (rows) and node slots (columns).
struct TransportProblem {
    std::size_t rows = 0, cols = 0;
    std::vector<double> cost;  // row-major rows x cols, entries >= 0
    DiscreteMeasure source;    // task mass, one weight per row
    DiscreteMeasure target;    // node mass, one weight per column
    double epsilon = 0.01;     // entropic regularization strength

    double cost_at(std::size_t i, std::size_t j) const { return cost[i * cols + j]; }
};

inline void validate(const TransportProblem& pb) {
    if (pb.rows == 0 || pb.cols == 0)
        throw std::invalid_argument("transport problem: empty");
    if (pb.cost.size() != pb.rows * pb.cols)
        throw std::invalid_argument("transport problem: cost matrix shape mismatch");
    if (pb.source.weights.size() != pb.rows || pb.target.weights.size() != pb.cols)
        throw std::invalid_argument("transport problem: measure support mismatch");
    for (double c : pb.cost)
        if (c < 0.0 || !std::isfinite(c))
            throw std::invalid_argument("transport problem: cost entries must be finite and >= 0");
    if (!(pb.epsilon > 0.0))
        throw std::invalid_argument("transport problem: epsilon must be positive");
    validate(pb.source);
    validate(pb.target);
}

// Entropic transport plan with its dual potentials and convergence record.
struct TransportPlan {
    std::vector<double> coupling;      // row-major, nonnegative
    std::vector<double> dual_source;   // one potential per row
    std::vector<double> dual_target;   // one potential per column
    double marginal_residual = std::numeric_limits<double>::infinity();
    int iterations_used = 0;
    bool converged = false;
    std::vector<double> residual_trace;  // residual after each full sweep

    double coupling_at(std::size_t i, std::size_t j, std::size_t cols) const {
        return coupling[i * cols + j];
    }
};

// Raised when linear-domain scaling underflows; retry with a larger epsilon
// (epsilon < 0.05 already routes to the log-domain solver).
struct SinkhornUnderflowError : std::runtime_error {
    explicit SinkhornUnderflowError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& terms) {
    double m = -std::numeric_limits<double>::infinity();
    for (double t : terms) m = std::max(m, t);
    if (!std::isfinite(m)) return m;  // all terms -inf
    double s = 0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

inline double safe_log(double w) {
    return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
}

// Log-domain scaling; stable for small epsilon.
inline TransportPlan sinkhorn_log(const TransportProblem& pb, int max_iter, double tolerance) {
    const std::size_t n = pb.rows, m = pb.cols;
    const double eps = pb.epsilon;
    const auto& a = pb.source.weights;
    const auto& b = pb.target.weights;

    std::vector<double> f(n, 0.0), g(m, 0.0);
    std::vector<double> log_a(n), log_b(m);
    for (std::size_t i = 0; i < n; ++i) log_a[i] = safe_log(a[i]);
    for (std::size_t j = 0; j < m; ++j) log_b[j] = safe_log(b[j]);

    TransportPlan plan;
    std::vector<double> terms(std::max(n, m));
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            terms.resize(m);
            for (std::size_t j = 0; j < m; ++j) terms[j] = (g[j] - pb.cost_at(i, j)) / eps;
            f[i] = eps * (log_a[i] - log_sum_exp(terms));
        }
        for (std::size_t j = 0; j < m; ++j) {
            terms.resize(n);
            for (std::size_t i = 0; i < n; ++i) terms[i] = (f[i] - pb.cost_at(i, j)) / eps;
            g[j] = eps * (log_b[j] - log_sum_exp(terms));
        }
        // Column sums match b by construction after the g update; the residual
        // that remains is on the row marginals.
        double res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0;
            for (std::size_t j = 0; j < m; ++j) {
                const double e = (f[i] + g[j] - pb.cost_at(i, j)) / eps;
                row += std::isfinite(e) ? std::exp(e) : 0.0;
            }
            res = std::max(res, std::abs(row - a[i]));
        }
        plan.residual_trace.push_back(res);
        plan.iterations_used = it;
        plan.marginal_residual = res;
        if (res <= tolerance) {
            plan.converged = true;
            break;
        }
    }

    plan.coupling.assign(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double e = (f[i] + g[j] - pb.cost_at(i, j)) / eps;
            plan.coupling[i * m + j] = std::isfinite(e) ? std::exp(e) : 0.0;
        }
    plan.dual_source = std::move(f);
    plan.dual_target = std::move(g);
    return plan;
}

// Plain scaling on K = exp(-C/eps); cheaper, fine for moderate epsilon.
inline TransportPlan sinkhorn_linear(const TransportProblem& pb, int max_iter, double tolerance) {
    const std::size_t n = pb.rows, m = pb.cols;
    const double eps = pb.epsilon;
    const auto& a = pb.source.weights;
    const auto& b = pb.target.weights;

    std::vector<double> kernel(n * m);
    for (std::size_t i = 0; i < n * m; ++i) kernel[i] = std::exp(-pb.cost[i] / eps);

    std::vector<double> u(n, 1.0), v(m, 1.0);
    TransportPlan plan;
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double kv = 0;
            for (std::size_t j = 0; j < m; ++j) kv += kernel[i * m + j] * v[j];
            if (a[i] > 0.0 && !(kv > 0.0))
                throw SinkhornUnderflowError("sinkhorn: scaling underflow, epsilon too small for this cost range");
            u[i] = a[i] > 0.0 ? a[i] / kv : 0.0;
            if (!std::isfinite(u[i]))
                throw SinkhornUnderflowError("sinkhorn: scaling vector is not finite");
        }
        for (std::size_t j = 0; j < m; ++j) {
            double ku = 0;
            for (std::size_t i = 0; i < n; ++i) ku += kernel[i * m + j] * u[i];
            if (b[j] > 0.0 && !(ku > 0.0))
                throw SinkhornUnderflowError("sinkhorn: scaling underflow, epsilon too small for this cost range");
            v[j] = b[j] > 0.0 ? b[j] / ku : 0.0;
            if (!std::isfinite(v[j]))
                throw SinkhornUnderflowError("sinkhorn: scaling vector is not finite");
        }
        double res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0;
            for (std::size_t j = 0; j < m; ++j) row += u[i] * kernel[i * m + j] * v[j];
            res = std::max(res, std::abs(row - a[i]));
        }
        plan.residual_trace.push_back(res);
        plan.iterations_used = it;
        plan.marginal_residual = res;
        if (res <= tolerance) {
            plan.converged = true;
            break;
        }
    }

    plan.coupling.assign(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) plan.coupling[i * m + j] = u[i] * kernel[i * m + j] * v[j];
    plan.dual_source.resize(n);
    plan.dual_target.resize(m);
    for (std::size_t i = 0; i < n; ++i) plan.dual_source[i] = eps * safe_log(u[i]);
    for (std::size_t j = 0; j < m; ++j) plan.dual_target[j] = eps * safe_log(v[j]);
    return plan;
}

} // namespace detail

// Alternating marginal scaling until the worst row/column defect drops below
// `tolerance`. Non-convergence is reported through the `converged` flag, not
// an exception; scaling underflow throws SinkhornUnderflowError.
inline TransportPlan sinkhorn(const TransportProblem& pb, int max_iter = 10000,
                              double tolerance = 1e-6) {
    validate(pb);
    if (max_iter < 1)
        throw std::invalid_argument("sinkhorn: max_iter must be >= 1");
    if (!(tolerance > 0.0))
        throw std::invalid_argument("sinkhorn: tolerance must be positive");
    // Linear scaling underflows once cost/epsilon exceeds ~700.
    if (pb.epsilon < 0.05)
        return detail::sinkhorn_log(pb, max_iter, tolerance);
    return detail::sinkhorn_linear(pb, max_iter, tolerance);
}

// <C, coupling>: the transport cost actually paid by the plan.
inline double primal_cost(const TransportPlan& plan, const TransportProblem& pb) {
    if (plan.coupling.size() != pb.rows * pb.cols)
        throw std::invalid_argument("primal_cost: plan/problem shape mismatch");
    double s = 0;
    for (std::size_t k = 0; k < plan.coupling.size(); ++k) s += plan.coupling[k] * pb.cost[k];
    return s;
}

// Dual value sum_i f_i a_i + sum_j g_j b_j. For a converged plan the gap
// primal - dual lies in [0, epsilon * log(rows*cols)] up to solver slack,
// which certifies near-optimality.
inline double dual_objective(const TransportPlan& plan, const TransportProblem& pb) {
    if (plan.dual_source.size() != pb.rows || plan.dual_target.size() != pb.cols)
        throw std::invalid_argument("dual_objective: plan carries no matching potentials");
    double s = 0;
    for (std::size_t i = 0; i < pb.rows; ++i) {
        const double w = pb.source.weights[i];
        if (w > 0.0) s += plan.dual_source[i] * w;
    }
    for (std::size_t j = 0; j < pb.cols; ++j) {
        const double w = pb.target.weights[j];
        if (w > 0.0) s += plan.dual_target[j] * w;
    }
    if (!std::isfinite(s))
        throw std::invalid_argument("dual_objective: potentials are not finite");
    return s;
}

// Builds the task -> node assignment problem: uniform mass over tasks,
// node mass proportional to capacity weights, cost = normalized placement
// cost of each (task, node) pair at the given upload rate.
inline TransportProblem build_problem(const std::vector<Task>& tasks,
                                      const std::vector<TransportNode>& nodes,
                                      const SystemParams& params, double upload_rate_bps,
                                      double epsilon) {
    if (tasks.empty())
        throw std::invalid_argument("build_problem: no tasks");
    if (nodes.empty())
        throw std::invalid_argument("build_problem: no nodes");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("build_problem: epsilon must be positive");

    TransportProblem pb;
    pb.rows = tasks.size();
    pb.cols = nodes.size();
    pb.epsilon = epsilon;
    pb.source.weights.assign(pb.rows, 1.0 / static_cast<double>(pb.rows));

    double total = 0;
    for (const auto& node : nodes) {
        if (!(node.capacity_weight >= 0.0))
            throw std::invalid_argument("build_problem: capacity weights must be >= 0");
        total += node.capacity_weight;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("build_problem: at least one node needs positive capacity");
    pb.target.weights.resize(pb.cols);
    for (std::size_t j = 0; j < pb.cols; ++j)
        pb.target.weights[j] = nodes[j].capacity_weight / total;

    pb.cost.resize(pb.rows * pb.cols);
    for (std::size_t i = 0; i < pb.rows; ++i)
        for (std::size_t j = 0; j < pb.cols; ++j)
            pb.cost[i * pb.cols + j] =
                decision_cost(tasks[i], nodes[j].kind, params, upload_rate_bps).normalized_cost;
    return pb;
}

// Default three-slot target: one column per node kind, mass proportional to
// compute speed.
inline std::vector<TransportNode> default_nodes(const SystemParams& p) {
    return {{OffloadDecision::Local, p.f_end_hz, p.f_end_hz},
            {OffloadDecision::Edge, p.f_edge_hz, p.f_edge_hz},
            {OffloadDecision::Cloud, p.f_cloud_hz, p.f_cloud_hz}};
}

// Rounds the coupling to one decision per task: row argmax, ties broken by
// the cheaper cost entry, then by column order (Local before Edge before
// Cloud as built).
inline std::vector<OffloadDecision> plan_to_decisions(const TransportPlan& plan,
                                                      const TransportProblem& pb,
                                                      const std::vector<TransportNode>& nodes) {
    if (nodes.size() != pb.cols)
        throw std::invalid_argument("plan_to_decisions: node list does not match problem columns");
    if (plan.coupling.size() != pb.rows * pb.cols)
        throw std::invalid_argument("plan_to_decisions: plan/problem shape mismatch");
    std::vector<OffloadDecision> out(pb.rows);
    for (std::size_t i = 0; i < pb.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < pb.cols; ++j) {
            const double cj = plan.coupling_at(i, j, pb.cols);
            const double cb = plan.coupling_at(i, best, pb.cols);
            if (cj > cb || (cj == cb && pb.cost_at(i, j) < pb.cost_at(i, best)))
                best = j;
        }
        out[i] = nodes[best].kind;
    }
    return out;
}

} // namespace offsim
