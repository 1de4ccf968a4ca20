#include "ribe/robust_dp.hpp"

#include "ribe/error.hpp"
#include "ribe/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ribe {

namespace {

void check_radius(double radius) {
    if (!(radius >= 0.0 && radius <= 1.0))
        throw Error(ErrorCode::InvalidRadius, "radius " + std::to_string(radius) + " not in [0,1]");
}

void check_sizes(std::span<const double> p0, std::span<const double> v) {
    if (p0.size() != v.size() || p0.empty())
        throw Error(ErrorCode::DimensionMismatch, "support function size mismatch");
}

void check_shapes(const TabularMDP& mdp, const UncertaintySet& unc) {
    if (!unc.center().same_shape(mdp.kernel()))
        throw Error(ErrorCode::ShapeMismatch, "uncertainty set and MDP differ in shape");
}

double norm_inf_diff(std::span<const double> a, std::span<const double> b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

} // namespace

ValueOrder::ValueOrder(std::span<const double> v) : descending(v.size()) {
    std::iota(descending.begin(), descending.end(), std::size_t{0});
    std::stable_sort(descending.begin(), descending.end(),
                     [&](std::size_t i, std::size_t j) { return v[i] > v[j]; });
    argmin = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[argmin]) argmin = i;
}

double expected_value(std::span<const double> p, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * v[i];
    return acc;
}

double support_tv_value(std::span<const double> p0, std::span<const double> v, double radius,
                        const ValueOrder& order) {
    double value = expected_value(p0, v);
    if (radius == 0.0) return value;
    const double vmin = v[order.argmin];
    double budget = radius;
    for (std::size_t idx : order.descending) {
        if (budget <= 0.0 || v[idx] <= vmin) break;
        const double moved = std::min(budget, p0[idx]);
        value -= moved * (v[idx] - vmin);
        budget -= moved;
    }
    return value;
}

SupportResult support_tv(std::span<const double> p0, std::span<const double> v, double radius) {
    check_sizes(p0, v);
    check_radius(radius);
    const ValueOrder order(v);
    std::vector<double> q(p0.begin(), p0.end());
    if (radius > 0.0) {
        const double vmin = v[order.argmin];
        double budget = radius;
        for (std::size_t idx : order.descending) {
            if (budget <= 0.0 || v[idx] <= vmin) break;
            const double moved = std::min(budget, q[idx]);
            q[idx] -= moved;
            q[order.argmin] += moved;
            budget -= moved;
        }
    }
    return {support_tv_value(p0, v, radius, order), Distribution(std::move(q))};
}

SupportResult support_tv_lp_oracle(std::span<const double> p0, std::span<const double> v,
                                   double radius) {
    check_sizes(p0, v);
    check_radius(radius);
    const std::size_t n = p0.size();
    // Columns: q (n), u (n), w (n).
    lp::LinearProgram program(3 * n);
    for (std::size_t i = 0; i < n; ++i) program.objective[i] = v[i];
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(3 * n, 0.0);
        row[i] = 1.0;
        row[n + i] = -1.0;
        row[2 * n + i] = 1.0;
        program.add(std::move(row), lp::Sense::Equal, p0[i]);
    }
    std::vector<double> mass(3 * n, 0.0), budget(3 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        mass[i] = 1.0;
        budget[n + i] = budget[2 * n + i] = 1.0;
    }
    program.add(std::move(mass), lp::Sense::Equal, 1.0);
    program.add(std::move(budget), lp::Sense::LessEqual, 2.0 * radius);

    const auto sol = lp::solve(program);
    if (sol.status != lp::Status::Optimal)
        throw Error(ErrorCode::SolverFailure, "support LP did not reach optimality");
    std::vector<double> q(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
    double total = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& x : q) x /= total;
    return {sol.objective, Distribution(std::move(q))};
}

ValueFunction robust_bellman_update(const TabularMDP& mdp, const UncertaintySet& unc,
                                    std::span<const double> v) {
    check_shapes(mdp, unc);
    const ValueOrder order(v);
    const auto& center = unc.center();
    ValueFunction out(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double q = mdp.reward(s, a) +
                             mdp.gamma() * support_tv_value(center.row(s, a), v, unc.radius(s, a), order);
            best = std::max(best, q);
        }
        out[s] = best;
    }
    return out;
}

ValueFunction robust_policy_update(const TabularMDP& mdp, const UncertaintySet& unc,
                                   const Policy& policy, std::span<const double> v) {
    check_shapes(mdp, unc);
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
        throw Error(ErrorCode::ShapeMismatch, "policy shape differs from MDP");
    const ValueOrder order(v);
    const auto& center = unc.center();
    ValueFunction out(mdp.num_states(), 0.0);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        double acc = 0.0;
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double w = policy.probability(s, a);
            if (w == 0.0) continue;
            acc += w * (mdp.reward(s, a) +
                        mdp.gamma() * support_tv_value(center.row(s, a), v, unc.radius(s, a), order));
        }
        out[s] = acc;
    }
    return out;
}

Policy greedy_policy(const TabularMDP& mdp, const UncertaintySet& unc, std::span<const double> v) {
    check_shapes(mdp, unc);
    const ValueOrder order(v);
    std::vector<std::size_t> actions(mdp.num_states(), 0);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double q = mdp.reward(s, a) + mdp.gamma() * support_tv_value(unc.center().row(s, a), v,
                                                                               unc.radius(s, a), order);
            if (q > best) {
                best = q;
                actions[s] = a;
            }
        }
    }
    return Policy::deterministic(std::move(actions), mdp.num_actions());
}

PlanResult robust_value_iteration(const TabularMDP& mdp, const UncertaintySet& unc,
                                  const IterationOptions& options) {
    check_shapes(mdp, unc);
    PlanResult result;
    result.value.assign(mdp.num_states(), 0.0);
    result.residual = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < options.max_iterations; ++t) {
        auto next = robust_bellman_update(mdp, unc, result.value);
        result.residual = norm_inf_diff(next, result.value);
        result.value = std::move(next);
        result.iterations = t + 1;
        if (result.residual <= options.tolerance) break;
    }
    result.converged = result.residual <= options.tolerance;
    result.policy = greedy_policy(mdp, unc, result.value);
    return result;
}

EvaluationResult robust_policy_evaluation(const TabularMDP& mdp, const UncertaintySet& unc,
                                          const Policy& policy, const IterationOptions& options) {
    EvaluationResult result;
    result.value.assign(mdp.num_states(), 0.0);
    result.residual = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < options.max_iterations; ++t) {
        auto next = robust_policy_update(mdp, unc, policy, result.value);
        result.residual = norm_inf_diff(next, result.value);
        result.value = std::move(next);
        result.iterations = t + 1;
        if (result.residual <= options.tolerance) break;
    }
    result.converged = result.residual <= options.tolerance;
    return result;
}

PlanResult value_iteration(const TabularMDP& mdp, const IterationOptions& options) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const auto& P = mdp.kernel();
    PlanResult result;
    result.value.assign(S, 0.0);
    result.residual = std::numeric_limits<double>::infinity();
    ValueFunction next(S);
    auto q_value = [&](std::size_t s, std::size_t a, const ValueFunction& v) {
        return mdp.reward(s, a) + mdp.gamma() * expected_value(P.row(s, a), v);
    };
    for (std::size_t t = 0; t < options.max_iterations; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) best = std::max(best, q_value(s, a, result.value));
            next[s] = best;
        }
        result.residual = norm_inf_diff(next, result.value);
        std::swap(next, result.value);
        result.iterations = t + 1;
        if (result.residual <= options.tolerance) break;
    }
    result.converged = result.residual <= options.tolerance;
    std::vector<std::size_t> actions(S, 0);
    for (std::size_t s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) {
            const double q = q_value(s, a, result.value);
            if (q > best) {
                best = q;
                actions[s] = a;
            }
        }
    }
    result.policy = Policy::deterministic(std::move(actions), A);
    return result;
}

double average_value(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace ribe
