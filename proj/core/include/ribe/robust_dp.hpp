#pragma once

#include "ribe/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ribe {

/// Worst-case expectation over a TV ball and a distribution attaining it.
struct SupportResult {
    double value = 0.0;
    Distribution worst_case_distribution;
};

/**
 * Descending order of a value vector, shared by every support-function call
 * within one Bellman sweep. Ties keep ascending index order; `argmin` is the
 * lowest index attaining min(v).
 */
struct ValueOrder {
    std::vector<std::size_t> descending;
    std::size_t argmin = 0;

    explicit ValueOrder(std::span<const double> v);
};

/// p . v, the non-robust expectation. Radius-zero support calls take this path.
double expected_value(std::span<const double> p, std::span<const double> v);

/**
 * min { q.v : q in simplex, tv(q, p0) <= radius }.
 *
 * Greedy mass transport: up to `radius` of probability is taken from the
 * highest-valued states (never more than a state holds) and deposited on the
 * argmin state. This is an exact minimizer of the linear objective over the
 * TV-ball/simplex polytope. Throws InvalidRadius outside [0, 1].
 */
SupportResult support_tv(std::span<const double> p0, std::span<const double> v, double radius);

/// Value-only variant used inside Bellman sweeps.
double support_tv_value(std::span<const double> p0, std::span<const double> v, double radius,
                        const ValueOrder& order);

/**
 * Same minimization written as an explicit linear program over (q, u, w)
 * with q - p0 = u - w and sum(u + w) <= 2 radius. Independent check for
 * support_tv; not used on hot paths.
 */
SupportResult support_tv_lp_oracle(std::span<const double> p0, std::span<const double> v,
                                   double radius);

struct IterationOptions {
    std::size_t max_iterations = 10000;
    double tolerance = 1e-8;
};

struct PlanResult {
    ValueFunction value;
    Policy policy;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

struct EvaluationResult {
    ValueFunction value;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// One application of the robust Bellman optimality operator.
ValueFunction robust_bellman_update(const TabularMDP& mdp, const UncertaintySet& unc,
                                    std::span<const double> v);

/// One application of the robust policy-evaluation operator.
ValueFunction robust_policy_update(const TabularMDP& mdp, const UncertaintySet& unc,
                                   const Policy& policy, std::span<const double> v);

/// Greedy policy w.r.t. robust Q-values of v; argmax ties go to the lowest action.
Policy greedy_policy(const TabularMDP& mdp, const UncertaintySet& unc, std::span<const double> v);

/**
 * Robust value iteration from V = 0 until the sup-norm residual drops to
 * `tolerance` or `max_iterations` sweeps ran. The uncertainty set's center is
 * used for planning; the MDP's own kernel is ignored. Non-convergence is
 * reported through `converged`, not thrown.
 */
PlanResult robust_value_iteration(const TabularMDP& mdp, const UncertaintySet& unc,
                                  const IterationOptions& options = {});

EvaluationResult robust_policy_evaluation(const TabularMDP& mdp, const UncertaintySet& unc,
                                          const Policy& policy,
                                          const IterationOptions& options = {});

/// Plain value iteration on the MDP's own kernel (no uncertainty set involved).
PlanResult value_iteration(const TabularMDP& mdp, const IterationOptions& options = {});

/// Arithmetic mean of the entries.
double average_value(std::span<const double> v);

} // namespace ribe
