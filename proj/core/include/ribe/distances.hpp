#pragma once

#include "ribe/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ribe {

/// Square ground-cost matrix over state indices, row-major.
class CostMatrix {
public:
    CostMatrix() = default;
    /// Validates nonnegativity, zero diagonal and symmetry (pseudometrics are allowed).
    CostMatrix(std::size_t size, std::vector<double> values);

    /// 0 on the diagonal, 1 elsewhere; W1 under it equals TV.
    static CostMatrix discrete(std::size_t size);
    /// Euclidean distances between per-state feature vectors (all of equal dimension).
    static CostMatrix euclidean(const std::vector<std::vector<double>>& features);
    /// |v(i) - v(j)|, the value-induced pseudometric.
    static CostMatrix from_values(std::span<const double> values);

    std::size_t size() const noexcept { return size_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * size_ + j]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t size_ = 0;
    std::vector<double> values_;
};

/// Total variation, half the L1 distance.
double tv_distance(std::span<const double> p, std::span<const double> q);
inline double tv_distance(const Distribution& p, const Distribution& q) {
    return tv_distance(p.probs(), q.probs());
}

struct TransportPlan {
    double cost = 0.0;
    std::vector<double> flow; ///< row-major m x n
    std::size_t iterations = 0;
};

/**
 * Exact balanced transportation problem by the transportation simplex
 * (north-west-corner start, u-v potentials, stepping-stone cycles).
 * `supply` and `demand` must have equal totals within 1e-9.
 */
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost);

/// Wasserstein-1 optimal transport cost between p and q under `cost`.
double w1_distance(std::span<const double> p, std::span<const double> q, const CostMatrix& cost);
inline double w1_distance(const Distribution& p, const Distribution& q, const CostMatrix& cost) {
    return w1_distance(p.probs(), q.probs(), cost);
}

/// max(v) - min(v); zero for empty input.
double span(std::span<const double> v);

/// max over (s,a) of tv_distance between matching rows.
double kernel_max_tv(const TransitionKernel& p, const TransitionKernel& q);
/// (1/SA) * sum over (s,a) of tv_distance between matching rows.
double kernel_mean_tv(const TransitionKernel& p, const TransitionKernel& q);
/// Per-(s,a) TV distances, flattened (s, a).
std::vector<double> kernel_row_tv(const TransitionKernel& p, const TransitionKernel& q);

} // namespace ribe
