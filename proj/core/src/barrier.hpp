#pragma once

#include "ribe/distances.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ribe::detail {

struct BarrierResult {
    std::vector<double> q;
    std::size_t newton_steps = 0;
    bool converged = false;
};

// Log-barrier path following for max sum_j w_j log q_j over
// {q : W1(q, p) <= radius}, in coupling variables. Requires radius > 0.
BarrierResult w1_ball_mle(std::span<const double> w, std::span<const double> p,
                          const CostMatrix& cost, double radius);

// Same objective over {q in simplex : |features_k q - mu_k| <= beta_k}.
// Returns nothing when the set has no point with q > 0 and slack on every
// nonzero beta row.
std::optional<BarrierResult> moment_box_mle(std::span<const double> w,
                                            std::span<const double> features,
                                            std::span<const double> mu,
                                            std::span<const double> beta);

} // namespace ribe::detail
