#pragma once

#include "ribe/datagen.hpp"
#include "ribe/distances.hpp"
#include "ribe/frank_wolfe.hpp"
#include "ribe/side_info.hpp"
#include "ribe/types.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ribe {

using RowCounts = std::span<const std::uint64_t>;

struct RowEstimate {
    Distribution distribution;
    double log_likelihood = 0.0;
    /// Distance to violating the row constraint; +inf when there is none.
    double constraint_slack = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

struct LdsEstimate : RowEstimate {
    std::vector<double> theta;
};

/// Sum_j N_j log q_j with 0 log 0 = 0; -inf if a counted state has q_j = 0.
double log_likelihood(RowCounts counts, std::span<const double> q);

/// Empirical frequencies. Throws EmptyCounts.
Distribution vanilla_mle(RowCounts counts);

RowEstimate estimate_distance_tv(RowCounts counts, const Distribution& p_source, double radius,
                                 const fw::Options& options = {});

RowEstimate estimate_distance_w1(RowCounts counts, const Distribution& p_source,
                                 const CostMatrix& cost, double radius,
                                 const fw::Options& options = {});

/// `features` is M x S row-major; constraint |A q - mu_source| <= beta elementwise.
RowEstimate estimate_moment(RowCounts counts, std::span<const double> features,
                            std::span<const double> mu_source, std::span<const double> beta,
                            const fw::Options& options = {},
                            const Distribution* feasible_start = nullptr);

/// Box q_j <= caps_j * p_source_j solved by water-filling.
RowEstimate estimate_density(RowCounts counts, const Distribution& p_source,
                             std::span<const double> caps);

struct LdsOptions {
    double gradient_tolerance = 1e-8;
    std::size_t max_iterations = 10000;
};

/// Softmax family q = softmax(theta' psi) with theta(shared) pinned to theta_source.
LdsEstimate estimate_lds(RowCounts counts, std::span<const double> psi,
                         std::span<const double> theta_source,
                         std::span<const std::size_t> shared, const LdsOptions& options = {});

RowEstimate estimate_value_aware(RowCounts counts, const Distribution& p_source,
                                 const CostMatrix& metric, double beta1,
                                 const fw::Options& options = {});

/// Linear maximization over {q : W1(q, p) <= radius} for the gradient g.
std::vector<double> w1_ball_lmo(std::span<const double> p, const CostMatrix& cost, double radius,
                                std::span<const double> g);

/// softmax(theta' psi) for psi of shape dim x S.
std::vector<double> lds_distribution(std::span<const double> psi, std::span<const double> theta);

struct RowDiagnostics {
    std::size_t s = 0;
    std::size_t a = 0;
    std::uint64_t n = 0;
    double log_likelihood = 0.0;
    double constraint_slack = 0.0;
    std::size_t iterations = 0;
    bool fallback_used = false;
};

struct EstimateReport {
    TransitionKernel kernel;
    std::vector<RowDiagnostics> diagnostics; ///< one per (s,a), flattened
    std::vector<double> lds_theta;           ///< S*A*dim when LDS was used
};

struct EstimateOptions {
    fw::Options frank_wolfe;
    LdsOptions lds;
};

EstimateReport estimate_kernel(const TransitionCounts& counts, const TransitionKernel& source,
                               const SideInfo& info, PriorDefault prior,
                               const EstimateOptions& options = {});

/// Slack of row (s,a) of a candidate q against the constraint encoded in `info`.
double row_constraint_slack(const SideInfo& info, const TransitionKernel& source, std::size_t s,
                            std::size_t a, std::span<const double> q);

/// Header `s,a,N,loglik,slack,iters,fallback`.
void write_diagnostics_csv(std::ostream& out, const EstimateReport& report);

enum class SideInfoKind { None, DistanceTV, DistanceW1, Moment, DensityGlobal, DensityLocal, ValueAware };

struct DeriveOptions {
    CostMatrix w1_cost;              ///< defaults to the discrete metric
    std::vector<double> features;    ///< moment map, defaults to default_moment_features
    std::size_t feature_dim = 0;
    CostMatrix value_metric;         ///< required for ValueAware
    bool presmooth = false;
};

/// Oracle side information with per-(s,a) constants computed from both kernels.
SideInfo derive_true_side_info(const TransitionKernel& source, const TransitionKernel& target,
                               SideInfoKind kind, const DeriveOptions& options = {});

} // namespace ribe
