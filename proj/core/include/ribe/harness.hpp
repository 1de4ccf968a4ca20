#pragma once

#include "ribe/datagen.hpp"
#include "ribe/envs.hpp"
#include "ribe/ibe.hpp"
#include "ribe/robust_dp.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ribe {

/// Runs fn(0..count-1) on a pool; `threads` = 0 means hardware concurrency.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// RIBE_THREADS when set, else `requested`, else hardware concurrency.
std::size_t resolve_threads(std::size_t requested);

struct QLearningOptions {
    double learning_rate = 0.1;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double init_scale = 1e-6;
};

struct ExperimentConfig {
    std::string env = "frozen_lake";
    std::uint64_t env_seed = 0;
    /// IBE variants (vanilla, vanilla_source, tv, w1, moment, density_global,
    /// density_local, value_aware, lds) and baselines (oracle, overconservative, qlearning).
    std::vector<std::string> estimators{"vanilla", "tv", "density_local"};
    std::vector<std::uint64_t> sample_sizes{1, 5, 10, 50, 100, 150, 500, 1000, 5000, 10000};
    std::size_t seeds = 20;
    std::uint64_t seed = 0;
    /// Evaluation radii R; planning uses R' = train_radius when set, else R.
    std::vector<double> radii{0.0, 0.1};
    std::optional<double> train_radius;
    PriorDefault prior = PriorDefault::SourceKernel;
    bool rescale_rewards = false;
    SamplingPlan::Mode sampling = SamplingPlan::Mode::BalancedPerPair;
    bool presmooth = false;
    std::size_t threads = 0;
    QLearningOptions qlearning;
    std::string out_dir = ".";

    /// Throws InvalidArgument on empty grids or unknown names.
    void validate() const;
};

/// Parses a JSON config; `//` comments are allowed.
ExperimentConfig config_from_json(const std::string& text);
std::string to_json(const ExperimentConfig& cfg);

/// A generated environment and, for lds_cartpole, its softmax parameters.
struct Scenario {
    EnvPair pair;
    std::optional<LdsBundle> lds;
};

Scenario make_scenario(const std::string& env, std::uint64_t env_seed);

struct EstimatorChoice {
    SideInfo info;
    PriorDefault prior = PriorDefault::SourceKernel;
};

/// Oracle side information for a named IBE variant.
EstimatorChoice oracle_estimator(const Scenario& scenario, const std::string& name,
                                 PriorDefault prior, bool presmooth = false);

bool is_baseline(const std::string& name);

struct RunRecord {
    std::string env;
    std::string estimator;
    std::uint64_t n = 0;
    std::size_t seed = 0;
    double train_radius = 0.0;
    double eval_radius = 0.0;
    double avg_value = 0.0;    ///< state-averaged robust target value of the learned policy
    double optimal_avg = 0.0;  ///< same for the target-optimal robust policy
    double delta_n = 0.0;      ///< kernel_max_tv(estimate, target)
    double mean_tv = 0.0;      ///< (1/SA) sum tv(estimate, target)
    double train_value = 0.0;  ///< state-averaged value on the estimate-centered set
    double eval_error = 0.0;   ///< ||V^pi_t - V^*_t||_inf
    double eval_bound = 0.0;   ///< 4 delta / (1-gamma)^2
    double train_error = 0.0;  ///< ||V^pi_hat - V^*_t||_inf
    double train_bound = 0.0;  ///< 2 delta / (1-gamma)^2
    double coverage = 0.0;
    bool bounds_checked = false;
    bool eval_violation = false;
    bool train_violation = false;
    double wallclock = 0.0;
};

/// Numerical slack granted to the error-bound checks.
inline constexpr double kBoundSlack = 1e-6;

/// Sample, estimate, plan on the estimate-centered set, evaluate on the target-centered set.
/// Throws on the first failing cell.
std::vector<RunRecord> run_transfer_grid(const ExperimentConfig& cfg);

struct GridOutcome {
    std::vector<RunRecord> records; ///< every cell that completed, in grid order
    std::vector<std::string> errors; ///< one message per failed cell
};

/// Like run_transfer_grid but keeps going past failing cells.
GridOutcome run_transfer_grid_collect(const ExperimentConfig& cfg);

/// Plans on the source-centered set with radii min(1, R + tv(P_s, P_t)) per (s,a).
Policy overconservative_policy(const TabularMDP& source, const TransitionKernel& target,
                               double radius, const IterationOptions& options = {});

struct QLearningResult {
    Policy policy;
    std::uint64_t steps = 0;
};

/// Tabular epsilon-greedy Q-learning on `budget` simulated target transitions.
QLearningResult run_qlearning(const TabularMDP& target, std::uint64_t budget, std::uint64_t seed,
                              const QLearningOptions& options = {});

void write_run_csv(std::ostream& out, const std::vector<RunRecord>& records);

struct BoundSummary {
    std::size_t checked = 0;
    std::size_t eval_violations = 0;
    std::size_t train_violations = 0;
    double worst_eval_ratio = 0.0;  ///< max measured / bound
    double worst_train_ratio = 0.0;
};

BoundSummary summarize_bounds(const std::vector<RunRecord>& records);

/// Runs the grid with rescaled rewards and reports every error-bound check; throws
/// BoundViolated when `strict` and any check fails.
std::vector<RunRecord> verify_bounds(ExperimentConfig cfg, bool strict = true);

struct CurvePoint {
    std::string estimator;
    std::uint64_t n = 0;
    double mean = 0.0;
    double ci95 = 0.0;
    std::size_t samples = 0;
};

struct TvCurve {
    std::vector<CurvePoint> points;
    double reference = 0.0; ///< (1/SA) sum tv(P_s, P_t)
    /// Rows of Distance-IBE estimates with tv(estimate, P_t) > 2 d (+1e-9).
    std::size_t triangle_violations = 0;
    std::size_t triangle_checked = 0;
};

/// Mean (s,a)-averaged TV error across seeds; no planning involved.
TvCurve tv_convergence_curve(const ExperimentConfig& cfg);

void write_tv_curve_csv(std::ostream& out, const TvCurve& curve);

struct ScalingPoint {
    std::string estimator;
    double radius = 0.0;
    std::uint64_t n = 0;
    double mean_gap = 0.0;
    double ci95 = 0.0;
    bool clipped = false;
};

struct ScalingSlope {
    std::string estimator;
    double radius = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    std::vector<ScalingSlope> slopes;
};

/// Suboptimality gap V*_avg - V^{pi_n}_avg per (estimator, R, n) and its log-log slope.
ScalingResult suboptimality_scaling(const ExperimentConfig& cfg);
ScalingResult scaling_from_records(const std::vector<RunRecord>& records);

void write_scaling_csv(std::ostream& out, const ScalingResult& result);

/// Least-squares slope and intercept of y on x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Mean and normal-approximation 95% half-width.
std::pair<double, double> mean_ci95(const std::vector<double>& values);

/// Deterministic shortest round-trip formatting used by every CSV writer.
std::string format_double(double x);

} // namespace ribe
