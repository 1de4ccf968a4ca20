#include "ribe/types.hpp"

#include "ribe/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ribe {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::RowSumMismatch: return "RowSumMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LPInfeasible: return "LPInfeasible";
    case ErrorCode::InvalidRadius: return "InvalidRadius";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::InfeasibleConstraint: return "InfeasibleConstraint";
    case ErrorCode::InfeasibleCaps: return "InfeasibleCaps";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::InvalidConstants: return "InvalidConstants";
    case ErrorCode::ZeroProbability: return "ZeroProbability";
    case ErrorCode::InfeasibleBounds: return "InfeasibleBounds";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::DegenerateGap: return "DegenerateGap";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

void normalize_simplex_row(std::span<double> row) {
    if (row.empty()) throw Error(ErrorCode::DimensionMismatch, "empty distribution");
    double sum = 0.0;
    for (double& x : row) {
        if (!std::isfinite(x)) throw Error(ErrorCode::NegativeMass, "non-finite probability");
        if (x < 0.0) {
            if (x < -kSimplexTolerance)
                throw Error(ErrorCode::NegativeMass, "entry " + std::to_string(x) + " < 0");
            x = 0.0;
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
        throw Error(ErrorCode::RowSumMismatch, "row sums to " + std::to_string(sum));
    for (double& x : row) x /= sum;
}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    normalize_simplex_row(probs_);
}

Distribution Distribution::uniform(std::size_t size) {
    if (size == 0) throw Error(ErrorCode::DimensionMismatch, "empty distribution");
    return Distribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Distribution Distribution::point_mass(std::size_t size, std::size_t at) {
    if (at >= size) throw Error(ErrorCode::DimensionMismatch, "point mass outside support");
    std::vector<double> p(size, 0.0);
    p[at] = 1.0;
    return Distribution(std::move(p));
}

TransitionKernel::TransitionKernel(std::size_t states, std::size_t actions, std::vector<double> flat)
    : states_(states), actions_(actions), data_(std::move(flat)) {
    if (states == 0 || actions == 0)
        throw Error(ErrorCode::InvalidArgument, "kernel needs S >= 1 and A >= 1");
    if (data_.size() != states * actions * states)
        throw Error(ErrorCode::ShapeMismatch, "kernel data has " + std::to_string(data_.size()) +
                                                  " entries, expected S*A*S");
    for (std::size_t r = 0; r < states * actions; ++r) {
        try {
            normalize_simplex_row(std::span<double>(data_.data() + r * states, states));
        } catch (const Error& e) {
            throw Error(e.code(), "row (s=" + std::to_string(r / actions) +
                                      ", a=" + std::to_string(r % actions) + "): " + e.what());
        }
    }
}

TransitionKernel TransitionKernel::uniform(std::size_t states, std::size_t actions) {
    return {states, actions,
            std::vector<double>(states * actions * states, 1.0 / static_cast<double>(states))};
}

Distribution TransitionKernel::distribution(std::size_t s, std::size_t a) const {
    auto r = row(s, a);
    return Distribution(std::vector<double>(r.begin(), r.end()));
}

TransitionKernel validate_kernel(std::size_t states, std::size_t actions, std::vector<double> flat) {
    return {states, actions, std::move(flat)};
}

TabularMDP::TabularMDP(TransitionKernel kernel, std::vector<double> rewards, double gamma,
                       bool rewards_rescaled)
    : kernel_(std::move(kernel)), rewards_(std::move(rewards)), gamma_(gamma),
      rescaled_(rewards_rescaled) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw Error(ErrorCode::InvalidArgument, "discount must lie strictly inside (0,1)");
    if (rewards_.size() != kernel_.num_states() * kernel_.num_actions())
        throw Error(ErrorCode::ShapeMismatch, "reward table must be S*A");
}

TabularMDP TabularMDP::with_kernel(TransitionKernel kernel) const {
    if (!kernel.same_shape(kernel_)) throw Error(ErrorCode::ShapeMismatch, "kernel shape differs");
    return {std::move(kernel), rewards_, gamma_, rescaled_};
}

TabularMDP TabularMDP::with_rescaled_rewards() const {
    auto [lo, hi] = std::minmax_element(rewards_.begin(), rewards_.end());
    const double low = *lo, span = *hi - *lo;
    std::vector<double> scaled(rewards_.size(), 0.0);
    if (span > 0.0)
        std::transform(rewards_.begin(), rewards_.end(), scaled.begin(),
                       [&](double r) { return (r - low) / span; });
    return {kernel_, std::move(scaled), gamma_, true};
}

Policy Policy::deterministic(std::vector<std::size_t> actions, std::size_t num_actions) {
    for (auto a : actions)
        if (a >= num_actions) throw Error(ErrorCode::InvalidArgument, "action index out of range");
    Policy p;
    p.states_ = actions.size();
    p.num_actions_ = num_actions;
    p.actions_ = std::move(actions);
    return p;
}

Policy Policy::stochastic(std::size_t states, std::size_t actions, std::vector<double> probs) {
    if (probs.size() != states * actions)
        throw Error(ErrorCode::ShapeMismatch, "policy table must be S*A");
    for (std::size_t s = 0; s < states; ++s)
        normalize_simplex_row(std::span<double>(probs.data() + s * actions, actions));
    Policy p;
    p.states_ = states;
    p.num_actions_ = actions;
    p.probs_ = std::move(probs);
    return p;
}

Policy Policy::uniform(std::size_t states, std::size_t actions) {
    return stochastic(states, actions,
                      std::vector<double>(states * actions, 1.0 / static_cast<double>(actions)));
}

double Policy::probability(std::size_t s, std::size_t a) const {
    if (!actions_.empty()) return actions_[s] == a ? 1.0 : 0.0;
    return probs_[s * num_actions_ + a];
}

UncertaintySet::UncertaintySet(TransitionKernel center, double radius)
    : UncertaintySet(std::move(center), std::vector<double>{radius}) {}

UncertaintySet::UncertaintySet(TransitionKernel center, std::vector<double> radii)
    : center_(std::move(center)), radii_(std::move(radii)) {
    const auto pairs = center_.num_states() * center_.num_actions();
    if (radii_.size() != 1 && radii_.size() != pairs)
        throw Error(ErrorCode::ShapeMismatch, "radius must be scalar or S*A");
    for (double r : radii_)
        if (!(r >= 0.0 && r <= 1.0))
            throw Error(ErrorCode::InvalidRadius, "TV radius " + std::to_string(r) + " not in [0,1]");
}

bool UncertaintySet::is_point() const noexcept {
    return std::all_of(radii_.begin(), radii_.end(), [](double r) { return r == 0.0; });
}

} // namespace ribe
