#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ribe {

/// Absolute tolerance for simplex membership; drift below it is renormalized away.
inline constexpr double kSimplexTolerance = 1e-9;

using ValueFunction = std::vector<double>;

/**
 * Checks that `row` is a probability vector within kSimplexTolerance and
 * renormalizes it in place. Throws NegativeMass or RowSumMismatch.
 */
void normalize_simplex_row(std::span<double> row);

/// A point of the probability simplex over a finite state space.
class Distribution {
public:
    Distribution() = default;
    explicit Distribution(std::vector<double> probs);

    static Distribution uniform(std::size_t size);
    static Distribution point_mass(std::size_t size, std::size_t at);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }
    const std::vector<double>& vector() const noexcept { return probs_; }

    auto begin() const noexcept { return probs_.begin(); }
    auto end() const noexcept { return probs_.end(); }

    friend bool operator==(const Distribution&, const Distribution&) = default;

private:
    std::vector<double> probs_;
};

/**
 * Dense transition kernel P(s'|s,a), stored row-major as (s, a, s').
 * Every row is validated on construction.
 */
class TransitionKernel {
public:
    TransitionKernel() = default;
    TransitionKernel(std::size_t states, std::size_t actions, std::vector<double> flat);

    static TransitionKernel uniform(std::size_t states, std::size_t actions);

    std::size_t num_states() const noexcept { return states_; }
    std::size_t num_actions() const noexcept { return actions_; }

    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {data_.data() + (s * actions_ + a) * states_, states_};
    }
    Distribution distribution(std::size_t s, std::size_t a) const;

    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const TransitionKernel& other) const noexcept {
        return states_ == other.states_ && actions_ == other.actions_;
    }

    friend bool operator==(const TransitionKernel&, const TransitionKernel&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> data_;
};

/// Validates (and renormalizes) a flat kernel; equivalent to constructing one.
TransitionKernel validate_kernel(std::size_t states, std::size_t actions, std::vector<double> flat);

/// Finite discounted MDP. Rewards are indexed (s, a).
class TabularMDP {
public:
    TabularMDP() = default;
    TabularMDP(TransitionKernel kernel, std::vector<double> rewards, double gamma,
               bool rewards_rescaled = false);

    const TransitionKernel& kernel() const noexcept { return kernel_; }
    const std::vector<double>& rewards() const noexcept { return rewards_; }
    double reward(std::size_t s, std::size_t a) const { return rewards_[s * num_actions() + a]; }
    double gamma() const noexcept { return gamma_; }
    bool rewards_rescaled() const noexcept { return rescaled_; }

    std::size_t num_states() const noexcept { return kernel_.num_states(); }
    std::size_t num_actions() const noexcept { return kernel_.num_actions(); }

    /// Same MDP with a different kernel (shape must match).
    TabularMDP with_kernel(TransitionKernel kernel) const;
    /// Rewards mapped affinely onto [0, 1]; constant rewards map to 0.
    TabularMDP with_rescaled_rewards() const;

    friend bool operator==(const TabularMDP&, const TabularMDP&) = default;

private:
    TransitionKernel kernel_;
    std::vector<double> rewards_;
    double gamma_ = 0.95;
    bool rescaled_ = false;
};

/// Deterministic or stochastic stationary policy.
class Policy {
public:
    Policy() = default;
    static Policy deterministic(std::vector<std::size_t> actions, std::size_t num_actions);
    static Policy stochastic(std::size_t states, std::size_t actions, std::vector<double> probs);
    static Policy uniform(std::size_t states, std::size_t actions);

    bool is_deterministic() const noexcept { return !actions_.empty() || probs_.empty(); }
    std::size_t num_states() const noexcept { return states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }

    double probability(std::size_t s, std::size_t a) const;
    /// Only valid for deterministic policies.
    std::size_t action(std::size_t s) const { return actions_[s]; }
    const std::vector<std::size_t>& actions() const noexcept { return actions_; }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    std::size_t states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::size_t> actions_;
    std::vector<double> probs_;
};

/// (s,a)-rectangular TV ball around a center kernel. Radii are scalar or per (s,a).
class UncertaintySet {
public:
    UncertaintySet() = default;
    UncertaintySet(TransitionKernel center, double radius);
    UncertaintySet(TransitionKernel center, std::vector<double> radii);

    const TransitionKernel& center() const noexcept { return center_; }
    double radius(std::size_t s, std::size_t a) const {
        return radii_.size() == 1 ? radii_[0] : radii_[s * center_.num_actions() + a];
    }
    bool is_point() const noexcept;

private:
    TransitionKernel center_;
    std::vector<double> radii_;
};

} // namespace ribe
