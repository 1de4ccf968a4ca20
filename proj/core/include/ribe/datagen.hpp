#pragma once

#include "ribe/types.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ribe {

/// Offline dataset reduced to N_{s,a}(s').
class TransitionCounts {
public:
    TransitionCounts() = default;
    TransitionCounts(std::size_t states, std::size_t actions)
        : states_(states), actions_(actions), counts_(states * actions * states, 0) {}

    std::size_t num_states() const noexcept { return states_; }
    std::size_t num_actions() const noexcept { return actions_; }

    std::span<const std::uint64_t> row(std::size_t s, std::size_t a) const {
        return {counts_.data() + (s * actions_ + a) * states_, states_};
    }
    std::uint64_t pair_total(std::size_t s, std::size_t a) const;
    std::uint64_t at(std::size_t s, std::size_t a, std::size_t next) const {
        return counts_[(s * actions_ + a) * states_ + next];
    }
    void add(std::size_t s, std::size_t a, std::size_t next, std::uint64_t k = 1) {
        counts_[(s * actions_ + a) * states_ + next] += k;
    }
    const std::vector<std::uint64_t>& data() const noexcept { return counts_; }

    friend bool operator==(const TransitionCounts&, const TransitionCounts&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<std::uint64_t> counts_;
};

struct SamplingPlan {
    enum class Mode { BalancedPerPair, UniformPairs };
    Mode mode = Mode::BalancedPerPair;
    /// n per (s,a) in balanced mode, N_total in uniform mode.
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
};

/**
 * Draws successors from the kernel by inverse CDF. Each (s,a) owns a
 * counter-based substream and its k-th draw depends only on (seed, s, a, k),
 * so smaller plans with the same seed produce nested datasets.
 */
TransitionCounts sample_counts(const TransitionKernel& target, const SamplingPlan& plan);

/// Running sums of a probability row, for sample_index.
std::vector<double> row_cdf(std::span<const double> row);

/// Index i with cdf[i-1] <= u < cdf[i]; the last positive-mass index when rounding overshoots.
std::size_t sample_index(std::span<const double> cdf, double u);

struct CountsSummary {
    double coverage_fraction = 0.0;
    std::uint64_t min_n = 0;
    std::uint64_t total = 0;
};

CountsSummary counts_summary(const TransitionCounts& counts);

/// Sparse CSV: header `s,a,s_next,count`, one line per nonzero entry.
void write_counts_csv(std::ostream& out, const TransitionCounts& counts);
TransitionCounts read_counts_csv(std::istream& in, std::size_t states, std::size_t actions);

} // namespace ribe
