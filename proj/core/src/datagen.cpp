#include "ribe/datagen.hpp"

#include "ribe/error.hpp"
#include "ribe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace ribe {

double CounterRng::normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t TransitionCounts::pair_total(std::size_t s, std::size_t a) const {
    const auto r = row(s, a);
    return std::accumulate(r.begin(), r.end(), std::uint64_t{0});
}

std::size_t sample_index(std::span<const double> cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it != cdf.end()) return static_cast<std::size_t>(it - cdf.begin());
    // u above the rounded total: fall back to the last state carrying mass.
    for (std::size_t i = cdf.size(); i-- > 0;)
        if (i == 0 || cdf[i] > cdf[i - 1]) return i;
    return 0;
}

namespace {

constexpr std::uint64_t kPairStreamTag = 0x5041495253ULL; // "PAIRS"

} // namespace

std::vector<double> row_cdf(std::span<const double> row) {
    std::vector<double> cdf(row.size());
    std::partial_sum(row.begin(), row.end(), cdf.begin());
    return cdf;
}

TransitionCounts sample_counts(const TransitionKernel& target, const SamplingPlan& plan) {
    const std::size_t S = target.num_states(), A = target.num_actions();
    TransitionCounts counts(S, A);
    if (plan.count == 0) return counts;

    if (plan.mode == SamplingPlan::Mode::BalancedPerPair) {
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const auto cdf = row_cdf(target.row(s, a));
                CounterRng rng(stream_key(plan.seed, s, a));
                for (std::uint64_t k = 0; k < plan.count; ++k)
                    counts.add(s, a, sample_index(cdf, rng.uniform()));
            }
        return counts;
    }

    // Uniform coverage: pick pairs from one stream, successors from per-pair streams.
    std::vector<std::uint64_t> occurrences(S * A, 0);
    CounterRng pairs(stream_key(plan.seed, kPairStreamTag));
    for (std::uint64_t k = 0; k < plan.count; ++k) ++occurrences[pairs.below(S * A)];
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto n = occurrences[s * A + a];
            if (n == 0) continue;
            const auto cdf = row_cdf(target.row(s, a));
            CounterRng rng(stream_key(plan.seed, s, a));
            for (std::uint64_t k = 0; k < n; ++k) counts.add(s, a, sample_index(cdf, rng.uniform()));
        }
    return counts;
}

CountsSummary counts_summary(const TransitionCounts& counts) {
    CountsSummary out;
    const std::size_t pairs = counts.num_states() * counts.num_actions();
    if (pairs == 0) return out;
    std::size_t covered = 0;
    out.min_n = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t s = 0; s < counts.num_states(); ++s)
        for (std::size_t a = 0; a < counts.num_actions(); ++a) {
            const auto n = counts.pair_total(s, a);
            covered += n > 0;
            out.min_n = std::min(out.min_n, n);
            out.total += n;
        }
    out.coverage_fraction = static_cast<double>(covered) / static_cast<double>(pairs);
    return out;
}

void write_counts_csv(std::ostream& out, const TransitionCounts& counts) {
    out << "s,a,s_next,count\n";
    for (std::size_t s = 0; s < counts.num_states(); ++s)
        for (std::size_t a = 0; a < counts.num_actions(); ++a)
            for (std::size_t t = 0; t < counts.num_states(); ++t)
                if (const auto k = counts.at(s, a, t); k > 0)
                    out << s << ',' << a << ',' << t << ',' << k << '\n';
}

TransitionCounts read_counts_csv(std::istream& in, std::size_t states, std::size_t actions) {
    TransitionCounts counts(states, actions);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty counts file");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::size_t s, a, t;
        std::uint64_t k;
        if (!(fields >> s >> a >> t >> k) || s >= states || a >= actions || t >= states)
            throw Error(ErrorCode::Io, "bad counts row at line " + std::to_string(lineno));
        counts.add(s, a, t, k);
    }
    return counts;
}

} // namespace ribe
