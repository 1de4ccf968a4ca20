#include "check.hpp"

#include "ribe/datagen.hpp"
#include "ribe/envs.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace ribe;

TEST_SUITE("datagen") {

TEST_CASE("sample_index boundaries") {
    const std::vector<double> cdf{0.2, 0.2, 0.7, 1.0};
    CHECK(sample_index(cdf, 0.0) == 0);
    CHECK(sample_index(cdf, 0.2) == 2);
    CHECK(sample_index(cdf, 0.69) == 2);
    CHECK(sample_index(cdf, 0.7) == 3);
    const std::vector<double> short_cdf{0.5, 0.999999999, 0.999999999};
    CHECK(sample_index(short_cdf, 0.9999999999) == 1);
    CHECK(row_cdf(std::vector<double>{0.25, 0.25, 0.5}) == std::vector<double>{0.25, 0.5, 1.0});
}

TEST_CASE("balanced sampling totals and determinism") {
    const auto pair = build_env("frozen_lake");
    const auto& k = pair.target.kernel();
    const auto a = sample_counts(k, {SamplingPlan::Mode::BalancedPerPair, 50, 4});
    const auto b = sample_counts(k, {SamplingPlan::Mode::BalancedPerPair, 50, 4});
    const auto c = sample_counts(k, {SamplingPlan::Mode::BalancedPerPair, 50, 5});
    CHECK(a == b);
    CHECK_FALSE(a == c);
    for (std::size_t s = 0; s < k.num_states(); ++s)
        for (std::size_t a_ = 0; a_ < k.num_actions(); ++a_) CHECK(a.pair_total(s, a_) == 50);
    const auto summary = counts_summary(a);
    CHECK(summary.coverage_fraction == 1.0);
    CHECK(summary.min_n == 50);
    CHECK(summary.total == 50 * 64);
    CHECK(counts_summary(sample_counts(k, {SamplingPlan::Mode::BalancedPerPair, 0, 4})).total == 0);
}

TEST_CASE("datasets are nested in the sample size") {
    const auto pair = build_env("cliff_walking");
    const auto& k = pair.target.kernel();
    const auto small = sample_counts(k, {SamplingPlan::Mode::BalancedPerPair, 10, 8});
    const auto large = sample_counts(k, {SamplingPlan::Mode::BalancedPerPair, 100, 8});
    for (std::size_t i = 0; i < small.data().size(); ++i) CHECK(small.data()[i] <= large.data()[i]);
}

TEST_CASE("uniform pair sampling draws the requested total") {
    const auto pair = build_env("frozen_lake");
    const auto counts = sample_counts(pair.target.kernel(), {SamplingPlan::Mode::UniformPairs, 1000, 2});
    const auto summary = counts_summary(counts);
    CHECK(summary.total == 1000);
    CHECK(summary.coverage_fraction > 0.9);
}

TEST_CASE("empirical frequencies approach the kernel") {
    std::vector<double> flat;
    for (int r = 0; r < 4; ++r) flat.insert(flat.end(), {0.1, 0.2, 0.3, 0.4});
    const TransitionKernel k(4, 1, flat);
    const std::uint64_t n = 200000;
    const auto counts = sample_counts(k, {SamplingPlan::Mode::BalancedPerPair, n, 1});
    for (std::size_t j = 0; j < 4; ++j) {
        const double freq = static_cast<double>(counts.at(0, 0, j)) / static_cast<double>(n);
        const double sd = std::sqrt(k.row(0, 0)[j] * (1 - k.row(0, 0)[j]) / static_cast<double>(n));
        CHECK(std::abs(freq - k.row(0, 0)[j]) <= 5.0 * sd);
    }
    const TransitionKernel zero(3, 1, {0.5, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.5});
    CHECK(sample_counts(zero, {SamplingPlan::Mode::BalancedPerPair, 10000, 3}).at(0, 0, 1) == 0);
}

TEST_CASE("counts csv round trip") {
    const auto pair = build_env("frozen_lake");
    const auto counts = sample_counts(pair.target.kernel(), {SamplingPlan::Mode::BalancedPerPair, 7, 1});
    std::stringstream buf;
    write_counts_csv(buf, counts);
    CHECK(buf.str().rfind("s,a,s_next,count\n", 0) == 0);
    const auto back = read_counts_csv(buf, 16, 4);
    CHECK(back == counts);
    std::stringstream bad("s,a,s_next,count\n0,0,99,1\n");
    CHECK_ERROR_CODE(read_counts_csv(bad, 16, 4), ErrorCode::Io);
}

} // TEST_SUITE
