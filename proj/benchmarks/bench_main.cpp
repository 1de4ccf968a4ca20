#include "ribe/datagen.hpp"
#include "ribe/distances.hpp"
#include "ribe/envs.hpp"
#include "ribe/harness.hpp"
#include "ribe/ibe.hpp"
#include "ribe/rng.hpp"
#include "ribe/robust_dp.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

using namespace ribe;

namespace {

std::vector<double> random_row(CounterRng& rng, std::size_t n) {
    std::vector<double> p(n);
    double mass = 0.0;
    for (auto& x : p) mass += x = -std::log(1.0 - rng.uniform());
    for (auto& x : p) x /= mass;
    return p;
}

void BM_SupportTv(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    CounterRng rng(stream_key(1));
    const auto p = random_row(rng, n);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(support_tv(p, v, 0.1));
}
BENCHMARK(BM_SupportTv)->Arg(16)->Arg(108)->Arg(240);

// Sweep-style call with the value order computed once.
void BM_SupportTvSorted(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    CounterRng rng(stream_key(1));
    const auto p = random_row(rng, n);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    const ValueOrder order(v);
    for (auto _ : state) benchmark::DoNotOptimize(support_tv_value(p, v, 0.1, order));
}
BENCHMARK(BM_SupportTvSorted)->Arg(16)->Arg(108)->Arg(240);

void BM_RobustValueIteration(benchmark::State& state, const char* env) {
    const auto pair = build_env(env);
    const UncertaintySet unc(pair.target.kernel(), 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(robust_value_iteration(pair.target, unc));
}
BENCHMARK_CAPTURE(BM_RobustValueIteration, frozen_lake, "frozen_lake")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RobustValueIteration, taxi, "taxi")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RobustValueIteration, cartpole, "cartpole")->Unit(benchmark::kMillisecond);

void BM_Transport(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    CounterRng rng(stream_key(2));
    const auto p = random_row(rng, n), q = random_row(rng, n);
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::abs(double(i) - double(j));
    for (auto _ : state) benchmark::DoNotOptimize(solve_transport(p, q, cost));
}
BENCHMARK(BM_Transport)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

// One full kernel estimate on Frozen Lake with oracle side information.
void BM_EstimateKernel(benchmark::State& state, const char* name) {
    const auto sc = make_scenario("frozen_lake", 0);
    const auto choice = oracle_estimator(sc, name, PriorDefault::Uniform);
    const auto counts = sample_counts(sc.pair.target.kernel(),
                                      {SamplingPlan::Mode::BalancedPerPair, static_cast<std::uint64_t>(state.range(0)), 7});
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_kernel(counts, sc.pair.source.kernel(), choice.info, choice.prior));
}
BENCHMARK_CAPTURE(BM_EstimateKernel, tv, "tv")->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EstimateKernel, w1, "w1")->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EstimateKernel, moment, "moment")->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EstimateKernel, density_local, "density_local")->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EstimateKernel, value_aware, "value_aware")->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
