#include "check.hpp"
#include "oracles.hpp"

#include "ribe/datagen.hpp"
#include "ribe/distances.hpp"
#include "ribe/ibe.hpp"
#include "ribe/lp.hpp"
#include "ribe/rng.hpp"
#include "ribe/robust_dp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

using namespace ribe;

namespace {

const std::vector<std::uint64_t> kCounts31{3, 1};
const Distribution kHalf({0.5, 0.5});

// max g'q over the W1 ball by an LP on the coupling (q is the column marginal).
double w1_ball_lp(std::span<const double> p, const CostMatrix& cost, double radius,
                  std::span<const double> g) {
    const std::size_t n = p.size();
    lp::LinearProgram program(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) program.objective[i * n + j] = -g[j];
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(n * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) row[i * n + j] = 1.0;
        program.add(row, lp::Sense::Equal, p[i]);
    }
    program.add(cost.values(), lp::Sense::LessEqual, radius);
    return -lp::solve(program).objective;
}

// Grid-oracle comparison for a single row (S <= 3).
template <class Feasible>
void check_against_grid(std::span<const std::uint64_t> counts, const Distribution& got, Feasible&& feasible) {
    const auto grid = oracle::grid_search(counts, got.probs(), feasible, 1000);
    REQUIRE(grid.best > oracle::kNegInf);
    CHECK(grid.distance <= 2e-3);
    CHECK(log_likelihood(counts, got.probs()) >= grid.best - 1e-9);
}

} // namespace

TEST_SUITE("ibe_estimators") {

TEST_CASE("log likelihood and vanilla MLE") {
    CHECK(log_likelihood(kCounts31, std::vector<double>{0.75, 0.25}) ==
          doctest::Approx(3 * std::log(0.75) + std::log(0.25)));
    CHECK(log_likelihood(kCounts31, std::vector<double>{1.0, 0.0}) ==
          -std::numeric_limits<double>::infinity());
    CHECK(log_likelihood(std::vector<std::uint64_t>{0, 2}, std::vector<double>{0.0, 1.0}) == 0.0);
    check_vector_near(vanilla_mle(kCounts31).probs(), std::vector<double>{0.75, 0.25}, 1e-15);
    CHECK_ERROR_CODE(vanilla_mle(std::vector<std::uint64_t>{0, 0}), ErrorCode::EmptyCounts);
}

TEST_CASE("worked examples on two states") {
    const std::vector<double> want{0.6, 0.4};
    check_vector_near(estimate_distance_tv(kCounts31, kHalf, 0.1).distribution.probs(), want, 1e-6);
    check_vector_near(
        estimate_distance_w1(kCounts31, kHalf, CostMatrix::discrete(2), 0.1).distribution.probs(),
        want, 1e-6);
    const auto phi = default_moment_features(2);
    const std::vector<double> mu{0.5, 0.5}, beta{0.1, 0.1};
    check_vector_near(estimate_moment(kCounts31, phi, mu, beta).distribution.probs(), want, 1e-6);
    check_vector_near(estimate_density(kCounts31, kHalf, std::vector<double>{1.2, 1.2}).distribution.probs(),
                      want, 1e-12);
    check_vector_near(estimate_density(kCounts31, kHalf, std::vector<double>{1.5, 1.5}).distribution.probs(),
                      std::vector<double>{0.75, 0.25}, 1e-12);
}

TEST_CASE("lds worked example") {
    const std::vector<double> psi{0.0, 1.0}, theta0{0.0};
    const auto est = estimate_lds(kCounts31, psi, theta0, std::vector<std::size_t>{});
    REQUIRE(est.theta.size() == 1);
    CHECK(est.theta[0] == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-7));
    check_vector_near(est.distribution.probs(), std::vector<double>{0.75, 0.25}, 1e-8);
}

TEST_CASE("feasible MLE is returned unchanged") {
    const std::vector<std::uint64_t> counts{5, 5};
    const auto tv = estimate_distance_tv(counts, Distribution({0.45, 0.55}), 0.2);
    check_vector_near(tv.distribution.probs(), std::vector<double>{0.5, 0.5}, 1e-15);
    CHECK(tv.constraint_slack > 0.0);
    const auto zero = estimate_distance_tv(kCounts31, kHalf, 0.0);
    check_vector_near(zero.distribution.probs(), kHalf.probs(), 0.0);
}

TEST_CASE("argument validation") {
    CHECK_ERROR_CODE(estimate_distance_tv(std::vector<std::uint64_t>{0, 0}, kHalf, 0.1),
                     ErrorCode::EmptyCounts);
    CHECK_ERROR_CODE(estimate_distance_tv(kCounts31, kHalf, 1.5), ErrorCode::InvalidRadius);
    CHECK_ERROR_CODE(estimate_distance_tv(std::vector<std::uint64_t>{1, 1, 1}, kHalf, 0.1),
                     ErrorCode::DimensionMismatch);
    CHECK_ERROR_CODE(estimate_density(kCounts31, kHalf, std::vector<double>{0.5, 0.5}),
                     ErrorCode::InfeasibleCaps);
    const auto phi = default_moment_features(2);
    CHECK_ERROR_CODE(estimate_moment(kCounts31, phi, std::vector<double>{2.0, 2.0},
                                     std::vector<double>{0.1, 0.1}),
                     ErrorCode::InfeasibleConstraint);
}

TEST_CASE("w1 ball linear oracle matches the coupling LP") {
    CounterRng rng(stream_key(31));
    for (int t = 0; t < 100; ++t) {
        const std::size_t S = 2 + rng.below(7);
        std::vector<std::vector<double>> pts(S, std::vector<double>(2));
        for (auto& pt : pts)
            for (auto& x : pt) x = rng.uniform();
        const auto cost = CostMatrix::euclidean(pts);
        const auto p = oracle::random_simplex(rng, S);
        std::vector<double> g(S);
        for (auto& x : g) x = rng.uniform() * 4.0 - 2.0;
        const double R = rng.uniform() * 0.6;
        const auto q = w1_ball_lmo(p, cost, R, g);
        double mass = 0.0;
        for (double x : q) {
            CHECK(x >= -1e-12);
            mass += x;
        }
        CHECK(mass == doctest::Approx(1.0));
        CHECK(w1_distance(p, q, cost) <= R + 1e-9);
        CHECK(oracle::w1_lp(p, q, cost.values()) <= R + 1e-9);
        CHECK(expected_value(q, g) == doctest::Approx(w1_ball_lp(p, cost, R, g)).epsilon(1e-9));
    }
}

TEST_CASE("distance estimators match the simplex grid") {
    CounterRng rng(stream_key(32));
    for (int t = 0; t < 12; ++t) {
        const std::size_t S = 2 + (t % 2);
        const auto p = Distribution(oracle::random_simplex(rng, S, 0.2));
        const auto truth = oracle::random_simplex(rng, S, 0.2);
        const auto counts = oracle::multinomial(rng, truth, 5 + rng.below(40));
        const double R = 0.02 + 0.2 * rng.uniform();
        const auto tv = estimate_distance_tv(counts, p, R);
        CHECK(tv.constraint_slack >= -1e-9);
        check_against_grid(counts, tv.distribution, [&](const std::array<double, 4>& q) {
            return oracle::tv(std::span<const double>(q.data(), S), p.probs()) <= R + 1e-12;
        });

        std::vector<double> x(S);
        std::vector<std::vector<double>> pts(S);
        for (std::size_t j = 0; j < S; ++j) pts[j] = {x[j] = static_cast<double>(j) * 0.7};
        const auto cost = CostMatrix::euclidean(pts);
        const auto w1 = estimate_distance_w1(counts, p, cost, R);
        CHECK(w1.constraint_slack >= -1e-9);
        check_against_grid(counts, w1.distribution, [&](const std::array<double, 4>& q) {
            return oracle::line_w1(std::span<const double>(q.data(), S), p.probs(), x) <= R + 1e-12;
        });
    }
}

TEST_CASE("moment and density estimators match the simplex grid") {
    CounterRng rng(stream_key(33));
    for (int t = 0; t < 12; ++t) {
        const std::size_t S = 2 + (t % 2);
        const auto p = Distribution(oracle::random_simplex(rng, S, 0.2));
        const auto truth = oracle::random_simplex(rng, S, 0.2);
        const auto counts = oracle::multinomial(rng, truth, 5 + rng.below(40));

        const auto phi = default_moment_features(S);
        std::vector<double> mu(2, 0.0), beta{0.02 + 0.1 * rng.uniform(), 0.02 + 0.1 * rng.uniform()};
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < S; ++j) mu[k] += phi[k * S + j] * p[j];
        const auto mom = estimate_moment(counts, phi, mu, beta);
        CHECK(mom.constraint_slack >= -1e-9);
        check_against_grid(counts, mom.distribution, [&](const std::array<double, 4>& q) {
            for (std::size_t k = 0; k < 2; ++k) {
                double m = 0.0;
                for (std::size_t j = 0; j < S; ++j) m += phi[k * S + j] * q[j];
                if (std::abs(m - mu[k]) > beta[k] + 1e-12) return false;
            }
            return true;
        });

        std::vector<double> caps(S);
        for (auto& c : caps) c = 1.0 + rng.uniform();
        const auto den = estimate_density(counts, p, caps);
        CHECK(den.constraint_slack >= -1e-12);
        check_against_grid(counts, den.distribution, [&](const std::array<double, 4>& q) {
            for (std::size_t j = 0; j < S; ++j)
                if (q[j] > caps[j] * p[j] + 1e-12) return false;
            return true;
        });
    }
}

TEST_CASE("line-bisection grid search agrees with the exhaustive one") {
    CounterRng rng(stream_key(35));
    for (int t = 0; t < 40; ++t) {
        const std::size_t S = 3 + (t % 2);
        const int steps = S == 4 ? 60 : 200;
        const auto p = oracle::random_simplex(rng, S, 0.1);
        auto counts = oracle::multinomial(rng, oracle::random_simplex(rng, S), 1 + rng.below(30));
        if (t % 3 == 0) counts[rng.below(S)] = 0;
        if (t % 7 == 0) {
            std::fill(counts.begin(), counts.end(), 0);
            counts[rng.below(S)] = 4;
        }
        const double R = 0.02 + 0.3 * rng.uniform();
        std::vector<double> probe(S, 1.0 / static_cast<double>(S));
        auto sub = [&](const std::array<double, 4>& q) { return std::span<const double>(q.data(), S); };
        const auto slow = oracle::grid_search(counts, probe, [&](const std::array<double, 4>& q) {
            return oracle::tv(sub(q), p) <= R;
        }, steps);
        const auto fast = oracle::grid_search_convex(counts, probe, [&](const std::array<double, 4>& q) {
            return oracle::tv(sub(q), p) - R;
        }, steps);
        CHECK(fast.best == doctest::Approx(slow.best).epsilon(1e-12));
        CHECK(fast.distance == doctest::Approx(slow.distance).epsilon(1e-12));

        std::vector<double> caps(S);
        for (auto& c : caps) c = 1.0 + 1.5 * rng.uniform();
        auto over = [&](const std::array<double, 4>& q) {
            double v = -1.0;
            for (std::size_t j = 0; j < S; ++j) v = std::max(v, q[j] - caps[j] * p[j]);
            return v;
        };
        const auto slow_d = oracle::grid_search(counts, probe, [&](const auto& q) { return over(q) <= 0.0; }, steps);
        const auto fast_d = oracle::grid_search_convex(counts, probe, over, steps);
        CHECK(fast_d.best == doctest::Approx(slow_d.best).epsilon(1e-12));
        CHECK(fast_d.distance == doctest::Approx(slow_d.distance).epsilon(1e-12));
    }
}

TEST_CASE("density water-filling satisfies the optimality conditions") {
    CounterRng rng(stream_key(34));
    for (int t = 0; t < 200; ++t) {
        const std::size_t S = 2 + rng.below(15);
        const auto p = Distribution(oracle::random_simplex(rng, S));
        std::vector<double> caps(S);
        for (auto& c : caps) c = 1.0 + 2.0 * rng.uniform();
        auto counts = oracle::multinomial(rng, oracle::random_simplex(rng, S), 1 + rng.below(60));
        const auto q = estimate_density(counts, p, caps).distribution;
        // Uncapped coordinates with counts share one ratio N_j / q_j, capped ones exceed it.
        double lambda = -1.0;
        for (std::size_t j = 0; j < S; ++j) {
            CHECK(q[j] <= caps[j] * p[j] + 1e-12);
            if (counts[j] > 0 && q[j] < caps[j] * p[j] - 1e-12) {
                const double r = static_cast<double>(counts[j]) / q[j];
                if (lambda < 0.0) lambda = r;
                CHECK(r == doctest::Approx(lambda).epsilon(1e-9));
            }
        }
        if (lambda > 0.0)
            for (std::size_t j = 0; j < S; ++j)
                if (counts[j] > 0 && q[j] >= caps[j] * p[j] - 1e-12)
                    CHECK(static_cast<double>(counts[j]) / q[j] >= lambda * (1 - 1e-9));
    }
}

TEST_CASE("estimators are optimal over their feasible sets") {
    // Any feasible point, including the source row, has no larger likelihood.
    CounterRng rng(stream_key(35));
    for (int t = 0; t < 100; ++t) {
        const std::size_t S = 2 + rng.below(10);
        const auto p = Distribution(oracle::random_simplex(rng, S, 0.05));
        const auto counts = oracle::multinomial(rng, oracle::random_simplex(rng, S, 0.05), 1 + rng.below(200));
        const double R = 0.3 * rng.uniform();
        const auto tv = estimate_distance_tv(counts, p, R);
        CHECK(tv.converged);
        CHECK(tv.log_likelihood >= log_likelihood(counts, p.probs()) - 1e-9);
        CHECK(oracle::tv(tv.distribution.probs(), p.probs()) <= R + 1e-9);
        CHECK(tv.log_likelihood <= log_likelihood(counts, vanilla_mle(counts).probs()) + 1e-9);
        // Mixing toward a random in-ball point cannot improve the likelihood.
        const auto other = oracle::random_simplex(rng, S);
        const double d = oracle::tv(other, p.probs());
        const double w = d > 0 ? std::min(1.0, R / d) : 0.0;
        std::vector<double> cand(S);
        for (std::size_t j = 0; j < S; ++j) cand[j] = (1 - w) * p[j] + w * other[j];
        for (double lam : {0.01, 0.1, 0.5}) {
            std::vector<double> mix(S);
            for (std::size_t j = 0; j < S; ++j) mix[j] = (1 - lam) * tv.distribution[j] + lam * cand[j];
            CHECK(log_likelihood(counts, mix) <= tv.log_likelihood + 1e-7 * static_cast<double>(S));
        }
    }
}

TEST_CASE("lds score equations hold at the estimate") {
    CounterRng rng(stream_key(36));
    for (int t = 0; t < 40; ++t) {
        const std::size_t S = 4 + rng.below(6), d = 3;
        std::vector<double> psi(d * S);
        for (auto& x : psi) x = rng.uniform() * 2.0 - 1.0;
        std::vector<double> theta0(d);
        for (auto& x : theta0) x = rng.normal();
        const std::vector<std::size_t> shared{0};
        const auto truth = lds_distribution(psi, theta0);
        const std::uint64_t n = 200 + rng.below(800);
        const auto counts = oracle::multinomial(rng, truth, n);
        const auto est = estimate_lds(counts, psi, theta0, shared);
        CHECK(est.theta[0] == theta0[0]);
        const auto q = est.distribution.probs();
        for (std::size_t k = 1; k < d; ++k) {
            double emp = 0.0, model = 0.0;
            for (std::size_t j = 0; j < S; ++j) {
                emp += static_cast<double>(counts[j]) * psi[k * S + j];
                model += q[j] * psi[k * S + j];
            }
            CHECK(std::abs(emp / static_cast<double>(n) - model) <= 1e-7);
        }
    }
}

TEST_CASE("kernel assembly uses the prior for unseen pairs") {
    const TransitionKernel source(2, 2, {0.9, 0.1, 0.2, 0.8, 0.5, 0.5, 0.3, 0.7});
    TransitionCounts counts(2, 2);
    counts.add(0, 0, 1, 4);
    const auto report = estimate_kernel(counts, source, DistanceTvInfo{{0.1}}, PriorDefault::SourceKernel);
    check_vector_near(report.kernel.row(0, 0), std::vector<double>{0.8, 0.2}, 1e-6);
    check_vector_near(report.kernel.row(1, 1), source.row(1, 1), 0.0);
    CHECK(report.diagnostics.size() == 4);
    CHECK(report.diagnostics[3].fallback_used);
    CHECK_FALSE(report.diagnostics[0].fallback_used);
    const auto uni = estimate_kernel(counts, source, NoSideInfo{}, PriorDefault::Uniform);
    check_vector_near(uni.kernel.row(0, 0), std::vector<double>{0.0, 1.0}, 0.0);
    check_vector_near(uni.kernel.row(1, 0), std::vector<double>{0.5, 0.5}, 0.0);
}

TEST_CASE("derived side information is tight for the target") {
    const TransitionKernel source(2, 1, {0.5, 0.5, 0.5, 0.5}), target(2, 1, {0.75, 0.25, 0.5, 0.5});
    const auto tv = std::get<DistanceTvInfo>(derive_true_side_info(source, target, SideInfoKind::DistanceTV));
    CHECK(tv.radius[0] == doctest::Approx(0.25));
    const auto global =
        std::get<DensityInfo>(derive_true_side_info(source, target, SideInfoKind::DensityGlobal));
    CHECK(global.caps[0] == doctest::Approx(1.5));
    const auto local = std::get<DensityInfo>(derive_true_side_info(source, target, SideInfoKind::DensityLocal));
    check_vector_near(std::span<const double>(local.caps).first(2), std::vector<double>{2.5, 1.5}, 1e-12);
    CHECK_ERROR_CODE(derive_true_side_info(TransitionKernel(2, 1, {1.0, 0.0, 0.5, 0.5}), target,
                                           SideInfoKind::DensityGlobal),
                     ErrorCode::SupportMismatch);

    // With the true side information every target row is feasible.
    CounterRng rng(stream_key(37));
    const std::size_t S = 5, A = 2;
    std::vector<double> fs, ft;
    for (std::size_t r = 0; r < S * A; ++r) {
        const auto a = oracle::random_simplex(rng, S), b = oracle::random_simplex(rng, S);
        fs.insert(fs.end(), a.begin(), a.end());
        ft.insert(ft.end(), b.begin(), b.end());
    }
    const TransitionKernel ks(S, A, fs), kt(S, A, ft);
    DeriveOptions opts;
    opts.value_metric = CostMatrix::discrete(S);
    for (auto kind : {SideInfoKind::DistanceTV, SideInfoKind::DistanceW1, SideInfoKind::Moment,
                      SideInfoKind::DensityGlobal, SideInfoKind::DensityLocal, SideInfoKind::ValueAware}) {
        const auto info = derive_true_side_info(ks, kt, kind, opts);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                CHECK(row_constraint_slack(info, ks, s, a, kt.row(s, a)) >= -1e-9);
    }
}

} // TEST_SUITE
