#include "check.hpp"
#include "oracles.hpp"

#include "ribe/distances.hpp"
#include "ribe/robust_dp.hpp"
#include "ribe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace ribe;

namespace {

TabularMDP random_mdp(CounterRng& rng, std::size_t S, std::size_t A, double gamma) {
    std::vector<double> flat;
    for (std::size_t r = 0; r < S * A; ++r) {
        const auto row = oracle::random_simplex(rng, S);
        flat.insert(flat.end(), row.begin(), row.end());
    }
    std::vector<double> rewards(S * A);
    for (auto& x : rewards) x = rng.uniform();
    return {TransitionKernel(S, A, std::move(flat)), std::move(rewards), gamma};
}

// A kernel inside the TV ball of `center`: each row mixed toward a random row.
TransitionKernel perturbed(CounterRng& rng, const TransitionKernel& center, double radius) {
    const std::size_t S = center.num_states(), A = center.num_actions();
    std::vector<double> flat;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto q = oracle::random_simplex(rng, S);
            const auto p = center.row(s, a);
            const double d = oracle::tv(p, q);
            const double w = d > 0.0 ? std::min(1.0, radius / d) * rng.uniform() : 0.0;
            for (std::size_t j = 0; j < S; ++j) flat.push_back((1.0 - w) * p[j] + w * q[j]);
        }
    return {S, A, std::move(flat)};
}

} // namespace

TEST_SUITE("robust_dp") {

TEST_CASE("support function worked example") {
    const std::vector<double> p0{0.5, 0.5, 0.0}, v{1.0, 0.0, 2.0};
    const auto r = support_tv(p0, v, 0.2);
    CHECK(r.value == doctest::Approx(0.3).epsilon(1e-12));
    check_vector_near(r.worst_case_distribution.probs(), std::vector<double>{0.3, 0.7, 0.0}, 1e-12);
}

TEST_CASE("support function at a point mass") {
    const std::vector<double> p0{0.0, 0.0, 1.0, 0.0}, v{3.0, -1.0, 5.0, 2.0};
    const auto r = support_tv(p0, v, 0.5);
    CHECK(r.value == doctest::Approx(0.5 * -1.0 + 0.5 * 5.0));
}

TEST_CASE("support function edge radii") {
    const std::vector<double> p0{0.2, 0.3, 0.5}, v{4.0, -2.0, 1.0};
    CHECK(support_tv(p0, v, 0.0).value == doctest::Approx(0.8 - 0.6 + 0.5));
    CHECK(support_tv(p0, v, 1.0).value == doctest::Approx(-2.0));
    const std::vector<double> flat{2.0, 2.0, 2.0};
    CHECK(support_tv(p0, flat, 0.7).value == doctest::Approx(2.0));
    CHECK_ERROR_CODE(support_tv(p0, v, 1.1), ErrorCode::InvalidRadius);
    CHECK_ERROR_CODE(support_tv(p0, v, -0.01), ErrorCode::InvalidRadius);
    CHECK_ERROR_CODE(support_tv(p0, std::vector<double>{1.0, 2.0}, 0.1), ErrorCode::DimensionMismatch);
}

TEST_CASE("support function agrees with the LP oracle") {
    CounterRng rng(stream_key(21));
    for (int t = 0; t < 300; ++t) {
        const std::size_t S = 2 + rng.below(19);
        auto p0 = oracle::random_simplex(rng, S);
        if (t % 5 == 0) p0[rng.below(S)] = 0.0;
        double mass = 0.0;
        for (double x : p0) mass += x;
        for (auto& x : p0) x /= mass;
        std::vector<double> v(S);
        for (auto& x : v) x = rng.uniform() * 20.0 - 10.0;
        if (t % 7 == 0) v[1] = v[0];
        const double R = rng.uniform();
        const auto fast = support_tv(p0, v, R);
        const auto slow = support_tv_lp_oracle(p0, v, R);
        CHECK(fast.value == doctest::Approx(slow.value).epsilon(1e-9));
        const auto q = fast.worst_case_distribution.probs();
        CHECK(oracle::tv(q, p0) <= R + 1e-12);
        CHECK(expected_value(q, v) == doctest::Approx(fast.value).epsilon(1e-12));
    }
}

TEST_CASE("support function is nonincreasing and convex in the radius") {
    CounterRng rng(stream_key(22));
    for (int t = 0; t < 50; ++t) {
        const std::size_t S = 2 + rng.below(8);
        const auto p0 = oracle::random_simplex(rng, S);
        std::vector<double> v(S);
        for (auto& x : v) x = rng.uniform();
        std::vector<double> vals;
        for (int k = 0; k <= 20; ++k) vals.push_back(support_tv(p0, v, k / 20.0).value);
        for (std::size_t k = 1; k < vals.size(); ++k) CHECK(vals[k] <= vals[k - 1] + 1e-14);
        for (std::size_t k = 1; k + 1 < vals.size(); ++k)
            CHECK(vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-12);
    }
}

TEST_CASE("robust bellman operator is a contraction") {
    CounterRng rng(stream_key(23));
    for (int t = 0; t < 40; ++t) {
        const auto mdp = random_mdp(rng, 2 + rng.below(6), 1 + rng.below(3), 0.9);
        const UncertaintySet unc(mdp.kernel(), rng.uniform() * 0.5);
        std::vector<double> v1(mdp.num_states()), v2(mdp.num_states());
        for (auto& x : v1) x = rng.uniform() * 10.0;
        for (auto& x : v2) x = rng.uniform() * 10.0;
        const auto t1 = robust_bellman_update(mdp, unc, v1), t2 = robust_bellman_update(mdp, unc, v2);
        double num = 0.0, den = 0.0;
        for (std::size_t s = 0; s < v1.size(); ++s) {
            num = std::max(num, std::abs(t1[s] - t2[s]));
            den = std::max(den, std::abs(v1[s] - v2[s]));
        }
        CHECK(num <= mdp.gamma() * den + 1e-12);
    }
}

TEST_CASE("zero radius reduces to standard dynamic programming") {
    CounterRng rng(stream_key(24));
    for (int t = 0; t < 20; ++t) {
        const auto mdp = random_mdp(rng, 2 + rng.below(4), 2 + rng.below(2), 0.9);
        const auto plan = robust_value_iteration(mdp, UncertaintySet(mdp.kernel(), 0.0));
        CHECK(plan.converged);
        check_vector_near(plan.value, oracle::brute_force_optimal(mdp), 1e-6);
        const auto vi = value_iteration(mdp);
        check_vector_near(plan.value, vi.value, 1e-12);
        const auto pi = Policy::uniform(mdp.num_states(), mdp.num_actions());
        const auto ev = robust_policy_evaluation(mdp, UncertaintySet(mdp.kernel(), 0.0), pi);
        check_vector_near(ev.value, oracle::policy_value(mdp, pi), 1e-6);
    }
}

TEST_CASE("robust value is a fixed point and bounded by nominal values") {
    CounterRng rng(stream_key(25));
    for (int t = 0; t < 20; ++t) {
        const auto mdp = random_mdp(rng, 3 + rng.below(4), 2, 0.9);
        const double R = 0.05 + 0.3 * rng.uniform();
        const UncertaintySet unc(mdp.kernel(), R);
        const auto plan = robust_value_iteration(mdp, unc);
        REQUIRE(plan.converged);
        const auto tv = robust_bellman_update(mdp, unc, plan.value);
        check_vector_near(tv, plan.value, 1e-7);
        const auto nominal = value_iteration(mdp);
        for (std::size_t s = 0; s < mdp.num_states(); ++s) CHECK(plan.value[s] <= nominal.value[s] + 1e-9);

        // Evaluating the greedy policy reproduces the robust optimum.
        const auto ev = robust_policy_evaluation(mdp, unc, plan.policy);
        check_vector_near(ev.value, plan.value, 1e-6);

        // The robust value lower-bounds the policy's value under any kernel in the ball.
        for (int k = 0; k < 5; ++k) {
            const auto other = mdp.with_kernel(perturbed(rng, mdp.kernel(), R));
            const auto exact = oracle::policy_value(other, plan.policy);
            for (std::size_t s = 0; s < mdp.num_states(); ++s) CHECK(ev.value[s] <= exact[s] + 1e-6);
        }
    }
}

TEST_CASE("robust value decreases with the radius") {
    CounterRng rng(stream_key(26));
    const auto mdp = random_mdp(rng, 5, 3, 0.9);
    std::vector<double> prev;
    for (double R : {0.0, 0.1, 0.2, 0.4, 0.8}) {
        const auto plan = robust_value_iteration(mdp, UncertaintySet(mdp.kernel(), R));
        if (!prev.empty())
            for (std::size_t s = 0; s < prev.size(); ++s) CHECK(plan.value[s] <= prev[s] + 1e-9);
        prev = plan.value;
    }
}

TEST_CASE("ties resolve to the lowest action index") {
    const TransitionKernel k(2, 3, std::vector<double>(12, 0.5));
    const TabularMDP mdp(k, {1, 1, 1, 0, 2, 2}, 0.9);
    const auto plan = robust_value_iteration(mdp, UncertaintySet(k, 0.1));
    CHECK(plan.policy.action(0) == 0);
    CHECK(plan.policy.action(1) == 1);
}

TEST_CASE("iteration cap reports non-convergence") {
    CounterRng rng(stream_key(27));
    const auto mdp = random_mdp(rng, 4, 2, 0.99);
    const auto plan = robust_value_iteration(mdp, UncertaintySet(mdp.kernel(), 0.1), {5, 1e-12});
    CHECK_FALSE(plan.converged);
    CHECK(plan.iterations == 5);
}

TEST_CASE("shape errors") {
    const TabularMDP mdp(TransitionKernel::uniform(2, 2), {0, 0, 0, 0}, 0.9);
    CHECK_ERROR_CODE(robust_value_iteration(mdp, UncertaintySet(TransitionKernel::uniform(3, 2), 0.1)),
                     ErrorCode::ShapeMismatch);
    CHECK(average_value(std::vector<double>{1.0, 2.0, 6.0}) == doctest::Approx(3.0));
}

} // TEST_SUITE
