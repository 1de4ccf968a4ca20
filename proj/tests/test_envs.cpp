#include "check.hpp"

#include "ribe/distances.hpp"
#include "ribe/envs.hpp"
#include "ribe/ibe.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace ribe;

TEST_SUITE("env_suite") {

TEST_CASE("environment shapes") {
    const std::vector<std::tuple<std::string, std::size_t, std::size_t>> shapes{
        {"frozen_lake", 16, 4}, {"cliff_walking", 38, 4}, {"taxi", 108, 6},   {"cartpole", 240, 2},
        {"acrobot", 144, 3},    {"pendulum", 240, 5},     {"lds_cartpole", 240, 2}};
    for (const auto& [name, S, A] : shapes) {
        CAPTURE(name);
        const auto pair = build_env(name, 3);
        CHECK(pair.name == name);
        CHECK(pair.source.num_states() == S);
        CHECK(pair.source.num_actions() == A);
        CHECK(pair.target.kernel().same_shape(pair.source.kernel()));
        CHECK(pair.source.rewards() == pair.target.rewards());
        CHECK(pair.source.gamma() == kDefaultGamma);
        CHECK(pair.features.size() == S);
        CHECK_NOTHROW(pair.ground_cost());
    }
    CHECK_ERROR_CODE(build_env("mountain_car"), ErrorCode::InvalidArgument);
}

TEST_CASE("frozen lake rows") {
    const auto pair = build_toy_text(ToyTextSpec::defaults(ToyTextEnv::FrozenLake));
    // State 6 moving left: intended 5 (a hole), opposite 7.
    const auto src = pair.source.kernel().row(6, 0);
    const double base = 0.3 + 2.0 * 0.7 / 16.0;
    CHECK(src[5] == doctest::Approx(0.3 * base));
    CHECK(src[5] == doctest::Approx(0.11625));
    CHECK(src[7] == doctest::Approx(0.7 * base));
    CHECK(src[0] == doctest::Approx(0.7 / 16.0));
    const auto tgt = pair.target.kernel().row(6, 0);
    const double tbase = 0.8 + 2.0 * 0.2 / 16.0;
    CHECK(tgt[5] == doctest::Approx(0.7 * tbase));
    CHECK(tgt[7] == doctest::Approx(0.3 * tbase));
    CHECK(pair.source.reward(6, 0) == -1.0);
    CHECK(pair.source.reward(6, 1) == 5.0);   // down into the prize cell
    CHECK(pair.source.reward(0, 2) == -0.04); // right onto frozen ice
    // Off-grid moves stay in place: state 0 moving up lands on itself.
    const auto up = pair.target.kernel().row(0, 3);
    CHECK(up[0] == doctest::Approx(0.7 * tbase));
    CHECK(up[4] == doctest::Approx(0.3 * tbase));
}

TEST_CASE("absorbing states are identical self-loops") {
    for (const auto& name : {"frozen_lake", "cliff_walking", "taxi"}) {
        CAPTURE(name);
        const auto pair = build_env(name);
        const auto& ks = pair.source.kernel();
        std::size_t absorbing = 0;
        for (std::size_t s = 0; s < ks.num_states(); ++s) {
            if (ks.row(s, 0)[s] != 1.0) continue;
            ++absorbing;
            for (std::size_t a = 0; a < ks.num_actions(); ++a) {
                CHECK(ks.row(s, a)[s] == 1.0);
                CHECK(pair.target.kernel().row(s, a)[s] == 1.0);
            }
        }
        CHECK(absorbing > 0);
    }
}

TEST_CASE("cliff walking start and cliff") {
    const auto pair = build_toy_text(ToyTextSpec::defaults(ToyTextEnv::CliffWalking));
    // Start is the first cell of the bottom row, index 36; the goal is 37.
    CHECK(pair.features[36] == std::vector<double>{3.0, 0.0});
    CHECK(pair.features[37] == std::vector<double>{3.0, 11.0});
    CHECK(pair.source.reward(36, 1) == -100.0);
    CHECK(pair.source.reward(36, 0) == -1.0);
    CHECK(pair.source.reward(35, 2) == 50.0);
    CHECK(pair.source.reward(37, 0) == 0.0);
    const auto row = pair.source.kernel().row(36, 1);
    CHECK(std::max_element(row.begin(), row.end()) - row.begin() == 36);
}

TEST_CASE("taxi pickup and dropoff") {
    const auto pair = build_toy_text(ToyTextSpec::defaults(ToyTextEnv::Taxi));
    CHECK(pair.source.reward(0, 4) == 20.0);
    CHECK(pair.source.reward(3, 4) == -10.0);
    CHECK(pair.source.reward(35 * 3 + 1, 5) == 50.0);
    CHECK(pair.source.reward(35 * 3 + 2, 5) == 0.0);
    const auto pick = pair.target.kernel().row(0, 4);
    const double base = 0.8 + 2.0 * 0.2 / 108.0;
    // Intended and opposite coincide, so the row is renormalized.
    CHECK(pick[1] == doctest::Approx(base / (base + 107.0 * 0.2 / 108.0)));
}

TEST_CASE("toy-text constants are validated") {
    auto spec = ToyTextSpec::defaults(ToyTextEnv::FrozenLake);
    spec.alpha = 1.5;
    CHECK_ERROR_CODE(build_toy_text(spec), ErrorCode::InvalidConstants);
    spec = ToyTextSpec::defaults(ToyTextEnv::FrozenLake);
    spec.gamma = 1.0;
    CHECK_ERROR_CODE(build_toy_text(spec), ErrorCode::InvalidConstants);
}

TEST_CASE("control environments are seeded and share successors") {
    const auto a = build_control(ControlSpec::defaults(ControlEnv::CartPole, 5));
    const auto b = build_control(ControlSpec::defaults(ControlEnv::CartPole, 5));
    const auto c = build_control(ControlSpec::defaults(ControlEnv::CartPole, 6));
    CHECK(a.source.kernel() == b.source.kernel());
    CHECK(a.target.kernel() == b.target.kernel());
    CHECK_FALSE(a.source.kernel() == c.source.kernel());
    const std::size_t S = a.source.num_states();
    for (std::size_t s = 0; s < S; s += 17) {
        const auto ps = a.source.kernel().row(s, 1), pt = a.target.kernel().row(s, 1);
        std::set<std::size_t> big_s, big_t;
        for (std::size_t j = 0; j < S; ++j) {
            if (ps[j] > 0.6 / S * 1.5) big_s.insert(j);
            if (pt[j] > 0.7 / S * 1.5) big_t.insert(j);
        }
        CHECK(big_s == big_t);
        CHECK(!big_s.empty());
        CHECK(big_s.size() <= 2);
    }
    for (const auto& f : a.features)
        for (double x : f) CHECK(std::abs(x) <= 1.0);
}

TEST_CASE("control reward tiers") {
    const auto cart = build_env("cartpole");
    std::set<double> tiers(cart.source.rewards().begin(), cart.source.rewards().end());
    CHECK(tiers == std::set<double>{0.0, 10.0, 25.0, 50.0});
    const auto pend = build_env("pendulum");
    std::set<double> ptiers(pend.source.rewards().begin(), pend.source.rewards().end());
    for (double r : ptiers) CHECK((r == 10.0 || r == 50.0 || r == 100.0));
    const auto acro = build_env("acrobot");
    std::set<double> atiers(acro.source.rewards().begin(), acro.source.rewards().end());
    for (double r : atiers) CHECK((r == 0.0 || r == 5.0 || r == 10.0 || r == 15.0 || r == 20.0));
    CHECK(atiers.count(20.0) == 1);
}

TEST_CASE("lds cartpole rows follow the exponential family") {
    LdsCartPoleSpec spec;
    spec.seed = 9;
    const auto bundle = build_lds_cartpole(spec);
    const std::size_t S = bundle.pair.source.num_states(), d = bundle.dim;
    CHECK(bundle.shared == std::vector<std::size_t>{0, 1});
    for (std::size_t pair : {0u, 17u, 301u}) {
        const std::vector<double> ts(bundle.theta_source.begin() + pair * d,
                                     bundle.theta_source.begin() + (pair + 1) * d);
        const std::vector<double> tt(bundle.theta_target.begin() + pair * d,
                                     bundle.theta_target.begin() + (pair + 1) * d);
        CHECK(ts[0] == tt[0]);
        CHECK(ts[1] == tt[1]);
        CHECK(ts[2] != tt[2]);
        check_vector_near(bundle.pair.source.kernel().row(pair / 2, pair % 2),
                          lds_distribution(bundle.psi, ts), 1e-12);
        check_vector_near(bundle.pair.target.kernel().row(pair / 2, pair % 2),
                          lds_distribution(bundle.psi, tt), 1e-12);
    }
    CHECK(bundle.psi.size() == d * S);
    spec.tie_private_blocks = true;
    const auto tied = build_lds_cartpole(spec);
    CHECK(tied.pair.source.kernel() == tied.pair.target.kernel());
    spec.private_dim = 5;
    CHECK_ERROR_CODE(build_lds_cartpole(spec), ErrorCode::InvalidConstants);
}

} // TEST_SUITE
