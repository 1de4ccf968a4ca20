#include "check.hpp"

#include "ribe/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace ribe;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.env = "frozen_lake";
    cfg.estimators = {"vanilla", "tv", "density_local", "oracle"};
    cfg.sample_sizes = {5, 50};
    cfg.seeds = 2;
    cfg.seed = 3;
    cfg.radii = {0.0, 0.1};
    cfg.threads = 1;
    return cfg;
}

std::string strip_last_column(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
    return out;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("parallel_for visits every index once") {
    for (std::size_t threads : {1u, 3u}) {
        std::vector<std::atomic<int>> hits(257);
        parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK(resolve_threads(4) == 4);
    CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("statistics helpers") {
    const auto [slope, intercept] = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(slope == doctest::Approx(2.0));
    CHECK(intercept == doctest::Approx(1.0));
    const auto [mean, ci] = mean_ci95({1.0, 2.0, 3.0});
    CHECK(mean == doctest::Approx(2.0));
    CHECK(ci == doctest::Approx(1.96 / std::sqrt(3.0)));
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) {
        const auto s = format_double(x);
        double y = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), y);
        CHECK(y == x);
    }
}

TEST_CASE("config parsing accepts comments and validates") {
    const auto cfg = config_from_json(R"({
        // which environment
        "env": "taxi",
        "estimators": ["vanilla", "moment"],
        "sample_sizes": [1, 10],
        "seeds": 3,
        "radii": [0.05],
        "rescale_rewards": true
    })");
    CHECK(cfg.env == "taxi");
    CHECK(cfg.estimators == std::vector<std::string>{"vanilla", "moment"});
    CHECK(cfg.seeds == 3);
    CHECK(cfg.rescale_rewards);
    CHECK(config_from_json(to_json(cfg)).estimators == cfg.estimators);
    CHECK_ERROR_CODE(config_from_json(R"({"env": "nowhere"})"), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(config_from_json(R"({"estimators": ["magic"]})"), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(config_from_json(R"({"radii": [1.5]})"), ErrorCode::InvalidRadius);
    CHECK_ERROR_CODE(config_from_json(R"({"seeds": 0})"), ErrorCode::InvalidArgument);
}

TEST_CASE("transfer grid shape and oracle optimality") {
    const auto cfg = small_config();
    const auto records = run_transfer_grid(cfg);
    CHECK(records.size() == 4 * 2 * 2 * 2);
    for (const auto& r : records) {
        CHECK(r.avg_value <= r.optimal_avg + 1e-6);
        CHECK(r.coverage == 1.0);
        if (r.estimator == "oracle") {
            CHECK(r.avg_value == doctest::Approx(r.optimal_avg).epsilon(1e-9));
            CHECK(r.delta_n == 0.0);
        }
    }
}

TEST_CASE("grid output is deterministic apart from wallclock") {
    auto cfg = small_config();
    cfg.estimators = {"vanilla", "tv", "qlearning", "overconservative"};
    std::ostringstream a, b;
    write_run_csv(a, run_transfer_grid(cfg));
    cfg.threads = 2;
    write_run_csv(b, run_transfer_grid(cfg));
    CHECK(a.str().rfind("env,estimator,n,seed,", 0) == 0);
    CHECK(strip_last_column(a.str()) == strip_last_column(b.str()));
}

TEST_CASE("error bounds hold on a small rescaled grid") {
    auto cfg = small_config();
    cfg.estimators = {"vanilla", "tv", "w1", "moment", "density_global", "density_local"};
    const auto records = verify_bounds(cfg, true);
    const auto summary = summarize_bounds(records);
    CHECK(summary.checked > 0);
    CHECK(summary.eval_violations == 0);
    CHECK(summary.train_violations == 0);
    CHECK(summary.worst_eval_ratio <= 1.0);
}

TEST_CASE("baselines") {
    const auto scenario = make_scenario("frozen_lake", 0);
    const auto pi = overconservative_policy(scenario.pair.source, scenario.pair.target.kernel(), 0.1);
    CHECK(pi.num_states() == 16);
    const auto q1 = run_qlearning(scenario.pair.target, 5000, 1);
    const auto q2 = run_qlearning(scenario.pair.target, 5000, 1);
    CHECK(q1.steps == 5000);
    CHECK(q1.policy == q2.policy);
    CHECK(is_baseline("qlearning"));
    CHECK_FALSE(is_baseline("tv"));
}

TEST_CASE("tv curve reference and triangle bound") {
    auto cfg = small_config();
    cfg.estimators = {"vanilla", "tv"};
    cfg.sample_sizes = {10, 1000};
    const auto curve = tv_convergence_curve(cfg);
    CHECK(curve.points.size() == 4);
    CHECK(curve.reference > 0.0);
    CHECK(curve.triangle_checked > 0);
    CHECK(curve.triangle_violations == 0);
    for (const auto& p : curve.points)
        if (p.n == 1000) CHECK(p.mean < 0.1);
}

} // TEST_SUITE
