#include "ribe/harness.hpp"

#include "ribe/error.hpp"
#include "ribe/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace ribe {

namespace {

constexpr std::uint64_t kQLearningTag = 0x51;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string>& ibe_names() {
    static const std::vector<std::string> names{"vanilla", "vanilla_source", "tv", "w1", "moment",
                                                "density_global", "density_local", "value_aware", "lds"};
    return names;
}

const std::vector<std::string>& baseline_names() {
    static const std::vector<std::string> names{"oracle", "overconservative", "qlearning"};
    return names;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
    return out;
}

struct Oracle {
    ValueFunction value;
    double avg = 0.0;
};

struct Prepared {
    Scenario scenario;
    TabularMDP source;
    TabularMDP target;
    std::vector<EstimatorChoice> choices; // parallel to cfg.estimators (unused for baselines)
    std::vector<Oracle> optimal;          // per radius
    std::vector<double> overconservative; // per radius, avg value
};

TabularMDP maybe_rescaled(const TabularMDP& m, bool rescale) {
    return rescale ? m.with_rescaled_rewards() : m;
}

Prepared prepare(const ExperimentConfig& cfg, bool need_values) {
    Prepared p{make_scenario(cfg.env, cfg.env_seed), {}, {}, {}, {}, {}};
    p.source = maybe_rescaled(p.scenario.pair.source, cfg.rescale_rewards);
    p.target = maybe_rescaled(p.scenario.pair.target, cfg.rescale_rewards);
    for (const auto& name : cfg.estimators) {
        if (is_baseline(name))
            p.choices.push_back({NoSideInfo{}, PriorDefault::Uniform});
        else
            p.choices.push_back(oracle_estimator(p.scenario, name, cfg.prior, cfg.presmooth));
    }
    if (!need_values) return p;
    const auto& target_kernel = p.target.kernel();
    for (double radius : cfg.radii) {
        auto plan = robust_value_iteration(p.target, UncertaintySet(target_kernel, radius));
        p.optimal.push_back({plan.value, average_value(plan.value)});
        if (contains(cfg.estimators, "overconservative")) {
            const auto policy = overconservative_policy(p.source, target_kernel, radius);
            const auto eval =
                robust_policy_evaluation(p.target, UncertaintySet(target_kernel, radius), policy);
            p.overconservative.push_back(average_value(eval.value));
        } else {
            p.overconservative.push_back(kNaN);
        }
    }
    return p;
}

std::string cell_name(const std::string& estimator, std::uint64_t n, std::size_t seed) {
    return "estimator=" + estimator + " n=" + std::to_string(n) + " seed=" + std::to_string(seed);
}

SamplingPlan sampling_plan(const ExperimentConfig& cfg, std::uint64_t n, std::size_t seed_index) {
    return {cfg.sampling, n, stream_key(cfg.seed, seed_index)};
}

std::vector<RunRecord> run_cell(const ExperimentConfig& cfg, const Prepared& p, std::size_t e,
                                std::uint64_t n, std::size_t seed_index) {
    const auto start = std::chrono::steady_clock::now();
    const std::string& name = cfg.estimators[e];
    const auto& target_kernel = p.target.kernel();
    const std::size_t S = target_kernel.num_states(), A = target_kernel.num_actions();
    const double horizon = 1.0 / ((1.0 - p.target.gamma()) * (1.0 - p.target.gamma()));

    std::vector<RunRecord> out;
    auto base_record = [&](std::size_t r) {
        RunRecord rec;
        rec.env = cfg.env;
        rec.estimator = name;
        rec.n = n;
        rec.seed = seed_index;
        rec.eval_radius = cfg.radii[r];
        rec.train_radius = cfg.train_radius.value_or(cfg.radii[r]);
        rec.optimal_avg = p.optimal[r].avg;
        rec.delta_n = rec.mean_tv = rec.train_value = kNaN;
        rec.eval_error = rec.eval_bound = rec.train_error = rec.train_bound = kNaN;
        return rec;
    };

    if (name == "overconservative") {
        for (std::size_t r = 0; r < cfg.radii.size(); ++r) {
            auto rec = base_record(r);
            rec.avg_value = p.overconservative[r];
            out.push_back(rec);
        }
    } else if (name == "qlearning") {
        const std::uint64_t budget =
            cfg.sampling == SamplingPlan::Mode::BalancedPerPair ? n * S * A : n;
        const auto q = run_qlearning(p.target, budget, stream_key(cfg.seed, seed_index, n, kQLearningTag),
                                     cfg.qlearning);
        for (std::size_t r = 0; r < cfg.radii.size(); ++r) {
            auto rec = base_record(r);
            const auto eval =
                robust_policy_evaluation(p.target, UncertaintySet(target_kernel, cfg.radii[r]), q.policy);
            rec.avg_value = average_value(eval.value);
            rec.eval_error = sup_distance(eval.value, p.optimal[r].value);
            out.push_back(rec);
        }
    } else {
        TransitionKernel estimate;
        double coverage = 1.0;
        if (name == "oracle") {
            estimate = target_kernel;
        } else {
            const auto counts = sample_counts(target_kernel, sampling_plan(cfg, n, seed_index));
            coverage = counts_summary(counts).coverage_fraction;
            estimate = estimate_kernel(counts, p.source.kernel(), p.choices[e].info, p.choices[e].prior)
                           .kernel;
        }
        const double delta = kernel_max_tv(estimate, target_kernel);
        const double mean_tv = kernel_mean_tv(estimate, target_kernel);
        const auto model = p.target.with_kernel(estimate);
        for (std::size_t r = 0; r < cfg.radii.size(); ++r) {
            auto rec = base_record(r);
            const auto plan = robust_value_iteration(model, UncertaintySet(estimate, rec.train_radius));
            const auto eval = robust_policy_evaluation(
                p.target, UncertaintySet(target_kernel, rec.eval_radius), plan.policy);
            rec.avg_value = average_value(eval.value);
            rec.train_value = average_value(plan.value);
            rec.delta_n = delta;
            rec.mean_tv = mean_tv;
            rec.coverage = coverage;
            rec.eval_error = sup_distance(eval.value, p.optimal[r].value);
            rec.train_error = sup_distance(plan.value, p.optimal[r].value);
            rec.eval_bound = 4.0 * delta * horizon;
            rec.train_bound = 2.0 * delta * horizon;
            rec.bounds_checked = cfg.rescale_rewards && rec.train_radius == rec.eval_radius;
            if (rec.bounds_checked) {
                rec.eval_violation = rec.eval_error > rec.eval_bound + kBoundSlack;
                rec.train_violation = rec.train_error > rec.train_bound + kBoundSlack;
            }
            out.push_back(rec);
        }
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& rec : out) rec.wallclock = elapsed;
    return out;
}

struct Unit {
    std::size_t estimator;
    std::uint64_t n;
    std::size_t seed;
};

std::vector<Unit> grid_units(const ExperimentConfig& cfg) {
    std::vector<Unit> units;
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e)
        for (auto n : cfg.sample_sizes)
            for (std::size_t s = 0; s < cfg.seeds; ++s) units.push_back({e, n, s});
    return units;
}

std::string mode_name(SamplingPlan::Mode m) {
    return m == SamplingPlan::Mode::BalancedPerPair ? "balanced" : "uniform";
}

} // namespace

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_lock);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::size_t resolve_threads(std::size_t requested) {
    if (const char* env = std::getenv("RIBE_THREADS"); env && *env) {
        std::size_t value = 0;
        const auto* end = env + std::char_traits<char>::length(env);
        if (auto [ptr, ec] = std::from_chars(env, end, value); ec == std::errc() && ptr == end)
            requested = value;
    }
    if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
    if (estimators.empty()) fail("estimator list is empty");
    if (sample_sizes.empty()) fail("sample-size grid is empty");
    if (radii.empty()) fail("radius list is empty");
    if (seeds == 0) fail("seeds must be >= 1");
    if (!contains(env_names(), env)) fail("unknown environment '" + env + "'");
    for (const auto& e : estimators) {
        if (!contains(ibe_names(), e) && !contains(baseline_names(), e))
            fail("unknown estimator '" + e + "'");
        if (e == "lds" && env != "lds_cartpole") fail("the lds estimator needs env lds_cartpole");
    }
    for (double r : radii)
        if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::InvalidRadius, "radii must lie in [0,1]");
    if (train_radius && !(*train_radius >= 0.0 && *train_radius <= 1.0))
        throw Error(ErrorCode::InvalidRadius, "train_radius must lie in [0,1]");
}

ExperimentConfig config_from_json(const std::string& text) {
    using nlohmann::json;
    ExperimentConfig cfg;
    try {
        const json d = json::parse(text, nullptr, true, true);
        cfg.env = d.value("env", cfg.env);
        cfg.env_seed = d.value("env_seed", cfg.env_seed);
        cfg.estimators = d.value("estimators", cfg.estimators);
        cfg.sample_sizes = d.value("sample_sizes", cfg.sample_sizes);
        cfg.seeds = d.value("seeds", cfg.seeds);
        cfg.seed = d.value("seed", cfg.seed);
        cfg.radii = d.value("radii", cfg.radii);
        if (d.contains("train_radius") && !d["train_radius"].is_null())
            cfg.train_radius = d["train_radius"].get<double>();
        const auto prior = d.value("prior", std::string("source"));
        if (prior != "source" && prior != "uniform")
            throw Error(ErrorCode::InvalidArgument, "prior must be 'source' or 'uniform'");
        cfg.prior = prior == "source" ? PriorDefault::SourceKernel : PriorDefault::Uniform;
        cfg.rescale_rewards = d.value("rescale_rewards", cfg.rescale_rewards);
        const auto sampling = d.value("sampling", std::string("balanced"));
        if (sampling != "balanced" && sampling != "uniform")
            throw Error(ErrorCode::InvalidArgument, "sampling must be 'balanced' or 'uniform'");
        cfg.sampling = sampling == "balanced" ? SamplingPlan::Mode::BalancedPerPair
                                              : SamplingPlan::Mode::UniformPairs;
        cfg.presmooth = d.value("presmooth", cfg.presmooth);
        cfg.threads = d.value("threads", cfg.threads);
        cfg.out_dir = d.value("out", cfg.out_dir);
        if (d.contains("qlearning")) {
            const auto& q = d["qlearning"];
            cfg.qlearning.learning_rate = q.value("learning_rate", cfg.qlearning.learning_rate);
            cfg.qlearning.epsilon_start = q.value("epsilon_start", cfg.qlearning.epsilon_start);
            cfg.qlearning.epsilon_end = q.value("epsilon_end", cfg.qlearning.epsilon_end);
            cfg.qlearning.init_scale = q.value("init_scale", cfg.qlearning.init_scale);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string to_json(const ExperimentConfig& cfg) {
    nlohmann::json d{{"env", cfg.env},
                     {"env_seed", cfg.env_seed},
                     {"estimators", cfg.estimators},
                     {"sample_sizes", cfg.sample_sizes},
                     {"seeds", cfg.seeds},
                     {"seed", cfg.seed},
                     {"radii", cfg.radii},
                     {"prior", cfg.prior == PriorDefault::SourceKernel ? "source" : "uniform"},
                     {"rescale_rewards", cfg.rescale_rewards},
                     {"sampling", mode_name(cfg.sampling)},
                     {"presmooth", cfg.presmooth},
                     {"threads", cfg.threads},
                     {"out", cfg.out_dir},
                     {"gamma", kDefaultGamma},
                     {"qlearning",
                      {{"learning_rate", cfg.qlearning.learning_rate},
                       {"epsilon_start", cfg.qlearning.epsilon_start},
                       {"epsilon_end", cfg.qlearning.epsilon_end},
                       {"init_scale", cfg.qlearning.init_scale}}}};
    d["train_radius"] = cfg.train_radius ? nlohmann::json(*cfg.train_radius) : nlohmann::json();
    return d.dump(2);
}

Scenario make_scenario(const std::string& env, std::uint64_t env_seed) {
    Scenario out;
    if (env == "lds_cartpole") {
        LdsCartPoleSpec spec;
        spec.seed = env_seed;
        out.lds = build_lds_cartpole(spec);
        out.pair = out.lds->pair;
    } else {
        out.pair = build_env(env, env_seed);
    }
    return out;
}

bool is_baseline(const std::string& name) {
    return contains(baseline_names(), name);
}

EstimatorChoice oracle_estimator(const Scenario& scenario, const std::string& name,
                                 PriorDefault prior, bool presmooth) {
    const auto& ps = scenario.pair.source.kernel();
    const auto& pt = scenario.pair.target.kernel();
    DeriveOptions options;
    options.presmooth = presmooth;
    if (name == "vanilla") return {NoSideInfo{}, PriorDefault::Uniform};
    if (name == "vanilla_source") return {NoSideInfo{}, PriorDefault::SourceKernel};
    if (name == "tv") return {derive_true_side_info(ps, pt, SideInfoKind::DistanceTV), prior};
    if (name == "w1") {
        options.w1_cost = scenario.pair.ground_cost();
        return {derive_true_side_info(ps, pt, SideInfoKind::DistanceW1, options), prior};
    }
    if (name == "moment") return {derive_true_side_info(ps, pt, SideInfoKind::Moment), prior};
    if (name == "density_global")
        return {derive_true_side_info(ps, pt, SideInfoKind::DensityGlobal, options), prior};
    if (name == "density_local")
        return {derive_true_side_info(ps, pt, SideInfoKind::DensityLocal, options), prior};
    if (name == "value_aware") {
        const auto values = value_iteration(scenario.pair.source).value;
        options.value_metric = CostMatrix::from_values(values);
        return {derive_true_side_info(ps, pt, SideInfoKind::ValueAware, options), prior};
    }
    if (name == "lds") {
        if (!scenario.lds) throw Error(ErrorCode::InvalidArgument, "lds needs the lds_cartpole scenario");
        const auto& b = *scenario.lds;
        return {LdsInfo{b.dim, b.psi, b.shared, b.theta_source}, PriorDefault::Uniform};
    }
    throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + name + "'");
}

GridOutcome run_transfer_grid_collect(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto p = prepare(cfg, true);
    const auto units = grid_units(cfg);
    std::vector<std::vector<RunRecord>> results(units.size());
    std::vector<std::string> errors(units.size());
    parallel_for(units.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
        const auto& u = units[i];
        try {
            results[i] = run_cell(cfg, p, u.estimator, u.n, u.seed);
        } catch (const std::exception& e) {
            errors[i] = cell_name(cfg.estimators[u.estimator], u.n, u.seed) + ": " + e.what();
        }
    });
    GridOutcome out;
    for (std::size_t i = 0; i < units.size(); ++i) {
        for (auto& rec : results[i]) out.records.push_back(std::move(rec));
        if (!errors[i].empty()) out.errors.push_back(errors[i]);
    }
    return out;
}

std::vector<RunRecord> run_transfer_grid(const ExperimentConfig& cfg) {
    auto outcome = run_transfer_grid_collect(cfg);
    if (!outcome.errors.empty()) throw Error(ErrorCode::SolverFailure, outcome.errors.front());
    return std::move(outcome.records);
}

Policy overconservative_policy(const TabularMDP& source, const TransitionKernel& target,
                               double radius, const IterationOptions& options) {
    auto radii = kernel_row_tv(source.kernel(), target);
    for (auto& r : radii) r = std::min(1.0, r + radius);
    return robust_value_iteration(source, UncertaintySet(source.kernel(), std::move(radii)), options)
        .policy;
}

QLearningResult run_qlearning(const TabularMDP& target, std::uint64_t budget, std::uint64_t seed,
                              const QLearningOptions& options) {
    const std::size_t S = target.num_states(), A = target.num_actions();
    const auto& kernel = target.kernel();
    CounterRng rng(stream_key(seed, 0x9e37));
    std::vector<double> q(S * A);
    for (auto& x : q) x = options.init_scale * rng.uniform();

    std::vector<std::vector<double>> cdfs(S * A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) cdfs[s * A + a] = row_cdf(kernel.row(s, a));
    std::vector<bool> absorbing(S, true);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            if (kernel.row(s, a)[s] != 1.0) absorbing[s] = false;

    auto greedy = [&](std::size_t s) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < A; ++a)
            if (q[s * A + a] > q[s * A + best]) best = a;
        return best;
    };

    std::size_t s = rng.below(S);
    const double span_steps = budget > 1 ? static_cast<double>(budget - 1) : 1.0;
    for (std::uint64_t t = 0; t < budget; ++t) {
        const double eps = options.epsilon_start +
                           (options.epsilon_end - options.epsilon_start) * static_cast<double>(t) / span_steps;
        const std::size_t a = rng.uniform() < eps ? rng.below(A) : greedy(s);
        const std::size_t next = sample_index(cdfs[s * A + a], rng.uniform());
        const double target_q = target.reward(s, a) + target.gamma() * q[next * A + greedy(next)];
        q[s * A + a] += options.learning_rate * (target_q - q[s * A + a]);
        s = absorbing[next] ? rng.below(S) : next;
    }

    std::vector<std::size_t> actions(S);
    for (std::size_t i = 0; i < S; ++i) actions[i] = greedy(i);
    return {Policy::deterministic(std::move(actions), A), budget};
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

void write_run_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "env,estimator,n,seed,train_radius,eval_radius,avg_value,optimal_avg,delta_n,mean_tv,"
           "train_value,eval_error,eval_bound,train_error,train_bound,coverage,bounds_checked,"
           "violation,wallclock\n";
    for (const auto& r : records) {
        out << r.env << ',' << r.estimator << ',' << r.n << ',' << r.seed << ','
            << format_double(r.train_radius) << ',' << format_double(r.eval_radius) << ','
            << format_double(r.avg_value) << ',' << format_double(r.optimal_avg) << ','
            << format_double(r.delta_n) << ',' << format_double(r.mean_tv) << ','
            << format_double(r.train_value) << ',' << format_double(r.eval_error) << ','
            << format_double(r.eval_bound) << ',' << format_double(r.train_error) << ','
            << format_double(r.train_bound) << ',' << format_double(r.coverage) << ','
            << (r.bounds_checked ? 1 : 0) << ',' << ((r.eval_violation || r.train_violation) ? 1 : 0)
            << ',' << format_double(r.wallclock) << '\n';
    }
}

BoundSummary summarize_bounds(const std::vector<RunRecord>& records) {
    BoundSummary out;
    for (const auto& r : records) {
        if (!r.bounds_checked) continue;
        ++out.checked;
        out.eval_violations += r.eval_violation ? 1 : 0;
        out.train_violations += r.train_violation ? 1 : 0;
        if (r.eval_bound > 0.0) out.worst_eval_ratio = std::max(out.worst_eval_ratio, r.eval_error / r.eval_bound);
        if (r.train_bound > 0.0)
            out.worst_train_ratio = std::max(out.worst_train_ratio, r.train_error / r.train_bound);
    }
    return out;
}

std::vector<RunRecord> verify_bounds(ExperimentConfig cfg, bool strict) {
    cfg.rescale_rewards = true;
    auto records = run_transfer_grid(cfg);
    if (strict) {
        for (const auto& r : records)
            if (r.eval_violation || r.train_violation)
                throw Error(ErrorCode::BoundViolated,
                            cell_name(r.estimator, r.n, r.seed) + " R=" + format_double(r.eval_radius) +
                                ": error " + format_double(r.eval_violation ? r.eval_error : r.train_error) +
                                " exceeds bound " +
                                format_double(r.eval_violation ? r.eval_bound : r.train_bound));
    }
    return records;
}

std::pair<double, double> mean_ci95(const std::vector<double>& values) {
    if (values.empty()) return {kNaN, kNaN};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return {mean, 1.96 * sd / std::sqrt(static_cast<double>(values.size()))};
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : kNaN;
    return {slope, my - slope * mx};
}

TvCurve tv_convergence_curve(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto p = prepare(cfg, false);
    const auto& ps = p.source.kernel();
    const auto& pt = p.target.kernel();
    const std::size_t S = pt.num_states(), A = pt.num_actions();
    auto units = grid_units(cfg);
    std::erase_if(units, [&](const Unit& u) {
        const auto& name = cfg.estimators[u.estimator];
        return name == "overconservative" || name == "qlearning";
    });

    struct Cell {
        double mean_tv = 0.0;
        std::size_t checked = 0;
        std::size_t violations = 0;
    };
    std::vector<Cell> cells(units.size());
    parallel_for(units.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
        const auto& u = units[i];
        const auto& name = cfg.estimators[u.estimator];
        if (name == "oracle") return;
        const auto counts = sample_counts(pt, sampling_plan(cfg, u.n, u.seed));
        const auto& choice = p.choices[u.estimator];
        const auto report = estimate_kernel(counts, ps, choice.info, choice.prior);
        cells[i].mean_tv = kernel_mean_tv(report.kernel, pt);
        if (const auto* tv = std::get_if<DistanceTvInfo>(&choice.info)) {
            for (std::size_t pair = 0; pair < S * A; ++pair) {
                if (report.diagnostics[pair].fallback_used) continue;
                const std::size_t s = pair / A, a = pair % A;
                const double d = tv->radius.size() == 1 ? tv->radius[0] : tv->radius[pair];
                ++cells[i].checked;
                if (tv_distance(report.kernel.row(s, a), pt.row(s, a)) > 2.0 * d + 1e-9)
                    ++cells[i].violations;
            }
        }
    });

    TvCurve curve;
    curve.reference = kernel_mean_tv(ps, pt);
    std::map<std::pair<std::size_t, std::uint64_t>, std::vector<double>> groups;
    for (std::size_t i = 0; i < units.size(); ++i) {
        groups[{units[i].estimator, units[i].n}].push_back(cells[i].mean_tv);
        curve.triangle_checked += cells[i].checked;
        curve.triangle_violations += cells[i].violations;
    }
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e)
        for (auto n : cfg.sample_sizes) {
            auto it = groups.find({e, n});
            if (it == groups.end()) continue;
            const auto [mean, ci] = mean_ci95(it->second);
            curve.points.push_back({cfg.estimators[e], n, mean, ci, it->second.size()});
        }
    return curve;
}

void write_tv_curve_csv(std::ostream& out, const TvCurve& curve) {
    out << "estimator,n,mean_tv,ci95,seeds\n";
    std::vector<std::uint64_t> ns;
    for (const auto& pt : curve.points) {
        out << pt.estimator << ',' << pt.n << ',' << format_double(pt.mean) << ','
            << format_double(pt.ci95) << ',' << pt.samples << '\n';
        if (std::find(ns.begin(), ns.end(), pt.n) == ns.end()) ns.push_back(pt.n);
    }
    for (auto n : ns) out << "source_target," << n << ',' << format_double(curve.reference) << ",0,0\n";
}

ScalingResult scaling_from_records(const std::vector<RunRecord>& records) {
    std::vector<std::pair<std::string, double>> keys;
    std::map<std::pair<std::string, double>, std::map<std::uint64_t, std::vector<double>>> gaps;
    for (const auto& r : records) {
        const auto key = std::make_pair(r.estimator, r.eval_radius);
        if (!gaps.count(key)) keys.push_back(key);
        gaps[key][r.n].push_back(r.optimal_avg - r.avg_value);
    }
    ScalingResult out;
    for (const auto& key : keys) {
        std::vector<double> xs, ys;
        for (const auto& [n, values] : gaps[key]) {
            auto [mean, ci] = mean_ci95(values);
            ScalingPoint pt{key.first, key.second, n, mean, ci, false};
            if (!(mean > 0.0)) {
                pt.clipped = true;
                mean = std::numeric_limits<double>::epsilon();
            }
            out.points.push_back(pt);
            xs.push_back(std::log(static_cast<double>(n)));
            ys.push_back(std::log(mean));
        }
        const auto [slope, intercept] = linear_fit(xs, ys);
        out.slopes.push_back({key.first, key.second, slope, intercept});
    }
    return out;
}

ScalingResult suboptimality_scaling(const ExperimentConfig& cfg) {
    if (cfg.env != "lds_cartpole")
        throw Error(ErrorCode::InvalidArgument, "scaling runs on the lds_cartpole environment");
    return scaling_from_records(run_transfer_grid(cfg));
}

void write_scaling_csv(std::ostream& out, const ScalingResult& result) {
    out << "estimator,radius,n,mean_gap,ci95,clipped\n";
    for (const auto& p : result.points)
        out << p.estimator << ',' << format_double(p.radius) << ',' << p.n << ','
            << format_double(p.mean_gap) << ',' << format_double(p.ci95) << ',' << (p.clipped ? 1 : 0)
            << '\n';
}

} // namespace ribe
