#include "ribe/analysis.hpp"
#include "ribe/datagen.hpp"
#include "ribe/envs.hpp"
#include "ribe/error.hpp"
#include "ribe/harness.hpp"
#include "ribe/ibe.hpp"
#include "ribe/plot.hpp"
#include "ribe/robust_dp.hpp"
#include "ribe/serialize.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsage = 1;
constexpr int kCorrectness = 2;

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string config;
    std::optional<std::size_t> threads;
    bool rescale = false;
};

struct EnvArgs {
    std::string name = "frozen_lake";
    std::uint64_t env_seed = 0;
    std::string file;
};

void add_env_options(CLI::App* cmd, EnvArgs& env) {
    cmd->add_option("--env", env.name, "environment name")->check(CLI::IsMember(ribe::env_names()));
    cmd->add_option("--env-seed", env.env_seed, "seed for the randomized control environments");
    cmd->add_option("--env-file", env.file, "environment JSON written by `env build`")
        ->check(CLI::ExistingFile);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ribe::Error(ribe::ErrorCode::Io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path output_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out);
    return fs::path(g.out) / name;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ribe::Error(ribe::ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text << '\n';
    std::cout << "wrote " << path.string() << '\n';
}

ribe::Scenario load_scenario(const EnvArgs& env) {
    if (!env.file.empty()) return {ribe::env_pair_from_json(read_file(env.file)), std::nullopt};
    return ribe::make_scenario(env.name, env.env_seed);
}

ribe::TabularMDP target_mdp(const ribe::Scenario& sc, bool rescale) {
    return rescale ? sc.pair.target.with_rescaled_rewards() : sc.pair.target;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    return out;
}

// Rows separated by ';', entries by ','.
std::vector<std::vector<double>> parse_matrix(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    std::string row;
    while (std::getline(ss, row, ';'))
        if (!row.empty()) rows.push_back(parse_list(row));
    return rows;
}

json matrix_json(const ribe::Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

struct ExperimentArgs {
    std::string env;
    std::vector<std::string> estimators;
    std::vector<std::uint64_t> sizes;
    std::optional<std::size_t> seeds;
    std::vector<double> radii;
};

void add_experiment_options(CLI::App* cmd, ExperimentArgs& a) {
    cmd->add_option("--env", a.env, "override the config environment");
    cmd->add_option("--estimators", a.estimators, "override the estimator list")->delimiter(',');
    cmd->add_option("--n", a.sizes, "override the sample-size grid")->delimiter(',');
    cmd->add_option("--seeds", a.seeds, "override seeds per cell");
    cmd->add_option("--radii", a.radii, "override the radius grid")->delimiter(',');
}

ribe::ExperimentConfig load_config(const Globals& g, const ExperimentArgs& a) {
    ribe::ExperimentConfig cfg;
    if (!g.config.empty()) cfg = ribe::config_from_json(read_file(g.config));
    if (!a.env.empty()) cfg.env = a.env;
    if (!a.estimators.empty()) cfg.estimators = a.estimators;
    if (!a.sizes.empty()) cfg.sample_sizes = a.sizes;
    if (a.seeds) cfg.seeds = *a.seeds;
    if (!a.radii.empty()) cfg.radii = a.radii;
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    if (g.rescale) cfg.rescale_rewards = true;
    cfg.out_dir = g.out;
    cfg.validate();
    return cfg;
}

int report_bounds(const std::vector<ribe::RunRecord>& records) {
    const auto s = ribe::summarize_bounds(records);
    if (s.checked == 0) return 0;
    std::cout << "bounds checked on " << s.checked << " cells: " << s.eval_violations
              << " evaluation and " << s.train_violations << " training violations (worst ratios "
              << ribe::format_double(s.worst_eval_ratio) << ", "
              << ribe::format_double(s.worst_train_ratio) << ")\n";
    return s.eval_violations + s.train_violations > 0 ? kCorrectness : 0;
}

void write_bounds_csv(std::ostream& out, const std::vector<ribe::RunRecord>& records) {
    using ribe::format_double;
    out << "env,estimator,n,seed,radius,delta_n,measured_error,bound,train_error,train_bound,violation\n";
    for (const auto& r : records)
        out << r.env << ',' << r.estimator << ',' << r.n << ',' << r.seed << ','
            << format_double(r.eval_radius) << ',' << format_double(r.delta_n) << ','
            << format_double(r.eval_error) << ',' << format_double(r.eval_bound) << ','
            << format_double(r.train_error) << ',' << format_double(r.train_bound) << ','
            << (r.eval_violation || r.train_violation ? 1 : 0) << '\n';
}

void write_meta(const Globals& g, const ribe::ExperimentConfig& cfg, const std::string& stem) {
    auto meta = json::parse(ribe::to_json(cfg));
    meta["qlearning"] = {{"learning_rate", cfg.qlearning.learning_rate},
                         {"epsilon_start", cfg.qlearning.epsilon_start},
                         {"epsilon_end", cfg.qlearning.epsilon_end},
                         {"init_scale", cfg.qlearning.init_scale}};
    write_text(output_path(g, stem + ".meta.json"), meta.dump(2));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust transfer with information-based kernel estimators"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--config", g.config, "experiment config (JSON, // comments allowed)")
        ->check(CLI::ExistingFile);
    app.add_option("--threads", g.threads, "worker threads (RIBE_THREADS overrides)");
    app.add_flag("--rescale-rewards", g.rescale, "map rewards onto [0,1] before planning");

    // env build
    auto* env_cmd = app.add_subcommand("env", "environment utilities")->require_subcommand(1);
    EnvArgs env_build;
    auto* env_build_cmd = env_cmd->add_subcommand("build", "write a source/target pair as JSON");
    add_env_options(env_build_cmd, env_build);

    // sample
    EnvArgs sample_env;
    std::uint64_t sample_n = 10;
    std::string sample_mode = "balanced";
    auto* sample_cmd = app.add_subcommand("sample", "draw offline target transitions");
    add_env_options(sample_cmd, sample_env);
    sample_cmd->add_option("--n", sample_n, "samples per (s,a), or total in uniform mode")->capture_default_str();
    sample_cmd->add_option("--mode", sample_mode, "balanced or uniform")
        ->check(CLI::IsMember({"balanced", "uniform"}))
        ->capture_default_str();

    // estimate
    EnvArgs est_env;
    std::string est_counts, est_name = "vanilla", est_side, est_prior = "uniform";
    auto* est_cmd = app.add_subcommand("estimate", "estimate the target kernel from counts");
    add_env_options(est_cmd, est_env);
    est_cmd->add_option("--counts", est_counts, "counts CSV from `sample`")->required()->check(CLI::ExistingFile);
    est_cmd->add_option("--estimator", est_name, "IBE variant with oracle side information")->capture_default_str();
    est_cmd->add_option("--side-info", est_side, "side-information JSON (overrides --estimator)")
        ->check(CLI::ExistingFile);
    est_cmd->add_option("--prior", est_prior, "fallback for unseen pairs: source or uniform")
        ->check(CLI::IsMember({"source", "uniform"}));

    // plan
    EnvArgs plan_env;
    std::string plan_kernel;
    double plan_radius = 0.0;
    auto* plan_cmd = app.add_subcommand("plan", "robust value iteration on a kernel-centered TV set");
    add_env_options(plan_cmd, plan_env);
    plan_cmd->add_option("--kernel", plan_kernel, "center kernel JSON (default: the true target)")
        ->check(CLI::ExistingFile);
    plan_cmd->add_option("--radius", plan_radius, "TV radius")->capture_default_str();

    // evaluate
    EnvArgs eval_env;
    std::string eval_policy;
    double eval_radius = 0.0;
    auto* eval_cmd = app.add_subcommand("evaluate", "robust evaluation on the target-centered set");
    add_env_options(eval_cmd, eval_env);
    eval_cmd->add_option("--policy", eval_policy, "policy JSON (a plan.json works too)")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--radius", eval_radius, "TV radius")->capture_default_str();

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "grid experiments")->require_subcommand(1);
    ExperimentArgs exp_args;
    auto* exp_run = exp_cmd->add_subcommand("run", "full transfer grid -> results.csv");
    auto* exp_bounds = exp_cmd->add_subcommand("bounds", "error-bound check -> bounds.csv");
    auto* exp_tv = exp_cmd->add_subcommand("tv-curve", "TV consistency curve -> tv_curve.csv");
    auto* exp_scaling = exp_cmd->add_subcommand("scaling", "suboptimality slope -> scaling.csv");
    for (auto* c : {exp_run, exp_bounds, exp_tv, exp_scaling}) add_experiment_options(c, exp_args);

    // analyze
    auto* an_cmd = app.add_subcommand("analyze", "information-theoretic summaries")->require_subcommand(1);
    std::string crb_p, crb_features;
    std::size_t crb_n = 10, crb_moments = 0;
    auto* crb_cmd = an_cmd->add_subcommand("crb", "Cramer-Rao bound, optionally moment constrained");
    crb_cmd->add_option("--p", crb_p, "distribution, comma separated")->required();
    crb_cmd->add_option("--n", crb_n, "sample size")->capture_default_str();
    crb_cmd->add_option("--moments", crb_moments, "use raw-moment features x^1..x^M");
    crb_cmd->add_option("--features", crb_features, "feature matrix rows 'a,b;c,d'");
    std::size_t fim_states = 5, fim_n = 100, fim_moments = 1;
    std::string fim_bounds;
    auto* fim_cmd = an_cmd->add_subcommand("fim-trace", "min trace of the FIM with and without moment bounds");
    fim_cmd->add_option("--states", fim_states, "support size")->capture_default_str();
    fim_cmd->add_option("--n", fim_n, "sample size")->capture_default_str();
    fim_cmd->add_option("--moments", fim_moments, "number of raw moments")->capture_default_str();
    fim_cmd->add_option("--bounds", fim_bounds, "upper bounds c_j, comma separated")->required();

    // plot
    std::string plot_csv;
    ribe::PlotOptions plot;
    bool plot_linear_x = false;
    auto* plot_cmd = app.add_subcommand("plot", "render a CSV as an SVG line chart");
    plot_cmd->add_option("csv", plot_csv, "input CSV")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--x", plot.x, "x column")->required();
    plot_cmd->add_option("--y", plot.y, "y column")->required();
    plot_cmd->add_option("--group", plot.group, "series column");
    plot_cmd->add_option("--band", plot.band, "half-width column for a shaded band");
    plot_cmd->add_option("--title", plot.title, "chart title");
    plot_cmd->add_flag("--linear-x", plot_linear_x, "linear instead of log x axis");
    plot_cmd->add_flag("--log-y", plot.log_y, "log y axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (env_build_cmd->parsed()) {
            const auto sc = load_scenario(env_build);
            write_text(output_path(g, "env_" + sc.pair.name + ".json"), ribe::to_json(sc.pair));
        } else if (sample_cmd->parsed()) {
            const auto sc = load_scenario(sample_env);
            ribe::SamplingPlan plan;
            plan.mode = sample_mode == "balanced" ? ribe::SamplingPlan::Mode::BalancedPerPair
                                                  : ribe::SamplingPlan::Mode::UniformPairs;
            plan.count = sample_n;
            plan.seed = g.seed.value_or(0);
            const auto counts = ribe::sample_counts(sc.pair.target.kernel(), plan);
            const auto path = output_path(g, "counts.csv");
            auto out = open_out(path);
            ribe::write_counts_csv(out, counts);
            const auto summary = ribe::counts_summary(counts);
            std::cout << "wrote " << path.string() << " (" << summary.total << " transitions, coverage "
                      << ribe::format_double(summary.coverage_fraction) << ")\n";
        } else if (est_cmd->parsed()) {
            const auto sc = load_scenario(est_env);
            const auto& source = sc.pair.source.kernel();
            std::ifstream in(est_counts);
            const auto counts = ribe::read_counts_csv(in, source.num_states(), source.num_actions());
            const auto prior = est_prior == "source" ? ribe::PriorDefault::SourceKernel : ribe::PriorDefault::Uniform;
            ribe::SideInfo info;
            if (!est_side.empty())
                info = ribe::side_info_from_json(read_file(est_side));
            else
                info = ribe::oracle_estimator(sc, est_name, prior).info;
            const auto report = ribe::estimate_kernel(counts, source, info, prior);
            write_text(output_path(g, "kernel.json"), ribe::to_json(report.kernel));
            const auto diag = output_path(g, "diagnostics.csv");
            auto out = open_out(diag);
            ribe::write_diagnostics_csv(out, report);
            std::cout << "wrote " << diag.string() << "\nmax tv to target "
                      << ribe::format_double(ribe::kernel_max_tv(report.kernel, sc.pair.target.kernel())) << '\n';
        } else if (plan_cmd->parsed()) {
            const auto sc = load_scenario(plan_env);
            const auto mdp = target_mdp(sc, g.rescale);
            auto center = plan_kernel.empty() ? mdp.kernel() : ribe::kernel_from_json(read_file(plan_kernel));
            const auto result = ribe::robust_value_iteration(mdp, ribe::UncertaintySet(std::move(center), plan_radius));
            write_text(output_path(g, "plan.json"), ribe::to_json(result));
            std::cout << "average value " << ribe::format_double(ribe::average_value(result.value))
                      << (result.converged ? "" : " (not converged)") << '\n';
        } else if (eval_cmd->parsed()) {
            const auto sc = load_scenario(eval_env);
            const auto mdp = target_mdp(sc, g.rescale);
            auto doc = json::parse(read_file(eval_policy));
            const auto policy = ribe::policy_from_json(doc.contains("policy") ? doc["policy"].dump() : doc.dump());
            const auto result =
                ribe::robust_policy_evaluation(mdp, ribe::UncertaintySet(mdp.kernel(), eval_radius), policy);
            json outdoc{{"value", result.value},
                        {"average_value", ribe::average_value(result.value)},
                        {"radius", eval_radius},
                        {"iterations", result.iterations},
                        {"converged", result.converged}};
            write_text(output_path(g, "evaluation.json"), outdoc.dump());
            std::cout << "average value " << ribe::format_double(outdoc["average_value"].get<double>()) << '\n';
        } else if (exp_run->parsed()) {
            const auto cfg = load_config(g, exp_args);
            const auto outcome = ribe::run_transfer_grid_collect(cfg);
            const auto path = output_path(g, "results.csv");
            auto out = open_out(path);
            ribe::write_run_csv(out, outcome.records);
            std::cout << "wrote " << path.string() << " (" << outcome.records.size() << " rows)\n";
            write_meta(g, cfg, "results");
            for (const auto& e : outcome.errors) std::cerr << "error: " << e << '\n';
            if (!outcome.errors.empty()) return kUsage;
            return report_bounds(outcome.records);
        } else if (exp_bounds->parsed()) {
            auto cfg = load_config(g, exp_args);
            const auto records = ribe::verify_bounds(cfg, false);
            const auto path = output_path(g, "bounds.csv");
            auto out = open_out(path);
            write_bounds_csv(out, records);
            std::cout << "wrote " << path.string() << '\n';
            return report_bounds(records);
        } else if (exp_tv->parsed()) {
            const auto cfg = load_config(g, exp_args);
            const auto curve = ribe::tv_convergence_curve(cfg);
            const auto path = output_path(g, "tv_curve.csv");
            auto out = open_out(path);
            ribe::write_tv_curve_csv(out, curve);
            std::cout << "wrote " << path.string() << "\ntriangle checks " << curve.triangle_checked
                      << ", violations " << curve.triangle_violations << '\n';
            if (curve.triangle_violations > 0) return kCorrectness;
        } else if (exp_scaling->parsed()) {
            auto cfg = load_config(g, exp_args);
            const auto result = ribe::suboptimality_scaling(cfg);
            const auto path = output_path(g, "scaling.csv");
            auto out = open_out(path);
            ribe::write_scaling_csv(out, result);
            std::cout << "wrote " << path.string() << '\n';
            for (const auto& s : result.slopes)
                std::cout << s.estimator << " R=" << ribe::format_double(s.radius)
                          << " slope " << ribe::format_double(s.slope) << '\n';
        } else if (crb_cmd->parsed()) {
            const ribe::Distribution p(parse_list(crb_p));
            std::vector<double> features;
            std::size_t dim = 0;
            if (crb_moments > 0) {
                features = ribe::power_features(p.size(), crb_moments);
                dim = crb_moments;
            } else if (!crb_features.empty()) {
                for (const auto& row : parse_matrix(crb_features)) {
                    if (row.size() != p.size())
                        throw ribe::Error(ribe::ErrorCode::DimensionMismatch, "feature rows must have one entry per state");
                    features.insert(features.end(), row.begin(), row.end());
                    ++dim;
                }
            }
            const auto regular = ribe::crb(p, crb_n);
            const auto bound = ribe::crb(p, crb_n, features, dim);
            json doc{{"n", crb_n},
                     {"crb", matrix_json(bound)},
                     {"trace", bound.trace()},
                     {"regular_trace", regular.trace()},
                     {"fim", matrix_json(ribe::fim(p, crb_n))}};
            write_text(output_path(g, "crb.json"), doc.dump());
            std::cout << "trace " << ribe::format_double(bound.trace()) << " (regular "
                      << ribe::format_double(regular.trace()) << ")\n";
        } else if (fim_cmd->parsed()) {
            const auto bounds = parse_list(fim_bounds);
            if (bounds.size() != fim_moments)
                throw ribe::Error(ribe::ErrorCode::InvalidArgument, "--bounds needs one value per moment");
            const auto features = ribe::power_features(fim_states, fim_moments);
            const auto r = ribe::fim_trace_program(features, bounds, fim_states, fim_n);
            json doc{{"with", {{"q", r.with_constraints.q.vector()}, {"trace", r.with_constraints.trace}}},
                     {"without", {{"q", r.without_constraints.q.vector()}, {"trace", r.without_constraints.trace}}},
                     {"ratio", r.ratio}};
            write_text(output_path(g, "fim_trace.json"), doc.dump());
            std::cout << "trace with " << ribe::format_double(r.with_constraints.trace) << ", without "
                      << ribe::format_double(r.without_constraints.trace) << '\n';
        } else if (plot_cmd->parsed()) {
            std::ifstream in(plot_csv);
            const auto table = ribe::read_csv(in);
            plot.log_x = !plot_linear_x;
            const auto path = output_path(g, fs::path(plot_csv).stem().string() + "_" + plot.y + ".svg");
            auto out = open_out(path);
            ribe::write_svg_plot(out, table, plot);
            std::cout << "wrote " << path.string() << '\n';
        }
    } catch (const ribe::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ribe::ErrorCode::BoundViolated ? kCorrectness : kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return 0;
}
