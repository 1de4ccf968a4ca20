#include "ribe/ibe.hpp"

#include "barrier.hpp"
#include "ribe/error.hpp"
#include "ribe/lp.hpp"
#include "ribe/robust_dp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace ribe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasibilityTolerance = 1e-12;

std::uint64_t total(RowCounts counts) {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<double> frequencies(RowCounts counts) {
    const std::uint64_t n = total(counts);
    if (n == 0) throw Error(ErrorCode::EmptyCounts, "row has no observations");
    std::vector<double> w(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j)
        w[j] = static_cast<double>(counts[j]) / static_cast<double>(n);
    return w;
}

void require_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + " has size " + std::to_string(got) + ", expected " +
                        std::to_string(want));
}

RowEstimate finish(RowCounts counts, std::vector<double> q, double slack, std::size_t iterations,
                   bool converged) {
    RowEstimate out;
    out.log_likelihood = log_likelihood(counts, q);
    out.distribution = Distribution(std::move(q));
    out.constraint_slack = slack;
    out.iterations = iterations;
    out.converged = converged;
    return out;
}

template <class Oracle>
RowEstimate run_frank_wolfe(RowCounts counts, std::vector<double> start, Oracle&& lmo,
                            const fw::Options& options) {
    fw::LogLikelihood objective(frequencies(counts));
    auto result = fw::maximize(objective, std::forward<Oracle>(lmo), std::move(start), options);
    return finish(counts, std::move(result.x), 0.0, result.iterations, result.converged);
}

std::vector<double> moments(std::span<const double> features, std::size_t dim,
                            std::span<const double> q) {
    const std::size_t states = q.size();
    std::vector<double> mu(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k)
        for (std::size_t j = 0; j < states; ++j) mu[k] += features[k * states + j] * q[j];
    return mu;
}

double moment_slack(std::span<const double> features, std::span<const double> mu_source,
                    std::span<const double> beta, std::span<const double> q) {
    const auto mu = moments(features, mu_source.size(), q);
    double slack = kInf;
    for (std::size_t k = 0; k < mu.size(); ++k)
        slack = std::min(slack, beta[k] - std::abs(mu[k] - mu_source[k]));
    return slack;
}

const double& pick(const std::vector<double>& v, std::size_t index) {
    return v.size() == 1 ? v[0] : v[index];
}

std::vector<double> presmoothed(std::span<const double> row) {
    std::vector<double> out(row.size());
    const double u = kPresmoothWeight / static_cast<double>(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (1.0 - kPresmoothWeight) * row[j] + u;
    return out;
}

std::vector<double> density_caps(const DensityInfo& info, std::size_t s, std::size_t a,
                                 std::size_t actions, std::size_t states) {
    std::vector<double> caps(states);
    const std::size_t pair = s * actions + a;
    if (info.caps.size() == 1) {
        std::fill(caps.begin(), caps.end(), info.caps[0]);
    } else if (info.caps.size() == actions * states) {
        std::fill(caps.begin(), caps.end(), info.caps[pair]);
    } else {
        require_size(info.caps.size(), actions * states * states, "density caps");
        std::copy_n(info.caps.begin() + static_cast<std::ptrdiff_t>(pair * states), states,
                    caps.begin());
    }
    return caps;
}

std::vector<double> moment_beta(const MomentInfo& info, std::size_t pair) {
    if (info.beta.size() == 1) return std::vector<double>(info.dim, info.beta[0]);
    if (info.beta.size() == info.dim) return info.beta;
    std::vector<double> beta(info.dim);
    std::copy_n(info.beta.begin() + static_cast<std::ptrdiff_t>(pair * info.dim), info.dim,
                beta.begin());
    return beta;
}

std::vector<double> lds_theta_source(const LdsInfo& info, std::size_t pair) {
    if (info.theta_source.size() == info.dim) return info.theta_source;
    std::vector<double> theta(info.dim);
    std::copy_n(info.theta_source.begin() + static_cast<std::ptrdiff_t>(pair * info.dim), info.dim,
                theta.begin());
    return theta;
}

} // namespace

std::string_view kind_name(const SideInfo& info) noexcept {
    static constexpr std::string_view names[] = {"none",    "tv",  "w1",         "moment",
                                                 "density", "lds", "value_aware"};
    return names[info.index()];
}

std::vector<double> default_moment_features(std::size_t states) {
    std::vector<double> f(2 * states);
    for (std::size_t j = 0; j < states; ++j) {
        const double x = states > 1 ? static_cast<double>(j) / static_cast<double>(states - 1) : 0.0;
        f[j] = x;
        f[states + j] = x * x;
    }
    return f;
}

double log_likelihood(RowCounts counts, std::span<const double> q) {
    double acc = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] == 0) continue;
        if (q[j] <= 0.0) return -kInf;
        acc += static_cast<double>(counts[j]) * std::log(q[j]);
    }
    return acc;
}

Distribution vanilla_mle(RowCounts counts) {
    return Distribution(frequencies(counts));
}

RowEstimate estimate_distance_tv(RowCounts counts, const Distribution& p_source, double radius,
                                 const fw::Options& options) {
    require_size(counts.size(), p_source.size(), "counts");
    if (!(radius >= 0.0 && radius <= 1.0))
        throw Error(ErrorCode::InvalidRadius, "TV radius must lie in [0,1]");
    auto mle = frequencies(counts);
    const double mle_gap = tv_distance(mle, p_source.probs());
    if (mle_gap <= radius) return finish(counts, std::move(mle), radius - mle_gap, 0, true);
    if (radius == 0.0) return finish(counts, p_source.vector(), 0.0, 0, true);

    std::vector<double> v(counts.size());
    auto lmo = [&](std::span<const double> g) {
        for (std::size_t j = 0; j < g.size(); ++j) v[j] = -g[j];
        return support_tv(p_source.probs(), v, radius).worst_case_distribution.vector();
    };
    auto out = run_frank_wolfe(counts, p_source.vector(), lmo, options);
    out.constraint_slack = radius - tv_distance(out.distribution, p_source);
    return out;
}

std::vector<double> w1_ball_lmo(std::span<const double> p, const CostMatrix& cost, double radius,
                                std::span<const double> g) {
    const std::size_t n = p.size();
    struct Edge {
        double slope;
        std::size_t row;
        std::size_t step;
        double dc;
    };
    std::vector<std::vector<std::size_t>> hulls(n);
    std::vector<Edge> edges;
    std::vector<std::size_t> order(n);

    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] <= 0.0) continue;
        // Points (cost to j, -g_j); walk the lower convex hull from the cheapest.
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (cost(i, x) != cost(i, y)) return cost(i, x) < cost(i, y);
            if (g[x] != g[y]) return g[x] > g[y];
            return x < y;
        });
        auto& hull = hulls[i];
        double best = kInf;
        for (std::size_t j : order) {
            const double h = -g[j];
            if (!hull.empty() && cost(i, j) == cost(i, hull.back())) continue;
            if (h >= best) continue;
            while (hull.size() >= 2) {
                const std::size_t o = hull[hull.size() - 2], m = hull.back();
                const double cross = (cost(i, m) - cost(i, o)) * (h - (-g[o])) -
                                     ((-g[m]) - (-g[o])) * (cost(i, j) - cost(i, o));
                if (cross <= 0.0)
                    hull.pop_back();
                else
                    break;
            }
            hull.push_back(j);
            best = h;
        }
        for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
            const double dc = cost(i, hull[k + 1]) - cost(i, hull[k]);
            const double dh = g[hull[k]] - g[hull[k + 1]];
            edges.push_back({dh / dc, i, k, dc});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.slope != y.slope) return x.slope < y.slope;
        if (x.row != y.row) return x.row < y.row;
        return x.step < y.step;
    });

    std::vector<std::size_t> position(n, 0);
    std::vector<double> q(n, 0.0);
    double budget = radius;
    std::size_t partial_row = n;
    double fraction = 0.0;
    for (const auto& e : edges) {
        if (position[e.row] != e.step) continue;
        const double need = p[e.row] * e.dc;
        if (need <= budget) {
            budget -= need;
            position[e.row] = e.step + 1;
        } else {
            partial_row = e.row;
            fraction = budget / need;
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] <= 0.0) continue;
        const auto& hull = hulls[i];
        const std::size_t k = position[i];
        if (i == partial_row) {
            q[hull[k]] += (1.0 - fraction) * p[i];
            q[hull[k + 1]] += fraction * p[i];
        } else {
            q[hull[k]] += p[i];
        }
    }
    return q;
}

RowEstimate estimate_distance_w1(RowCounts counts, const Distribution& p_source,
                                 const CostMatrix& cost, double radius,
                                 const fw::Options& options) {
    require_size(counts.size(), p_source.size(), "counts");
    require_size(cost.size(), p_source.size(), "cost matrix");
    if (!(radius >= 0.0)) throw Error(ErrorCode::InvalidRadius, "W1 radius must be >= 0");
    auto mle = frequencies(counts);
    const double mle_gap = w1_distance(mle, p_source.probs(), cost);
    if (mle_gap <= radius) return finish(counts, std::move(mle), radius - mle_gap, 0, true);

    if (radius == 0.0) return finish(counts, p_source.vector(), 0.0, 0, true);

    (void)options;
    auto solved = detail::w1_ball_mle(frequencies(counts), p_source.probs(), cost, radius);
    auto out = finish(counts, std::move(solved.q), 0.0, solved.newton_steps, solved.converged);
    out.constraint_slack = radius - w1_distance(out.distribution, p_source, cost);
    return out;
}

RowEstimate estimate_value_aware(RowCounts counts, const Distribution& p_source,
                                 const CostMatrix& metric, double beta1,
                                 const fw::Options& options) {
    return estimate_distance_w1(counts, p_source, metric, beta1, options);
}

RowEstimate estimate_moment(RowCounts counts, std::span<const double> features,
                            std::span<const double> mu_source, std::span<const double> beta,
                            const fw::Options& options, const Distribution* feasible_start) {
    const std::size_t states = counts.size();
    const std::size_t dim = mu_source.size();
    require_size(features.size(), dim * states, "moment features");
    require_size(beta.size(), dim, "moment tolerance");
    for (double b : beta)
        if (!(b >= 0.0)) throw Error(ErrorCode::InvalidArgument, "moment tolerance must be >= 0");

    auto mle = frequencies(counts);
    const double mle_slack = moment_slack(features, mu_source, beta, mle);
    if (mle_slack >= -kFeasibilityTolerance) return finish(counts, std::move(mle), mle_slack, 0, true);

    lp::LinearProgram program(states);
    program.add(std::vector<double>(states, 1.0), lp::Sense::Equal, 1.0);
    for (std::size_t k = 0; k < dim; ++k) {
        std::vector<double> row(features.begin() + static_cast<std::ptrdiff_t>(k * states),
                                features.begin() + static_cast<std::ptrdiff_t>((k + 1) * states));
        program.add(row, lp::Sense::LessEqual, mu_source[k] + beta[k]);
        program.add(std::move(row), lp::Sense::GreaterEqual, mu_source[k] - beta[k]);
    }

    if (auto solved = detail::moment_box_mle(frequencies(counts), features, mu_source, beta)) {
        auto out = finish(counts, std::move(solved->q), 0.0, solved->newton_steps, solved->converged);
        out.constraint_slack = moment_slack(features, mu_source, beta, out.distribution.probs());
        return out;
    }

    // No interior point: fall back to Frank-Wolfe over the LP oracle.
    std::vector<double> start;
    if (feasible_start &&
        moment_slack(features, mu_source, beta, feasible_start->probs()) >= -kFeasibilityTolerance) {
        start = feasible_start->vector();
    } else {
        auto phase = lp::solve(program);
        if (phase.status != lp::Status::Optimal)
            throw Error(ErrorCode::InfeasibleConstraint, "moment constraints admit no distribution");
        start = std::move(phase.x);
    }

    auto lmo = [&](std::span<const double> g) {
        double scale = 0.0;
        for (double x : g) scale = std::max(scale, std::abs(x));
        for (std::size_t j = 0; j < states; ++j) program.objective[j] = -g[j] / scale;
        auto sol = lp::solve(program);
        if (sol.status != lp::Status::Optimal)
            throw Error(ErrorCode::SolverFailure, "moment oracle LP did not solve");
        for (auto& x : sol.x) x = std::max(x, 0.0);
        const double mass = std::accumulate(sol.x.begin(), sol.x.end(), 0.0);
        for (auto& x : sol.x) x /= mass;
        return sol.x;
    };
    auto out = run_frank_wolfe(counts, std::move(start), lmo, options);
    out.constraint_slack = moment_slack(features, mu_source, beta, out.distribution.probs());
    return out;
}

RowEstimate estimate_density(RowCounts counts, const Distribution& p_source,
                             std::span<const double> caps) {
    const std::size_t states = counts.size();
    require_size(p_source.size(), states, "source row");
    require_size(caps.size(), states, "density caps");
    std::vector<double> ceiling(states);
    double room = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
        if (!(caps[j] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "density caps must be >= 0");
        ceiling[j] = caps[j] * p_source[j];
        room += ceiling[j];
    }
    if (room < 1.0 - kSimplexTolerance)
        throw Error(ErrorCode::InfeasibleCaps, "density caps admit no distribution");
    const std::uint64_t n = total(counts);
    if (n == 0) throw Error(ErrorCode::EmptyCounts, "row has no observations");

    // q_j = min(N_j / lambda, ceiling_j). Coordinates are capped exactly when
    // lambda <= N_j / ceiling_j, so scan those thresholds in decreasing order.
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < states; ++j)
        if (counts[j] > 0) order.push_back(j);
    auto threshold = [&](std::size_t j) {
        return ceiling[j] > 0.0 ? static_cast<double>(counts[j]) / ceiling[j] : kInf;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const double tx = threshold(x), ty = threshold(y);
        return tx != ty ? tx > ty : x < y;
    });

    std::vector<double> q(states, 0.0);
    double free_counts = 0.0;
    for (std::size_t j : order) free_counts += static_cast<double>(counts[j]);
    double capped_mass = 0.0;
    std::size_t num_capped = 0;
    double lambda = 0.0;
    while (num_capped < order.size()) {
        lambda = free_counts / std::max(1.0 - capped_mass, 1e-300);
        const std::size_t j = order[num_capped];
        if (lambda > threshold(j)) break;
        capped_mass += ceiling[j];
        free_counts -= static_cast<double>(counts[j]);
        ++num_capped;
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t j = order[k];
        q[j] = k < num_capped ? ceiling[j] : static_cast<double>(counts[j]) / lambda;
    }
    double placed = std::accumulate(q.begin(), q.end(), 0.0);
    if (placed < 1.0) {
        // Every observed state is at its ceiling; spread the rest over unobserved
        // states in proportion to their ceilings.
        double spare = 0.0;
        for (std::size_t j = 0; j < states; ++j)
            if (counts[j] == 0) spare += ceiling[j];
        const double remaining = 1.0 - placed;
        for (std::size_t j = 0; j < states; ++j)
            if (counts[j] == 0 && spare > 0.0) q[j] = remaining * ceiling[j] / spare;
    }
    placed = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& x : q) x /= placed;

    double slack = kInf;
    for (std::size_t j = 0; j < states; ++j) slack = std::min(slack, ceiling[j] - q[j]);
    return finish(counts, std::move(q), slack, 1, true);
}

std::vector<double> lds_distribution(std::span<const double> psi, std::span<const double> theta) {
    const std::size_t dim = theta.size();
    const std::size_t states = psi.size() / dim;
    std::vector<double> z(states, 0.0);
    for (std::size_t k = 0; k < dim; ++k)
        for (std::size_t j = 0; j < states; ++j) z[j] += theta[k] * psi[k * states + j];
    const double top = *std::max_element(z.begin(), z.end());
    double mass = 0.0;
    for (auto& x : z) {
        x = std::exp(x - top);
        mass += x;
    }
    for (auto& x : z) x /= mass;
    return z;
}

LdsEstimate estimate_lds(RowCounts counts, std::span<const double> psi,
                         std::span<const double> theta_source, std::span<const std::size_t> shared,
                         const LdsOptions& options) {
    const std::size_t states = counts.size();
    const std::size_t dim = theta_source.size();
    require_size(psi.size(), dim * states, "LDS features");
    std::vector<bool> pinned(dim, false);
    for (std::size_t k : shared) {
        if (k >= dim) throw Error(ErrorCode::InvalidArgument, "shared index out of range");
        pinned[k] = true;
    }
    std::vector<std::size_t> open;
    for (std::size_t k = 0; k < dim; ++k)
        if (!pinned[k]) open.push_back(k);
    const auto w = frequencies(counts);
    const std::size_t m = open.size();

    std::vector<double> theta(theta_source.begin(), theta_source.end());
    auto objective = [&](const std::vector<double>& t) {
        const auto q = lds_distribution(psi, t);
        double acc = 0.0;
        for (std::size_t j = 0; j < states; ++j)
            if (w[j] > 0.0) acc += w[j] * std::log(q[j]);
        return acc;
    };

    LdsEstimate out;
    std::size_t iter = 0;
    bool converged = m == 0;
    Eigen::VectorXd grad(static_cast<Eigen::Index>(m));
    Eigen::MatrixXd cov(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (; iter < options.max_iterations && m > 0; ++iter) {
        const auto q = lds_distribution(psi, theta);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
        cov.setZero();
        grad.setZero();
        for (std::size_t j = 0; j < states; ++j) {
            for (std::size_t a = 0; a < m; ++a) {
                const double pa = psi[open[a] * states + j];
                grad[static_cast<Eigen::Index>(a)] += pa * (w[j] - q[j]);
                mean[static_cast<Eigen::Index>(a)] += pa * q[j];
                for (std::size_t b = 0; b < m; ++b)
                    cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                        q[j] * pa * psi[open[b] * states + j];
            }
        }
        cov -= mean * mean.transpose();
        if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            converged = true;
            break;
        }

        const double base = objective(theta);
        auto try_direction = [&](const Eigen::VectorXd& dir) {
            const double rate = grad.dot(dir);
            if (!(rate > 0.0) || !dir.allFinite()) return false;
            double t = 1.0;
            std::vector<double> next = theta;
            for (int k = 0; k < 60; ++k, t *= 0.5) {
                for (std::size_t a = 0; a < m; ++a)
                    next[open[a]] = theta[open[a]] + t * dir[static_cast<Eigen::Index>(a)];
                if (objective(next) >= base + 1e-4 * t * rate) {
                    theta = next;
                    return true;
                }
            }
            return false;
        };
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        Eigen::VectorXd newton = ldlt.solve(grad);
        if (!(ldlt.info() == Eigen::Success && try_direction(newton)) && !try_direction(grad))
            break;
    }

    out.theta = theta;
    const auto q = lds_distribution(psi, theta);
    static_cast<RowEstimate&>(out) = finish(counts, q, kInf, iter, converged);
    return out;
}

double row_constraint_slack(const SideInfo& info, const TransitionKernel& source, std::size_t s,
                            std::size_t a, std::span<const double> q) {
    const std::size_t pair = s * source.num_actions() + a;
    const auto p = source.row(s, a);
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, DistanceTvInfo>) {
                return pick(x.radius, pair) - tv_distance(q, p);
            } else if constexpr (std::is_same_v<T, DistanceW1Info>) {
                return pick(x.radius, pair) - w1_distance(q, p, x.cost);
            } else if constexpr (std::is_same_v<T, ValueAwareInfo>) {
                return pick(x.beta1, pair) - w1_distance(q, p, x.metric);
            } else if constexpr (std::is_same_v<T, MomentInfo>) {
                const auto mu = moments(x.features, x.dim, p);
                return moment_slack(x.features, mu, moment_beta(x, pair), q);
            } else if constexpr (std::is_same_v<T, DensityInfo>) {
                const auto base = x.presmooth ? presmoothed(p) : std::vector<double>(p.begin(), p.end());
                const auto caps = density_caps(x, s, a, source.num_actions(), source.num_states());
                double slack = kInf;
                for (std::size_t j = 0; j < q.size(); ++j)
                    slack = std::min(slack, caps[j] * base[j] - q[j]);
                return slack;
            } else {
                return kInf;
            }
        },
        info);
}

EstimateReport estimate_kernel(const TransitionCounts& counts, const TransitionKernel& source,
                               const SideInfo& info, PriorDefault prior,
                               const EstimateOptions& options) {
    const std::size_t states = source.num_states(), actions = source.num_actions();
    if (counts.num_states() != states || counts.num_actions() != actions)
        throw Error(ErrorCode::ShapeMismatch, "counts and source kernel shapes differ");

    EstimateReport report;
    std::vector<double> flat(states * actions * states);
    report.diagnostics.resize(states * actions);
    const bool is_lds = std::holds_alternative<LdsInfo>(info);
    if (is_lds) report.lds_theta.resize(states * actions * std::get<LdsInfo>(info).dim);

    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t a = 0; a < actions; ++a) {
            const std::size_t pair = s * actions + a;
            const auto row = counts.row(s, a);
            auto& diag = report.diagnostics[pair];
            diag.s = s;
            diag.a = a;
            diag.n = counts.pair_total(s, a);
            std::vector<double> q;

            if (diag.n == 0) {
                diag.fallback_used = true;
                if (is_lds || prior == PriorDefault::Uniform)
                    q.assign(states, 1.0 / static_cast<double>(states));
                else
                    q.assign(source.row(s, a).begin(), source.row(s, a).end());
                if (is_lds) {
                    const auto& x = std::get<LdsInfo>(info);
                    const auto theta = lds_theta_source(x, pair);
                    std::copy(theta.begin(), theta.end(),
                              report.lds_theta.begin() + static_cast<std::ptrdiff_t>(pair * x.dim));
                }
                diag.log_likelihood = 0.0;
                diag.constraint_slack = row_constraint_slack(info, source, s, a, q);
            } else {
                RowEstimate est;
                try {
                    const Distribution p = source.distribution(s, a);
                    std::visit(
                        [&](const auto& x) {
                            using T = std::decay_t<decltype(x)>;
                            if constexpr (std::is_same_v<T, NoSideInfo>) {
                                est = finish(row, vanilla_mle(row).vector(), kInf, 0, true);
                            } else if constexpr (std::is_same_v<T, DistanceTvInfo>) {
                                est = estimate_distance_tv(row, p, pick(x.radius, pair), options.frank_wolfe);
                            } else if constexpr (std::is_same_v<T, DistanceW1Info>) {
                                est = estimate_distance_w1(row, p, x.cost, pick(x.radius, pair),
                                                           options.frank_wolfe);
                            } else if constexpr (std::is_same_v<T, ValueAwareInfo>) {
                                est = estimate_value_aware(row, p, x.metric, pick(x.beta1, pair),
                                                           options.frank_wolfe);
                            } else if constexpr (std::is_same_v<T, MomentInfo>) {
                                const auto mu = moments(x.features, x.dim, p.probs());
                                est = estimate_moment(row, x.features, mu, moment_beta(x, pair),
                                                      options.frank_wolfe, &p);
                            } else if constexpr (std::is_same_v<T, DensityInfo>) {
                                const Distribution base =
                                    x.presmooth ? Distribution(presmoothed(p.probs())) : p;
                                est = estimate_density(row, base,
                                                       density_caps(x, s, a, actions, states));
                            } else if constexpr (std::is_same_v<T, LdsInfo>) {
                                auto lds = estimate_lds(row, x.psi, lds_theta_source(x, pair),
                                                        x.shared, options.lds);
                                std::copy(lds.theta.begin(), lds.theta.end(),
                                          report.lds_theta.begin() +
                                              static_cast<std::ptrdiff_t>(pair * x.dim));
                                est = std::move(lds);
                            }
                        },
                        info);
                } catch (const Error& e) {
                    throw Error(e.code(), "(s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                              "): " + e.what());
                }
                q = est.distribution.vector();
                diag.log_likelihood = est.log_likelihood;
                diag.constraint_slack = est.constraint_slack;
                diag.iterations = est.iterations;
            }
            std::copy(q.begin(), q.end(), flat.begin() + static_cast<std::ptrdiff_t>(pair * states));
        }
    }
    report.kernel = TransitionKernel(states, actions, std::move(flat));
    return report;
}

void write_diagnostics_csv(std::ostream& out, const EstimateReport& report) {
    out << "s,a,N,loglik,slack,iters,fallback\n";
    char buf[64];
    auto num = [&](double x) -> const char* {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    };
    for (const auto& d : report.diagnostics) {
        out << d.s << ',' << d.a << ',' << d.n << ',' << num(d.log_likelihood) << ',';
        out << num(d.constraint_slack) << ',' << d.iterations << ',' << (d.fallback_used ? 1 : 0)
            << '\n';
    }
}

SideInfo derive_true_side_info(const TransitionKernel& source, const TransitionKernel& target,
                               SideInfoKind kind, const DeriveOptions& options) {
    if (!source.same_shape(target))
        throw Error(ErrorCode::ShapeMismatch, "source and target kernels differ in shape");
    const std::size_t states = source.num_states(), actions = source.num_actions();
    const std::size_t pairs = states * actions;

    switch (kind) {
    case SideInfoKind::None:
        return NoSideInfo{};
    case SideInfoKind::DistanceTV:
        return DistanceTvInfo{kernel_row_tv(source, target)};
    case SideInfoKind::DistanceW1:
    case SideInfoKind::ValueAware: {
        const bool w1 = kind == SideInfoKind::DistanceW1;
        CostMatrix cost = w1 ? options.w1_cost : options.value_metric;
        if (cost.size() == 0) {
            if (!w1) throw Error(ErrorCode::InvalidArgument, "value-aware side information needs a metric");
            cost = CostMatrix::discrete(states);
        }
        require_size(cost.size(), states, "cost matrix");
        std::vector<double> radius(pairs);
        for (std::size_t s = 0; s < states; ++s)
            for (std::size_t a = 0; a < actions; ++a)
                radius[s * actions + a] = w1_distance(source.row(s, a), target.row(s, a), cost);
        if (w1) return DistanceW1Info{std::move(radius), std::move(cost)};
        return ValueAwareInfo{std::move(radius), std::move(cost)};
    }
    case SideInfoKind::Moment: {
        MomentInfo info;
        if (options.features.empty()) {
            info.features = default_moment_features(states);
            info.dim = 2;
        } else {
            info.features = options.features;
            info.dim = options.feature_dim;
            require_size(info.features.size(), info.dim * states, "moment features");
        }
        info.beta.resize(pairs * info.dim);
        for (std::size_t s = 0; s < states; ++s)
            for (std::size_t a = 0; a < actions; ++a) {
                const auto ms = moments(info.features, info.dim, source.row(s, a));
                const auto mt = moments(info.features, info.dim, target.row(s, a));
                for (std::size_t k = 0; k < info.dim; ++k)
                    info.beta[(s * actions + a) * info.dim + k] = std::abs(mt[k] - ms[k]);
            }
        return info;
    }
    case SideInfoKind::DensityGlobal:
    case SideInfoKind::DensityLocal: {
        DensityInfo info;
        const bool global = kind == SideInfoKind::DensityGlobal;
        info.mode = global ? DensityMode::Global : DensityMode::Local;
        info.presmooth = options.presmooth;
        info.caps.resize(global ? pairs : pairs * states);
        for (std::size_t s = 0; s < states; ++s)
            for (std::size_t a = 0; a < actions; ++a) {
                const std::size_t pair = s * actions + a;
                const auto pt = target.row(s, a);
                const auto ps = options.presmooth
                                    ? presmoothed(source.row(s, a))
                                    : std::vector<double>(source.row(s, a).begin(), source.row(s, a).end());
                double top = 0.0;
                for (std::size_t j = 0; j < states; ++j) {
                    double ratio = 0.0;
                    if (ps[j] > 0.0) {
                        ratio = pt[j] / ps[j];
                    } else if (pt[j] > 0.0) {
                        throw Error(ErrorCode::SupportMismatch,
                                    "target row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                        ") has mass outside the source support");
                    }
                    top = std::max(top, ratio);
                    if (!global) info.caps[pair * states + j] = ratio + 1.0;
                }
                if (global) info.caps[pair] = top;
            }
        return info;
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown side information kind");
}

} // namespace ribe
