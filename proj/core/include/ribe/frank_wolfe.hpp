#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace ribe::fw {

struct Options {
    double gap_tolerance = 1e-8;
    std::size_t max_iterations = 10000;
};

struct Result {
    std::vector<double> x;
    std::size_t iterations = 0;
    double gap = 0.0;
    bool converged = false;
};

/// Smallest coordinate used when forming log-likelihood gradients.
inline constexpr double kInteriorFloor = 1e-12;

/**
 * Normalized multinomial log-likelihood sum_j w_j log x_j with w = N / n.
 * Coordinates with w_j = 0 contribute nothing (0 log 0 = 0).
 */
class LogLikelihood {
public:
    explicit LogLikelihood(std::vector<double> weights) : w_(std::move(weights)) {}

    double value(std::span<const double> x) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < w_.size(); ++j)
            if (w_[j] > 0.0) acc += w_[j] * std::log(x[j]);
        return acc;
    }
    void gradient(std::span<const double> x, std::span<double> g) const {
        for (std::size_t j = 0; j < w_.size(); ++j)
            g[j] = w_[j] > 0.0 ? w_[j] / std::max(x[j], kInteriorFloor) : 0.0;
    }
    /// d/dgamma of value(x + gamma d); -inf when a weighted coordinate hits zero.
    double slope(std::span<const double> x, std::span<const double> d, double gamma) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < w_.size(); ++j) {
            if (w_[j] == 0.0 || d[j] == 0.0) continue;
            const double xj = x[j] + gamma * d[j];
            if (xj <= 0.0) return d[j] < 0.0 ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
            acc += w_[j] * d[j] / xj;
        }
        return acc;
    }
    const std::vector<double>& weights() const { return w_; }

private:
    std::vector<double> w_;
};

/// -scale * sum_j 1/x_j, i.e. the negated FIM trace of a multinomial.
class NegativeInverseSum {
public:
    explicit NegativeInverseSum(double scale) : scale_(scale) {}

    double value(std::span<const double> x) const {
        double acc = 0.0;
        for (double xj : x) acc += 1.0 / xj;
        return -scale_ * acc;
    }
    void gradient(std::span<const double> x, std::span<double> g) const {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double xj = std::max(x[j], kInteriorFloor);
            g[j] = scale_ / (xj * xj);
        }
    }
    double slope(std::span<const double> x, std::span<const double> d, double gamma) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (d[j] == 0.0) continue;
            const double xj = x[j] + gamma * d[j];
            if (xj <= 0.0) return d[j] < 0.0 ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
            acc += d[j] / (xj * xj);
        }
        return scale_ * acc;
    }

private:
    double scale_;
};

namespace detail {

/// Maximizer of a concave 1-D function on [0, hi] given its derivative.
template <class Slope>
double line_search(Slope&& slope, double hi) {
    if (hi <= 0.0) return 0.0;
    const double at_hi = slope(hi);
    if (at_hi >= 0.0) return hi;
    double lo = 0.0, up = hi;
    if (!(slope(0.0) > 0.0)) return 0.0;
    for (int it = 0; it < 200 && up - lo > 1e-17 * hi; ++it) {
        const double mid = 0.5 * (lo + up);
        (slope(mid) > 0.0 ? lo : up) = mid;
    }
    return lo;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace detail

/**
 * Pairwise Frank-Wolfe maximization of a concave objective over a polytope
 * given only by its linear maximization oracle `lmo(gradient) -> vertex`.
 * Iterates are convex combinations of oracle outputs and `x0`, so every
 * iterate is feasible. Mass is shifted from the worst active atom to the
 * oracle vertex with an exact line search; stops when the Frank-Wolfe duality
 * gap is at most `gap_tolerance`.
 */
template <class Objective, class Oracle>
Result maximize(const Objective& objective, Oracle&& lmo, std::vector<double> x0,
                const Options& options = {}) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> atoms{x0};
    std::vector<double> alpha{1.0};
    Result result;
    result.x = std::move(x0);
    std::vector<double> g(n), d(n);

    for (std::size_t k = 0; k < options.max_iterations; ++k) {
        objective.gradient(result.x, g);
        std::vector<double> s = lmo(std::span<const double>(g));
        result.gap = detail::dot(g, s) - detail::dot(g, result.x);
        result.iterations = k;
        if (result.gap <= options.gap_tolerance) {
            result.converged = true;
            break;
        }

        std::size_t away = 0;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const double val = detail::dot(g, atoms[i]);
            if (val < worst) {
                worst = val;
                away = i;
            }
        }

        std::size_t target = atoms.size();
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (atoms[i] == s) {
                target = i;
                break;
            }

        double hi;
        bool pairwise = target != away;
        if (pairwise) {
            for (std::size_t j = 0; j < n; ++j) d[j] = s[j] - atoms[away][j];
            hi = alpha[away];
        } else {
            for (std::size_t j = 0; j < n; ++j) d[j] = s[j] - result.x[j];
            hi = 1.0;
        }
        const double step = detail::line_search(
            [&](double gamma) { return objective.slope(result.x, d, gamma); }, hi);
        if (step <= 0.0) {
            result.iterations = k + 1;
            break;
        }

        for (std::size_t j = 0; j < n; ++j) result.x[j] += step * d[j];
        if (target == atoms.size()) {
            atoms.push_back(std::move(s));
            alpha.push_back(0.0);
        }
        if (pairwise) {
            alpha[target] += step;
            alpha[away] = step >= hi ? 0.0 : alpha[away] - step;
        } else {
            for (auto& a : alpha) a *= 1.0 - step;
            alpha[target] += step;
        }

        // Drop exhausted atoms and periodically rebuild x from the active set.
        std::size_t w = 0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (alpha[i] > 0.0) {
                if (w != i) {
                    atoms[w] = std::move(atoms[i]);
                    alpha[w] = alpha[i];
                }
                ++w;
            }
        atoms.resize(w);
        alpha.resize(w);
        if ((k + 1) % 64 == 0) {
            const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
            std::fill(result.x.begin(), result.x.end(), 0.0);
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                alpha[i] /= total;
                for (std::size_t j = 0; j < n; ++j) result.x[j] += alpha[i] * atoms[i][j];
            }
        }
        result.iterations = k + 1;
    }

    for (auto& xj : result.x) xj = std::max(xj, 0.0);
    const double total = std::accumulate(result.x.begin(), result.x.end(), 0.0);
    for (auto& xj : result.x) xj /= total;
    return result;
}

} // namespace ribe::fw
