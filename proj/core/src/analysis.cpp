#include "ribe/analysis.hpp"

#include "ribe/error.hpp"
#include "ribe/frank_wolfe.hpp"
#include "ribe/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ribe {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return out;
}

void require_positive(const Distribution& p) {
    for (double x : p)
        if (!(x > 0.0)) throw Error(ErrorCode::ZeroProbability, "every probability must be positive");
}

TraceSolution solve_trace(std::span<const double> features, std::span<const double> bounds,
                          std::size_t states, std::size_t n, bool constrained) {
    const std::size_t dim = constrained ? bounds.size() : 0;
    lp::LinearProgram program(states);
    program.add(std::vector<double>(states, 1.0), lp::Sense::Equal, 1.0);
    for (std::size_t k = 0; k < dim; ++k)
        program.add(std::vector<double>(features.begin() + static_cast<std::ptrdiff_t>(k * states),
                                        features.begin() + static_cast<std::ptrdiff_t>((k + 1) * states)),
                    lp::Sense::LessEqual, bounds[k]);

    std::vector<double> start(states, 1.0 / static_cast<double>(states));
    bool uniform_ok = true;
    for (std::size_t k = 0; k < dim; ++k) {
        double m = 0.0;
        for (std::size_t j = 0; j < states; ++j) m += features[k * states + j] * start[j];
        if (m > bounds[k] + 1e-12) uniform_ok = false;
    }
    if (!uniform_ok) {
        auto phase = lp::solve(program);
        if (phase.status != lp::Status::Optimal)
            throw Error(ErrorCode::InfeasibleBounds, "moment bounds admit no distribution");
        start = std::move(phase.x);
    }

    // Minimizing sum 1/q is maximizing its negation; scaled so optimal values are O(1).
    const double scale = 1.0 / static_cast<double>(states * states);
    fw::NegativeInverseSum objective(scale);
    auto lmo = [&](std::span<const double> g) {
        const double top = *std::max_element(g.begin(), g.end());
        for (std::size_t j = 0; j < states; ++j) program.objective[j] = -g[j] / top;
        auto sol = lp::solve(program);
        if (sol.status != lp::Status::Optimal)
            throw Error(ErrorCode::SolverFailure, "trace oracle LP did not solve");
        for (auto& x : sol.x) x = std::max(x, 0.0);
        const double mass = std::accumulate(sol.x.begin(), sol.x.end(), 0.0);
        for (auto& x : sol.x) x /= mass;
        return sol.x;
    };
    fw::Options options;
    options.gap_tolerance = 1e-10;
    auto result = fw::maximize(objective, lmo, std::move(start), options);
    TraceSolution out;
    double inv = 0.0;
    for (double x : result.x) inv += 1.0 / x;
    out.trace = static_cast<double>(n) * inv;
    out.q = Distribution(std::move(result.x));
    out.iterations = result.iterations;
    return out;
}

} // namespace

double Matrix::trace() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < std::min(rows, cols); ++i) acc += (*this)(i, i);
    return acc;
}

Matrix fim(const Distribution& p, std::size_t n) {
    require_positive(p);
    Matrix out(p.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out(i, i) = static_cast<double>(n) / p[i];
    return out;
}

Matrix crb(const Distribution& p, std::size_t n, std::span<const double> features,
           std::size_t feature_dim) {
    require_positive(p);
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "the bound needs n > 0");
    const std::size_t S = p.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix out(S, S);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) out(i, j) = inv_n * ((i == j ? p[i] : 0.0) - p[i] * p[j]);
    if (features.empty() || feature_dim == 0) return out;
    if (features.size() != feature_dim * S)
        throw Error(ErrorCode::DimensionMismatch, "features must be M x S");

    const auto M = static_cast<Eigen::Index>(feature_dim);
    Eigen::MatrixXd phi(M, static_cast<Eigen::Index>(S));
    for (Eigen::Index k = 0; k < M; ++k)
        for (std::size_t j = 0; j < S; ++j)
            phi(k, static_cast<Eigen::Index>(j)) = features[static_cast<std::size_t>(k) * S + j];
    Eigen::VectorXd pv(static_cast<Eigen::Index>(S));
    for (std::size_t j = 0; j < S; ++j) pv[static_cast<Eigen::Index>(j)] = p[j];
    const Eigen::VectorXd mean = phi * pv;
    Eigen::MatrixXd centered = phi.colwise() - mean;
    Eigen::MatrixXd B = (centered * pv.asDiagonal()).transpose(); // S x M
    Eigen::MatrixXd cov = centered * pv.asDiagonal() * centered.transpose();
    const Eigen::MatrixXd cov_pinv = cov.completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::MatrixXd delta = inv_n * B * cov_pinv * B.transpose();
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j)
            out(i, j) -= delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

double min_eigenvalue_of_difference(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols || a.rows != a.cols)
        throw Error(ErrorCode::DimensionMismatch, "matrices must be square and equal in size");
    Eigen::MatrixXd d = to_eigen(a) - to_eigen(b);
    d = 0.5 * (d + d.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(d, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

FimTraceResult fim_trace_program(std::span<const double> features, std::span<const double> bounds,
                                 std::size_t states, std::size_t n) {
    if (states == 0) throw Error(ErrorCode::InvalidArgument, "need at least one state");
    if (features.size() != bounds.size() * states)
        throw Error(ErrorCode::DimensionMismatch, "features must be M x S");
    FimTraceResult out;
    out.without_constraints = solve_trace(features, bounds, states, n, false);
    out.with_constraints = solve_trace(features, bounds, states, n, true);
    out.ratio = out.without_constraints.trace > 0.0
                    ? out.with_constraints.trace / out.without_constraints.trace
                    : 1.0;
    return out;
}

std::vector<double> power_features(std::size_t states, std::size_t moments) {
    std::vector<double> f(moments * states);
    for (std::size_t k = 0; k < moments; ++k)
        for (std::size_t j = 0; j < states; ++j) {
            const double x = states > 1 ? static_cast<double>(j) / static_cast<double>(states - 1) : 0.0;
            f[k * states + j] = std::pow(x, static_cast<double>(k + 1));
        }
    return f;
}

} // namespace ribe
