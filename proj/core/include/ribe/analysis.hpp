#pragma once

#include "ribe/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ribe {

/// Dense row-major matrix used for the information-theoretic summaries.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double trace() const;
};

/// Fisher information of n multinomial draws: n * diag(1/p). Throws ZeroProbability.
Matrix fim(const Distribution& p, std::size_t n);

/**
 * Cramer-Rao bound for the multinomial parameter. Without features this is
 * (1/n)(diag p - p p'). With an M x S feature matrix (row-major) the moment
 * constrained bound C_R - (1/n) B S^+ B' is returned, where
 * B_i = p_i (phi_i - mean phi) and S is the feature covariance under p.
 */
Matrix crb(const Distribution& p, std::size_t n, std::span<const double> features = {},
           std::size_t feature_dim = 0);

/// Smallest eigenvalue of the symmetric matrix a - b.
double min_eigenvalue_of_difference(const Matrix& a, const Matrix& b);

struct TraceSolution {
    Distribution q;
    double trace = 0.0;
    std::size_t iterations = 0;
};

struct FimTraceResult {
    TraceSolution with_constraints;
    TraceSolution without_constraints;
    double ratio = 1.0; ///< with / without
};

/**
 * min_q n * sum_i 1/q_i over the simplex, with and without E_q[phi_j] <= c_j.
 * `features` is M x S row-major. Throws InfeasibleBounds.
 */
FimTraceResult fim_trace_program(std::span<const double> features, std::span<const double> bounds,
                                 std::size_t states, std::size_t n);

/// Raw-moment features x^j, j = 1..M, with x = i / (S - 1).
std::vector<double> power_features(std::size_t states, std::size_t moments);

} // namespace ribe
