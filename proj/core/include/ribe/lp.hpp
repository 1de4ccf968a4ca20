#pragma once

#include <cstddef>
#include <vector>

namespace ribe::lp {

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Constraint {
    std::vector<double> coeffs;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

/// min c'x  s.t.  rows,  x >= 0.
struct LinearProgram {
    std::size_t num_vars = 0;
    std::vector<double> objective;
    std::vector<Constraint> constraints;

    explicit LinearProgram(std::size_t n) : num_vars(n), objective(n, 0.0) {}

    void add(std::vector<double> coeffs, Sense sense, double rhs) {
        constraints.push_back({std::move(coeffs), sense, rhs});
    }
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
    Status status = Status::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t pivots = 0;
};

/**
 * Dense two-phase tableau simplex. Dantzig pricing with a switch to Bland's
 * rule after a run of degenerate pivots, so it terminates on degenerate
 * problems. Meant for small programs (a few hundred columns).
 */
Solution solve(const LinearProgram& program, std::size_t max_pivots = 100000);

} // namespace ribe::lp
