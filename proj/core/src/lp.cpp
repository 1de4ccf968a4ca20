#include "ribe/lp.hpp"

#include "ribe/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ribe::lp {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-11;
constexpr std::size_t kDegenerateSwitch = 50;

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), cells_(rows * (cols + 1), 0.0), basis_(rows, 0) {}

    double& at(std::size_t r, std::size_t c) { return cells_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return cells_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    double rhs(std::size_t r) const { return at(r, cols_); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::vector<std::size_t>& basis() { return basis_; }

    void pivot(std::size_t pr, std::size_t pc, std::vector<double>& cost_row, double& cost_rhs) {
        const double inv = 1.0 / at(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) *= inv;
        at(pr, pc) = 1.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        const double f = cost_row[pc];
        if (f != 0.0) {
            for (std::size_t c = 0; c < cols_; ++c) cost_row[c] -= f * at(pr, c);
            cost_rhs -= f * rhs(pr);
            cost_row[pc] = 0.0;
        }
        basis_[pr] = pc;
    }

    void drop_row(std::size_t r) {
        for (std::size_t c = 0; c <= cols_; ++c) at(r, c) = 0.0;
        dead_.resize(rows_, false);
        dead_[r] = true;
    }
    bool dead(std::size_t r) const { return !dead_.empty() && dead_[r]; }

private:
    std::size_t rows_, cols_;
    std::vector<double> cells_;
    std::vector<std::size_t> basis_;
    std::vector<bool> dead_;
};

// Runs simplex iterations on the given reduced-cost row. Columns with
// allowed[c] == false never enter.
Status iterate(Tableau& t, std::vector<double>& cost, double& cost_rhs,
               const std::vector<bool>& allowed, std::size_t& pivots, std::size_t max_pivots) {
    std::size_t degenerate_run = 0;
    while (true) {
        if (pivots >= max_pivots) return Status::IterationLimit;
        const bool bland = degenerate_run >= kDegenerateSwitch;
        std::size_t enter = t.cols();
        double best = -kCostEps;
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (!allowed[c] || cost[c] >= -kCostEps) continue;
            if (bland) {
                enter = c;
                break;
            }
            if (cost[c] < best) {
                best = cost[c];
                enter = c;
            }
        }
        if (enter == t.cols()) return Status::Optimal;

        std::size_t leave = t.rows();
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < t.rows(); ++r) {
            if (t.dead(r)) continue;
            const double a = t.at(r, enter);
            if (a <= kPivotEps) continue;
            const double ratio = std::max(t.rhs(r), 0.0) / a;
            if (ratio < best_ratio - 1e-14 ||
                (ratio <= best_ratio + 1e-14 && leave < t.rows() && t.basis()[r] < t.basis()[leave])) {
                best_ratio = ratio;
                leave = r;
            }
        }
        if (leave == t.rows()) return Status::Unbounded;
        degenerate_run = best_ratio <= 1e-14 ? degenerate_run + 1 : 0;
        t.pivot(leave, enter, cost, cost_rhs);
        ++pivots;
    }
}

} // namespace

Solution solve(const LinearProgram& program, std::size_t max_pivots) {
    const std::size_t n = program.num_vars;
    const std::size_t m = program.constraints.size();
    if (program.objective.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "LP objective length differs from num_vars");

    // Normalize so every rhs is nonnegative.
    struct Row {
        std::vector<double> coeffs;
        Sense sense;
        double rhs;
    };
    std::vector<Row> rows;
    rows.reserve(m);
    std::size_t slack_count = 0, artificial_count = 0;
    for (const auto& c : program.constraints) {
        if (c.coeffs.size() != n)
            throw Error(ErrorCode::DimensionMismatch, "LP constraint length differs from num_vars");
        Row r{c.coeffs, c.sense, c.rhs};
        if (r.rhs < 0.0) {
            for (auto& x : r.coeffs) x = -x;
            r.rhs = -r.rhs;
            if (r.sense == Sense::LessEqual) r.sense = Sense::GreaterEqual;
            else if (r.sense == Sense::GreaterEqual) r.sense = Sense::LessEqual;
        }
        if (r.sense != Sense::Equal) ++slack_count;
        if (r.sense != Sense::LessEqual) ++artificial_count;
        rows.push_back(std::move(r));
    }

    const std::size_t slack0 = n, art0 = n + slack_count, cols = n + slack_count + artificial_count;
    Tableau t(m, cols);
    std::size_t next_slack = slack0, next_art = art0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) t.at(i, j) = rows[i].coeffs[j];
        t.rhs(i) = rows[i].rhs;
        switch (rows[i].sense) {
        case Sense::LessEqual:
            t.at(i, next_slack) = 1.0;
            t.basis()[i] = next_slack++;
            break;
        case Sense::GreaterEqual:
            t.at(i, next_slack++) = -1.0;
            t.at(i, next_art) = 1.0;
            t.basis()[i] = next_art++;
            break;
        case Sense::Equal:
            t.at(i, next_art) = 1.0;
            t.basis()[i] = next_art++;
            break;
        }
    }

    Solution sol;
    std::vector<bool> allowed(cols, true);

    if (artificial_count > 0) {
        std::vector<double> cost(cols, 0.0);
        double cost_rhs = 0.0;
        for (std::size_t c = art0; c < cols; ++c) cost[c] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis()[i] < art0) continue;
            for (std::size_t c = 0; c < cols; ++c) cost[c] -= t.at(i, c);
            cost_rhs -= t.rhs(i);
        }
        const auto st = iterate(t, cost, cost_rhs, allowed, sol.pivots, max_pivots);
        if (st == Status::IterationLimit) {
            sol.status = st;
            return sol;
        }
        double scale = 1.0;
        for (const auto& r : rows) scale = std::max(scale, std::abs(r.rhs));
        if (-cost_rhs > 1e-9 * scale) {
            sol.status = Status::Infeasible;
            return sol;
        }
        // Drive remaining zero-level artificials out of the basis.
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis()[i] < art0) continue;
            std::size_t col = cols;
            double best = kPivotEps * 1e3;
            for (std::size_t c = 0; c < art0; ++c)
                if (std::abs(t.at(i, c)) > best) {
                    best = std::abs(t.at(i, c));
                    col = c;
                }
            if (col == cols) {
                t.drop_row(i);
            } else {
                std::vector<double> dummy(cols, 0.0);
                double dummy_rhs = 0.0;
                t.pivot(i, col, dummy, dummy_rhs);
                ++sol.pivots;
            }
        }
        for (std::size_t c = art0; c < cols; ++c) allowed[c] = false;
    }

    std::vector<double> cost(cols, 0.0);
    double cost_rhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) cost[j] = program.objective[j];
    for (std::size_t i = 0; i < m; ++i) {
        if (t.dead(i)) continue;
        const double cb = t.basis()[i] < n ? program.objective[t.basis()[i]] : 0.0;
        if (cb == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) cost[c] -= cb * t.at(i, c);
        cost_rhs -= cb * t.rhs(i);
    }
    sol.status = iterate(t, cost, cost_rhs, allowed, sol.pivots, max_pivots);
    if (sol.status != Status::Optimal) return sol;

    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (!t.dead(i) && t.basis()[i] < n) sol.x[t.basis()[i]] = std::max(t.rhs(i), 0.0);
    sol.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective += program.objective[j] * sol.x[j];
    return sol;
}

} // namespace ribe::lp
