#include "ribe/distances.hpp"

#include "ribe/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

namespace ribe {

CostMatrix::CostMatrix(std::size_t size, std::vector<double> values)
    : size_(size), values_(std::move(values)) {
    if (values_.size() != size * size)
        throw Error(ErrorCode::DimensionMismatch, "cost matrix must be square");
    for (std::size_t i = 0; i < size; ++i) {
        if (values_[i * size + i] != 0.0)
            throw Error(ErrorCode::InvalidArgument, "cost matrix needs a zero diagonal");
        for (std::size_t j = 0; j < size; ++j) {
            const double c = values_[i * size + j];
            if (!(c >= 0.0) || !std::isfinite(c))
                throw Error(ErrorCode::InvalidArgument, "cost entries must be finite and >= 0");
            if (std::abs(c - values_[j * size + i]) > 1e-12 * std::max(1.0, c))
                throw Error(ErrorCode::InvalidArgument, "cost matrix must be symmetric");
        }
    }
}

CostMatrix CostMatrix::discrete(std::size_t size) {
    std::vector<double> v(size * size, 1.0);
    for (std::size_t i = 0; i < size; ++i) v[i * size + i] = 0.0;
    return {size, std::move(v)};
}

CostMatrix CostMatrix::euclidean(const std::vector<std::vector<double>>& features) {
    const std::size_t n = features.size();
    if (n == 0) throw Error(ErrorCode::DimensionMismatch, "no feature vectors");
    const std::size_t dim = features.front().size();
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (features[i].size() != dim)
            throw Error(ErrorCode::DimensionMismatch, "feature vectors differ in dimension");
        for (std::size_t j = 0; j < i; ++j) {
            double sq = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = features[i][k] - features[j][k];
                sq += d * d;
            }
            v[i * n + j] = v[j * n + i] = std::sqrt(sq);
        }
    }
    return {n, std::move(v)};
}

CostMatrix CostMatrix::from_values(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) v[i * n + j] = std::abs(values[i] - values[j]);
    return {n, std::move(v)};
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw Error(ErrorCode::DimensionMismatch, "tv_distance size mismatch");
    double l1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - q[i]);
    return std::min(1.0, 0.5 * l1);
}

namespace {

struct TreeEdge {
    std::size_t node;
    std::size_t cell;
};

} // namespace

TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost) {
    const std::size_t m = supply.size(), n = demand.size();
    if (m == 0 || n == 0 || cost.size() != m * n)
        throw Error(ErrorCode::DimensionMismatch, "transport shapes disagree");
    const double total_s = std::accumulate(supply.begin(), supply.end(), 0.0);
    const double total_d = std::accumulate(demand.begin(), demand.end(), 0.0);
    if (std::abs(total_s - total_d) > 1e-9 * std::max(1.0, total_s))
        throw Error(ErrorCode::LPInfeasible, "unbalanced transport problem");

    std::vector<double> a(supply.begin(), supply.end()), b(demand.begin(), demand.end());
    // Absorb rounding drift into the demand so the north-west sweep closes exactly.
    if (total_d > 0.0)
        for (auto& x : b) x *= total_s / total_d;

    TransportPlan plan;
    plan.flow.assign(m * n, 0.0);
    std::vector<char> basic(m * n, 0);
    std::vector<std::size_t> cells;
    cells.reserve(m + n - 1);
    {
        std::size_t i = 0, j = 0;
        std::vector<double> ra = a, rb = b;
        while (i < m && j < n) {
            const double x = std::min(ra[i], rb[j]);
            plan.flow[i * n + j] = x;
            basic[i * n + j] = 1;
            cells.push_back(i * n + j);
            ra[i] -= x;
            rb[j] -= x;
            if (i == m - 1) ++j;
            else if (j == n - 1) ++i;
            else if (ra[i] <= rb[j]) ++i;
            else ++j;
        }
    }

    double cmax = 0.0;
    for (double c : cost) cmax = std::max(cmax, std::abs(c));
    const double eps = 1e-13 * std::max(1.0, cmax);

    std::vector<double> u(m), v(n);
    std::vector<std::vector<TreeEdge>> adj(m + n);
    std::vector<std::size_t> parent_node(m + n), parent_cell(m + n);
    std::vector<char> seen(m + n);
    const std::size_t max_iter = 50 * (m + n) * (m + n) + 1000;

    auto build_adjacency = [&] {
        for (auto& e : adj) e.clear();
        for (std::size_t c : cells) {
            const std::size_t i = c / n, j = c % n;
            adj[i].push_back({m + j, c});
            adj[m + j].push_back({i, c});
        }
    };

    for (;; ++plan.iterations) {
        if (plan.iterations > max_iter)
            throw Error(ErrorCode::SolverFailure, "transport simplex iteration limit");
        build_adjacency();

        // Potentials over the spanning tree: u_i + v_j = c_ij on basic cells.
        std::fill(seen.begin(), seen.end(), 0);
        std::deque<std::size_t> queue;
        for (std::size_t root = 0; root < m + n; ++root) {
            if (seen[root]) continue;
            seen[root] = 1;
            if (root < m) u[root] = 0.0;
            else v[root - m] = 0.0;
            queue.push_back(root);
            while (!queue.empty()) {
                const std::size_t x = queue.front();
                queue.pop_front();
                for (const auto& e : adj[x]) {
                    if (seen[e.node]) continue;
                    seen[e.node] = 1;
                    const std::size_t i = e.cell / n, j = e.cell % n;
                    if (e.node >= m) v[j] = cost[e.cell] - u[i];
                    else u[i] = cost[e.cell] - v[j];
                    queue.push_back(e.node);
                }
            }
        }

        std::size_t enter = m * n;
        double best = -eps;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t c = i * n + j;
                if (basic[c]) continue;
                const double rc = cost[c] - u[i] - v[j];
                if (rc < best) {
                    best = rc;
                    enter = c;
                }
            }
        if (enter == m * n) break;

        // Tree path from row node i to column node j closes the cycle.
        const std::size_t ei = enter / n, ej = enter % n;
        std::fill(seen.begin(), seen.end(), 0);
        queue.clear();
        queue.push_back(ei);
        seen[ei] = 1;
        while (!queue.empty()) {
            const std::size_t x = queue.front();
            queue.pop_front();
            if (x == m + ej) break;
            for (const auto& e : adj[x]) {
                if (seen[e.node]) continue;
                seen[e.node] = 1;
                parent_node[e.node] = x;
                parent_cell[e.node] = e.cell;
                queue.push_back(e.node);
            }
        }
        if (!seen[m + ej]) throw Error(ErrorCode::SolverFailure, "transport basis is not a tree");

        std::vector<std::size_t> path; // cells from column node back to row node
        for (std::size_t x = m + ej; x != ei; x = parent_node[x]) path.push_back(parent_cell[x]);

        // path[0] touches column ej and loses flow; signs alternate from there.
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave_pos = path.size();
        for (std::size_t k = 0; k < path.size(); k += 2)
            if (plan.flow[path[k]] < theta) {
                theta = plan.flow[path[k]];
                leave_pos = k;
            }
        for (std::size_t k = 0; k < path.size(); ++k)
            plan.flow[path[k]] += (k % 2 == 0) ? -theta : theta;
        plan.flow[enter] += theta;

        const std::size_t leave = path[leave_pos];
        plan.flow[leave] = 0.0;
        basic[leave] = 0;
        basic[enter] = 1;
        *std::find(cells.begin(), cells.end(), leave) = enter;
    }

    plan.cost = 0.0;
    for (std::size_t c = 0; c < m * n; ++c) {
        plan.flow[c] = std::max(plan.flow[c], 0.0);
        plan.cost += plan.flow[c] * cost[c];
    }
    return plan;
}

double w1_distance(std::span<const double> p, std::span<const double> q, const CostMatrix& cost) {
    if (p.size() != q.size() || p.size() != cost.size())
        throw Error(ErrorCode::DimensionMismatch, "w1_distance size mismatch");
    return solve_transport(p, q, cost.values()).cost;
}

double span(std::span<const double> v) {
    if (v.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

std::vector<double> kernel_row_tv(const TransitionKernel& p, const TransitionKernel& q) {
    if (!p.same_shape(q)) throw Error(ErrorCode::ShapeMismatch, "kernels differ in shape");
    std::vector<double> out;
    out.reserve(p.num_states() * p.num_actions());
    for (std::size_t s = 0; s < p.num_states(); ++s)
        for (std::size_t a = 0; a < p.num_actions(); ++a)
            out.push_back(tv_distance(p.row(s, a), q.row(s, a)));
    return out;
}

double kernel_max_tv(const TransitionKernel& p, const TransitionKernel& q) {
    const auto rows = kernel_row_tv(p, q);
    return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

double kernel_mean_tv(const TransitionKernel& p, const TransitionKernel& q) {
    const auto rows = kernel_row_tv(p, q);
    return rows.empty() ? 0.0 : std::accumulate(rows.begin(), rows.end(), 0.0) / rows.size();
}

} // namespace ribe
