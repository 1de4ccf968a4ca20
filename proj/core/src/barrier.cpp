#include "barrier.hpp"

#include "ribe/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ribe::detail {

namespace {

constexpr double kGapTarget = 1e-10;
constexpr double kGrowth = 10.0;
constexpr double kCentered = 1e-11;
constexpr std::size_t kMaxCentering = 200;

// Damped Newton centering on each barrier subproblem, then grow t. The problem
// supplies direction(t, d) -> squared Newton decrement, fits(d, s) and
// advance(d, s).
template <class Problem>
bool follow_path(Problem& problem, double t, double barrier_terms, std::size_t& steps) {
    std::vector<double> d;
    bool ok = true;
    for (;;) {
        std::size_t inner = 0;
        for (; inner < kMaxCentering; ++inner) {
            const double dec2 = problem.direction(t, d);
            if (!std::isfinite(dec2)) return false;
            if (dec2 / 2.0 <= kCentered) break;
            const double lambda = std::sqrt(dec2);
            double s = lambda >= 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
            while (s > 1e-16 && !problem.fits(d, s)) s *= 0.5;
            if (s <= 1e-16) break;
            problem.advance(d, s);
            ++steps;
        }
        ok = ok && inner < kMaxCentering;
        if (barrier_terms / t <= kGapTarget) return ok;
        t *= kGrowth;
    }
}

double min_positive(std::span<const double> w) {
    double m = 1.0;
    for (double x : w)
        if (x > 0.0) m = std::min(m, x);
    return m;
}

class W1Problem {
public:
    W1Problem(std::span<const double> w, std::span<const double> p, const CostMatrix& cost,
              double radius)
        : w_(w.begin(), w.end()), S_(p.size()), radius_(radius) {
        for (std::size_t i = 0; i < S_; ++i)
            if (p[i] > 0.0) {
                rows_.push_back(i);
                mass_.push_back(p[i]);
            }
        c_.resize(rows_.size() * S_);
        double mean_cost = 0.0;
        for (std::size_t r = 0; r < rows_.size(); ++r)
            for (std::size_t k = 0; k < S_; ++k) {
                c_[r * S_ + k] = cost(rows_[r], k);
                mean_cost += p[rows_[r]] * c_[r * S_ + k];
            }
        mean_cost /= static_cast<double>(S_);
        // Mostly stay put, spread a little mass everywhere within half the budget.
        const double eps = mean_cost > 0.0 ? std::min(0.5, radius / (2.0 * mean_cost)) : 0.5;
        pi_.resize(rows_.size() * S_);
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const double mass = p[rows_[r]];
            for (std::size_t k = 0; k < S_; ++k)
                pi_[r * S_ + k] = mass * (eps / static_cast<double>(S_) +
                                          (k == rows_[r] ? 1.0 - eps : 0.0));
        }
    }

    double barrier_terms() const { return static_cast<double>(pi_.size() + 1); }

    double direction(double t, std::vector<double>& d) {
        const std::size_t R = rows_.size(), n = S_ + 1 + R;
        std::vector<double> q(S_, 0.0);
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t k = 0; k < S_; ++k) q[k] += pi_[r * S_ + k];
        const double sigma = slack();
        std::vector<double> a(S_);
        for (std::size_t k = 0; k < S_; ++k) a[k] = std::sqrt(t * w_[k]) / q[k];

        g_.resize(pi_.size());
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        const auto last = static_cast<Eigen::Index>(S_);
        for (std::size_t r = 0; r < R; ++r) {
            const auto row = static_cast<Eigen::Index>(S_ + 1 + r);
            for (std::size_t k = 0; k < S_; ++k) {
                const std::size_t j = r * S_ + k;
                const auto col = static_cast<Eigen::Index>(k);
                const double x2 = pi_[j] * pi_[j], cs = c_[j] / sigma;
                const double g = t * w_[k] / q[k] + 1.0 / pi_[j] - cs;
                g_[j] = g;
                K(col, col) += a[k] * a[k] * x2;
                K(col, last) += a[k] * x2 * cs;
                K(last, last) += x2 * cs * cs;
                K(col, row) = a[k] * x2;
                K(last, row) += x2 * cs;
                K(row, row) += x2;
                rhs(col) += a[k] * x2 * g;
                rhs(last) += x2 * cs * g;
                rhs(row) += x2 * g;
            }
        }
        // Newton from a slightly infeasible point pulls row sums back onto p.
        for (std::size_t r = 0; r < R; ++r) {
            double sum = 0.0;
            for (std::size_t k = 0; k < S_; ++k) sum += pi_[r * S_ + k];
            rhs(static_cast<Eigen::Index>(S_ + 1 + r)) -= mass_[r] - sum;
        }
        for (Eigen::Index i = 0; i <= last; ++i) K(i, i) += 1.0;
        Eigen::VectorXd z = K.selfadjointView<Eigen::Upper>().ldlt().solve(rhs);

        d.resize(pi_.size());
        double dec2 = 0.0;
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t k = 0; k < S_; ++k) {
                const std::size_t j = r * S_ + k;
                d[j] = pi_[j] * pi_[j] *
                       (g_[j] - a[k] * z(static_cast<Eigen::Index>(k)) -
                        c_[j] / sigma * z(last) - z(static_cast<Eigen::Index>(S_ + 1 + r)));
                dec2 += g_[j] * d[j];
            }
        return dec2;
    }

    bool fits(const std::vector<double>& d, double s) const {
        double spent = 0.0;
        for (std::size_t j = 0; j < pi_.size(); ++j) {
            const double x = pi_[j] + s * d[j];
            if (!(x > 0.0)) return false;
            spent += c_[j] * x;
        }
        return spent < radius_;
    }

    void advance(const std::vector<double>& d, double s) {
        for (std::size_t j = 0; j < pi_.size(); ++j) pi_[j] += s * d[j];
    }

    // Snap rows back onto p, then blend toward the identity coupling if the
    // snap pushed the cost past the radius.
    std::vector<double> marginal() const {
        std::vector<double> plan = pi_;
        double spent = 0.0;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            double sum = 0.0;
            for (std::size_t k = 0; k < S_; ++k) sum += plan[r * S_ + k];
            for (std::size_t k = 0; k < S_; ++k) {
                plan[r * S_ + k] *= mass_[r] / sum;
                spent += c_[r * S_ + k] * plan[r * S_ + k];
            }
        }
        const double keep = spent > radius_ ? radius_ / spent : 1.0;
        std::vector<double> q(S_, 0.0);
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            for (std::size_t k = 0; k < S_; ++k) q[k] += keep * plan[r * S_ + k];
            q[rows_[r]] += (1.0 - keep) * mass_[r];
        }
        return q;
    }

private:
    double slack() const {
        double spent = 0.0;
        for (std::size_t j = 0; j < pi_.size(); ++j) spent += c_[j] * pi_[j];
        return radius_ - spent;
    }

    std::vector<double> w_;
    std::size_t S_;
    double radius_;
    std::vector<std::size_t> rows_;
    std::vector<double> mass_, c_, pi_, g_;
};

class MomentProblem {
public:
    MomentProblem(std::span<const double> w, Eigen::MatrixXd G, Eigen::VectorXd h,
                  Eigen::MatrixXd E, Eigen::VectorXd e, std::vector<double> start)
        : w_(w.begin(), w.end()), G_(std::move(G)), h_(std::move(h)), E_(std::move(E)),
          e_(std::move(e)), q_(std::move(start)) {}

    double barrier_terms() const { return static_cast<double>(q_.size() + G_.rows()); }

    double direction(double t, std::vector<double>& d) {
        const auto S = static_cast<Eigen::Index>(q_.size());
        const Eigen::Index r = G_.rows(), m = E_.rows();
        const Eigen::Map<const Eigen::VectorXd> q(q_.data(), S);
        const Eigen::VectorXd s = h_ - G_ * q;
        Eigen::VectorXd g(S), dinv(S);
        for (Eigen::Index j = 0; j < S; ++j) {
            const double c = t * w_[static_cast<std::size_t>(j)] + 1.0;
            g(j) = c / q(j);
            dinv(j) = q(j) * q(j) / c;
        }
        const Eigen::MatrixXd U = G_.transpose() * s.cwiseInverse().asDiagonal();
        g -= U * Eigen::VectorXd::Ones(r);

        const Eigen::MatrixXd DU = dinv.asDiagonal() * U;
        const Eigen::MatrixXd DE = dinv.asDiagonal() * E_.transpose();
        Eigen::MatrixXd K(r + m, r + m);
        K.topLeftCorner(r, r) = Eigen::MatrixXd::Identity(r, r) + U.transpose() * DU;
        K.topRightCorner(r, m) = U.transpose() * DE;
        K.bottomLeftCorner(m, r) = K.topRightCorner(r, m).transpose();
        K.bottomRightCorner(m, m) = E_ * DE;
        Eigen::VectorXd rhs(r + m);
        rhs.head(r) = DU.transpose() * g;
        rhs.tail(m) = DE.transpose() * g - (e_ - E_ * q);
        const Eigen::VectorXd z = K.ldlt().solve(rhs);
        const Eigen::VectorXd step =
            dinv.cwiseProduct(g - U * z.head(r) - E_.transpose() * z.tail(m));
        d.assign(step.data(), step.data() + S);
        return g.dot(step);
    }

    bool fits(const std::vector<double>& d, double s) const {
        Eigen::VectorXd x(static_cast<Eigen::Index>(q_.size()));
        for (std::size_t j = 0; j < q_.size(); ++j) {
            x(static_cast<Eigen::Index>(j)) = q_[j] + s * d[j];
            if (!(x(static_cast<Eigen::Index>(j)) > 0.0)) return false;
        }
        return ((h_ - G_ * x).array() > 0.0).all();
    }

    void advance(const std::vector<double>& d, double s) {
        for (std::size_t j = 0; j < q_.size(); ++j) q_[j] += s * d[j];
    }

    std::vector<double> marginal() const {
        std::vector<double> q = q_;
        for (auto& x : q) x = std::max(x, 0.0);
        const double mass = std::accumulate(q.begin(), q.end(), 0.0);
        for (auto& x : q) x /= mass;
        return q;
    }

private:
    std::vector<double> w_;
    Eigen::MatrixXd G_;
    Eigen::VectorXd h_;
    Eigen::MatrixXd E_;
    Eigen::VectorXd e_;
    std::vector<double> q_;
};

} // namespace

BarrierResult w1_ball_mle(std::span<const double> w, std::span<const double> p,
                          const CostMatrix& cost, double radius) {
    W1Problem problem(w, p, cost, radius);
    BarrierResult out;
    const double t0 = std::max(1.0, 1.0 / min_positive(w));
    out.converged = follow_path(problem, t0, problem.barrier_terms(), out.newton_steps);
    out.q = problem.marginal();
    return out;
}

std::optional<BarrierResult> moment_box_mle(std::span<const double> w,
                                            std::span<const double> features,
                                            std::span<const double> mu,
                                            std::span<const double> beta) {
    const std::size_t S = w.size(), dim = mu.size();
    std::size_t boxes = 0;
    for (double b : beta) boxes += b > 0.0;

    // Deepest point: max tau with q >= tau and tau of room on every box side.
    lp::LinearProgram program(S + 1);
    program.objective[S] = -1.0;
    std::vector<double> row(S + 1, 1.0);
    row[S] = 0.0;
    program.add(row, lp::Sense::Equal, 1.0);
    Eigen::MatrixXd G(static_cast<Eigen::Index>(2 * boxes), static_cast<Eigen::Index>(S));
    Eigen::VectorXd h(static_cast<Eigen::Index>(2 * boxes));
    Eigen::MatrixXd E(static_cast<Eigen::Index>(1 + dim - boxes), static_cast<Eigen::Index>(S));
    Eigen::VectorXd e(E.rows());
    E.row(0).setOnes();
    e(0) = 1.0;
    Eigen::Index gi = 0, ei = 1;
    for (std::size_t k = 0; k < dim; ++k) {
        const auto phi = features.subspan(k * S, S);
        std::copy(phi.begin(), phi.end(), row.begin());
        if (beta[k] > 0.0) {
            row[S] = 1.0;
            program.add(row, lp::Sense::LessEqual, mu[k] + beta[k]);
            for (std::size_t j = 0; j < S; ++j) {
                G(gi, static_cast<Eigen::Index>(j)) = phi[j];
                G(gi + 1, static_cast<Eigen::Index>(j)) = -phi[j];
            }
            h(gi) = mu[k] + beta[k];
            h(gi + 1) = beta[k] - mu[k];
            gi += 2;
            std::vector<double> neg(S + 1);
            for (std::size_t j = 0; j < S; ++j) neg[j] = -phi[j];
            neg[S] = 1.0;
            program.add(std::move(neg), lp::Sense::LessEqual, beta[k] - mu[k]);
        } else {
            row[S] = 0.0;
            program.add(row, lp::Sense::Equal, mu[k]);
            for (std::size_t j = 0; j < S; ++j) E(ei, static_cast<Eigen::Index>(j)) = phi[j];
            e(ei++) = mu[k];
        }
    }
    for (std::size_t j = 0; j < S; ++j) {
        std::vector<double> floor(S + 1, 0.0);
        floor[j] = 1.0;
        floor[S] = -1.0;
        program.add(std::move(floor), lp::Sense::GreaterEqual, 0.0);
    }
    std::vector<double> cap(S + 1, 0.0);
    cap[S] = 1.0;
    program.add(std::move(cap), lp::Sense::LessEqual, 1.0 / static_cast<double>(S));

    const auto deepest = lp::solve(program);
    if (deepest.status != lp::Status::Optimal || deepest.x[S] < 1e-9) return std::nullopt;

    MomentProblem problem(w, std::move(G), std::move(h), std::move(E), std::move(e),
                          std::vector<double>(deepest.x.begin(), deepest.x.begin() +
                                                                     static_cast<std::ptrdiff_t>(S)));
    BarrierResult out;
    out.converged = follow_path(problem, 1.0, problem.barrier_terms(), out.newton_steps);
    out.q = problem.marginal();
    return out;
}

} // namespace ribe::detail
