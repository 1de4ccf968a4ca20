#include "ribe/envs.hpp"

#include "ribe/error.hpp"
#include "ribe/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <span>
#include <string>

namespace ribe {

namespace {

constexpr std::uint64_t kControlTag = 0xC0417201;
constexpr std::uint64_t kLdsSharedTag = 0x1d5a;
constexpr std::uint64_t kLdsSourceTag = 0x1d5b;
constexpr std::uint64_t kLdsTargetTag = 0x1d5c;

void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0))
        throw Error(ErrorCode::InvalidConstants, std::string(what) + " must lie in [0,1]");
}

void check_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw Error(ErrorCode::InvalidConstants, "gamma must lie in (0,1)");
}

void normalize(std::span<double> row) {
    const double mass = std::accumulate(row.begin(), row.end(), 0.0);
    for (auto& x : row) x /= mass;
}

/// Three-tier toy-text row: intended / opposite / everything else.
void toy_row(std::span<double> row, std::size_t intended, std::size_t opposite, double w_intended,
             double w_opposite, double r) {
    const double states = static_cast<double>(row.size());
    const double base = r + 2.0 * (1.0 - r) / states;
    const double other = (1.0 - r) / states;
    for (std::size_t j = 0; j < row.size(); ++j)
        if (j != intended && j != opposite) row[j] = other;
    row[intended] = 0.0;
    row[opposite] = 0.0;
    row[intended] += w_intended * base;
    row[opposite] += w_opposite * base;
    normalize(row);
}

struct Move {
    int dr;
    int dc;
};

struct GridModel {
    std::size_t states = 0;
    std::size_t actions = 0;
    // For each (s,a): intended and opposite successors, reward, terminal flag on s.
    std::vector<std::size_t> intended, opposite;
    std::vector<double> rewards;
    std::vector<bool> terminal;
    std::vector<std::vector<double>> features;
};

EnvPair assemble_toy(const ToyTextSpec& spec, const GridModel& g, std::string name) {
    const std::size_t S = g.states, A = g.actions;
    std::vector<double> ps(S * A * S, 0.0), pt(S * A * S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t pair = s * A + a;
            std::span<double> rs(ps.data() + pair * S, S), rt(pt.data() + pair * S, S);
            if (g.terminal[s]) {
                rs[s] = 1.0;
                rt[s] = 1.0;
                continue;
            }
            const std::size_t i = g.intended[pair], o = g.opposite[pair];
            toy_row(rs, i, o, 1.0 - spec.alpha, spec.alpha, spec.r_source);
            toy_row(rt, i, o, spec.alpha, 1.0 - spec.alpha, spec.r_target);
        }
    EnvPair pair;
    pair.name = std::move(name);
    pair.source = TabularMDP(TransitionKernel(S, A, std::move(ps)), g.rewards, spec.gamma);
    pair.target = TabularMDP(TransitionKernel(S, A, std::move(pt)), g.rewards, spec.gamma);
    pair.constants = {{"r_s", spec.r_source}, {"r_t", spec.r_target}, {"alpha", spec.alpha},
                      {"gamma", spec.gamma}};
    pair.features = g.features;
    return pair;
}

// Gym action orders: Frozen Lake left/down/right/up, Cliff Walking up/right/down/left.
constexpr std::array<Move, 4> kLakeMoves{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
constexpr std::array<std::size_t, 4> kLakeOpposite{2, 3, 0, 1};
constexpr std::array<Move, 4> kCliffMoves{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
constexpr std::array<std::size_t, 4> kCliffOpposite{2, 3, 0, 1};

GridModel frozen_lake() {
    const auto& map = frozen_lake_map();
    const int rows = static_cast<int>(map.size()), cols = static_cast<int>(map[0].size());
    GridModel g;
    g.states = static_cast<std::size_t>(rows * cols);
    g.actions = 4;
    auto cell_reward = [&](std::size_t s) {
        switch (map[s / cols][s % cols]) {
        case 'H': return -1.0;
        case 'P': return 5.0;
        case 'G': return 0.0;
        default: return -0.04;
        }
    };
    auto step = [&](std::size_t s, std::size_t a) {
        const int r = static_cast<int>(s) / cols + kLakeMoves[a].dr;
        const int c = static_cast<int>(s) % cols + kLakeMoves[a].dc;
        if (r < 0 || r >= rows || c < 0 || c >= cols) return s;
        return static_cast<std::size_t>(r * cols + c);
    };
    for (std::size_t s = 0; s < g.states; ++s) {
        const char cell = map[s / cols][s % cols];
        const bool terminal = cell == 'H' || cell == 'G';
        g.terminal.push_back(terminal);
        g.features.push_back({static_cast<double>(s / cols), static_cast<double>(s % cols)});
        for (std::size_t a = 0; a < g.actions; ++a) {
            g.intended.push_back(step(s, a));
            g.opposite.push_back(step(s, kLakeOpposite[a]));
            // Holes keep charging their penalty once entered; the goal pays nothing further.
            g.rewards.push_back(terminal ? cell_reward(s) : cell_reward(step(s, a)));
        }
    }
    return g;
}

GridModel cliff_walking() {
    constexpr int rows = 4, cols = 12;
    GridModel g;
    g.actions = 4;
    std::vector<int> index(rows * cols, -1);
    auto is_cliff = [](int r, int c) { return r == rows - 1 && c > 0 && c < cols - 1; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (!is_cliff(r, c)) {
                index[r * cols + c] = static_cast<int>(g.states++);
                g.features.push_back({static_cast<double>(r), static_cast<double>(c)});
            }
    const auto start = static_cast<std::size_t>(index[(rows - 1) * cols]);
    const auto goal = static_cast<std::size_t>(index[(rows - 1) * cols + cols - 1]);
    std::vector<std::pair<int, int>> coords;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (!is_cliff(r, c)) coords.emplace_back(r, c);
    // Returns (successor, reward).
    auto step = [&](std::size_t s, std::size_t a) -> std::pair<std::size_t, double> {
        int r = coords[s].first + kCliffMoves[a].dr, c = coords[s].second + kCliffMoves[a].dc;
        if (r < 0 || r >= rows || c < 0 || c >= cols) return {s, -1.0};
        if (is_cliff(r, c)) return {start, -100.0};
        const auto next = static_cast<std::size_t>(index[r * cols + c]);
        return {next, next == goal ? 50.0 : -1.0};
    };
    for (std::size_t s = 0; s < g.states; ++s) {
        g.terminal.push_back(s == goal);
        for (std::size_t a = 0; a < g.actions; ++a) {
            const auto [next, reward] = step(s, a);
            g.intended.push_back(next);
            g.opposite.push_back(step(s, kCliffOpposite[a]).first);
            g.rewards.push_back(s == goal ? 0.0 : reward);
        }
    }
    return g;
}

GridModel taxi() {
    constexpr int side = 6;
    constexpr int pickup_cell = 0;                     // top-left
    constexpr int dropoff_cell = side * side - 1;      // bottom-right
    constexpr std::array<Move, 4> moves{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}}; // south north east west
    constexpr std::array<std::size_t, 4> reverse{1, 0, 3, 2};
    enum Passenger : std::size_t { AtPickup = 0, InTaxi = 1, AtDropoff = 2 };
    GridModel g;
    g.states = side * side * 3;
    g.actions = 6;
    auto encode = [](int cell, std::size_t passenger) {
        return static_cast<std::size_t>(cell) * 3 + passenger;
    };
    auto move = [&](int cell, std::size_t a) {
        const int r = cell / side + moves[a].dr, c = cell % side + moves[a].dc;
        if (r < 0 || r >= side || c < 0 || c >= side) return cell;
        return r * side + c;
    };
    for (std::size_t s = 0; s < g.states; ++s) {
        const int cell = static_cast<int>(s / 3);
        const std::size_t passenger = s % 3;
        g.terminal.push_back(passenger == AtDropoff);
        g.features.push_back({static_cast<double>(cell / side), static_cast<double>(cell % side),
                              static_cast<double>(passenger)});
        for (std::size_t a = 0; a < g.actions; ++a) {
            std::size_t next = s, opposite = s;
            double reward = 0.0;
            if (a < 4) {
                next = encode(move(cell, a), passenger);
                opposite = encode(move(cell, reverse[a]), passenger);
                reward = -1.0;
            } else if (a == 4) {
                if (passenger == AtPickup && cell == pickup_cell) {
                    next = opposite = encode(cell, InTaxi);
                    reward = 20.0;
                } else {
                    reward = -10.0;
                }
            } else {
                if (passenger == InTaxi && cell == dropoff_cell) {
                    next = opposite = encode(cell, AtDropoff);
                    reward = 50.0;
                } else {
                    reward = -10.0;
                }
            }
            g.intended.push_back(next);
            g.opposite.push_back(opposite);
            g.rewards.push_back(passenger == AtDropoff ? 0.0 : reward);
        }
    }
    return g;
}

double bin_center(std::size_t k, std::size_t bins, double lo, double hi) {
    return lo + (static_cast<double>(k) + 0.5) * (hi - lo) / static_cast<double>(bins);
}

struct Discretization {
    std::vector<std::size_t> bins;
    std::vector<std::pair<double, double>> ranges;

    std::size_t states() const {
        return std::accumulate(bins.begin(), bins.end(), std::size_t{1}, std::multiplies<>());
    }
    /// Bin centers of state s, first dimension most significant.
    std::vector<double> centers(std::size_t s) const {
        std::vector<double> out(bins.size());
        for (std::size_t d = bins.size(); d-- > 0;) {
            out[d] = bin_center(s % bins[d], bins[d], ranges[d].first, ranges[d].second);
            s /= bins[d];
        }
        return out;
    }
    /// Centers scaled to [-1, 1] per dimension.
    std::vector<double> normalized(std::size_t s) const {
        auto c = centers(s);
        for (std::size_t d = 0; d < c.size(); ++d) {
            const double mid = 0.5 * (ranges[d].first + ranges[d].second);
            const double half = 0.5 * (ranges[d].second - ranges[d].first);
            c[d] = (c[d] - mid) / half;
        }
        return c;
    }
};

constexpr double kDegree = std::numbers::pi / 180.0;

Discretization cartpole_grid() {
    return {{4, 4, 5, 3}, {{-4.8, 4.8}, {-0.5, 0.5}, {-24.0 * kDegree, 24.0 * kDegree}, {-5.0, 5.0}}};
}

double cartpole_reward(const std::vector<double>& c) {
    const double x = c[0], v = c[1], angle = c[2];
    const bool slow = std::abs(v) <= 0.17;
    if (std::abs(angle) < 1e-12 && slow) return 25.0 + (std::abs(x) <= 1.6 ? 25.0 : 0.0);
    if (std::abs(angle) < 12.0 * kDegree && slow) return 10.0;
    return 0.0;
}

Discretization acrobot_grid() {
    using std::numbers::pi;
    return {{6, 6, 2, 2}, {{-1.0, 1.0}, {-1.0, 1.0}, {-4.0 * pi, 4.0 * pi}, {-9.0 * pi, 9.0 * pi}}};
}

double acrobot_reward(const std::vector<double>& c) {
    const double c1 = c[0], c2 = c[1];
    const double s1 = std::sqrt(std::max(0.0, 1.0 - c1 * c1));
    const double s2 = std::sqrt(std::max(0.0, 1.0 - c2 * c2));
    const double height = -c1 - (c1 * c2 - s1 * s2);
    if (height >= 1.0) return 20.0;
    if (height >= 0.5) return 15.0;
    if (height >= 0.25) return 10.0;
    if (height >= 0.0) return 5.0;
    return 0.0;
}

Discretization pendulum_grid() {
    using std::numbers::pi;
    return {{12, 20}, {{-pi, pi}, {-10.0, 10.0}}};
}

double pendulum_reward(const std::vector<double>& c) {
    const double angle = c[0], omega = c[1];
    if (std::abs(angle) <= 1.0 && std::abs(omega) <= 1.0) return 100.0;
    if (std::abs(angle) <= 0.5) return 50.0;
    return 10.0;
}

} // namespace

const std::vector<std::string>& frozen_lake_map() {
    static const std::vector<std::string> map{"SFFF", "FHFF", "FFPH", "FFFG"};
    return map;
}

ToyTextSpec ToyTextSpec::defaults(ToyTextEnv env) {
    switch (env) {
    case ToyTextEnv::FrozenLake: return {env, 0.3, 0.8, 0.7};
    case ToyTextEnv::CliffWalking: return {env, 0.8, 0.2, 0.3};
    case ToyTextEnv::Taxi: return {env, 0.4, 0.8, 0.2};
    }
    return {};
}

ControlSpec ControlSpec::defaults(ControlEnv env, std::uint64_t seed) {
    ControlSpec spec;
    spec.env = env;
    spec.seed = seed;
    return spec;
}

EnvPair build_toy_text(const ToyTextSpec& spec) {
    check_unit(spec.r_source, "r_s");
    check_unit(spec.r_target, "r_t");
    check_unit(spec.alpha, "alpha");
    check_gamma(spec.gamma);
    switch (spec.env) {
    case ToyTextEnv::FrozenLake: return assemble_toy(spec, frozen_lake(), "frozen_lake");
    case ToyTextEnv::CliffWalking: return assemble_toy(spec, cliff_walking(), "cliff_walking");
    case ToyTextEnv::Taxi: return assemble_toy(spec, taxi(), "taxi");
    }
    throw Error(ErrorCode::InvalidConstants, "unknown toy-text environment");
}

EnvPair build_control(const ControlSpec& spec) {
    check_unit(spec.r_source, "r_s");
    check_unit(spec.r_target, "r_t");
    check_unit(spec.alpha, "alpha");
    check_gamma(spec.gamma);
    Discretization grid;
    std::size_t actions = 0;
    double (*reward)(const std::vector<double>&) = nullptr;
    std::string name;
    switch (spec.env) {
    case ControlEnv::CartPole:
        grid = cartpole_grid(), actions = 2, reward = cartpole_reward, name = "cartpole";
        break;
    case ControlEnv::Acrobot:
        grid = acrobot_grid(), actions = 3, reward = acrobot_reward, name = "acrobot";
        break;
    case ControlEnv::Pendulum:
        grid = pendulum_grid(), actions = 5, reward = pendulum_reward, name = "pendulum";
        break;
    }
    const std::size_t S = grid.states();
    if (S < 2) throw Error(ErrorCode::InvalidConstants, "discretization needs at least two states");
    std::vector<double> ps(S * actions * S), pt(S * actions * S), rewards(S * actions);
    EnvPair pair;
    for (std::size_t s = 0; s < S; ++s) {
        const auto centers = grid.centers(s);
        pair.features.push_back(grid.normalized(s));
        for (std::size_t a = 0; a < actions; ++a) {
            const std::size_t idx = s * actions + a;
            rewards[idx] = reward(centers);
            CounterRng rng(stream_key(spec.seed, s, a, kControlTag));
            const std::size_t r1 = rng.below(S), r2 = rng.below(S);
            std::span<double> rs(ps.data() + idx * S, S), rt(pt.data() + idx * S, S);
            for (std::size_t j = 0; j < S; ++j) {
                rs[j] = spec.r_source / static_cast<double>(S);
                rt[j] = spec.r_target / static_cast<double>(S);
            }
            // The two draws own their mass outright; a repeated draw accumulates.
            rs[r1] = rt[r1] = 0.0;
            rs[r2] = rt[r2] = 0.0;
            rs[r1] += spec.alpha * spec.r_source;
            rs[r2] += (1.0 - spec.alpha) * spec.r_source;
            rt[r1] += (1.0 - spec.alpha) * spec.r_target;
            rt[r2] += spec.alpha * spec.r_target;
            normalize(rs);
            normalize(rt);
        }
    }
    pair.name = name;
    pair.seed = spec.seed;
    pair.source = TabularMDP(TransitionKernel(S, actions, std::move(ps)), rewards, spec.gamma);
    pair.target = TabularMDP(TransitionKernel(S, actions, std::move(pt)), rewards, spec.gamma);
    pair.constants = {{"r_s", spec.r_source}, {"r_t", spec.r_target}, {"alpha", spec.alpha},
                      {"gamma", spec.gamma}};
    return pair;
}

LdsBundle build_lds_cartpole(const LdsCartPoleSpec& spec) {
    check_gamma(spec.gamma);
    const auto grid = cartpole_grid();
    if (spec.dim != grid.bins.size() || spec.private_dim > spec.dim)
        throw Error(ErrorCode::InvalidConstants, "LDS feature dimension must be 4 with d0 <= 4");
    const std::size_t S = grid.states(), A = 2, d = spec.dim;
    const std::size_t shared = d - spec.private_dim;

    LdsBundle out;
    out.dim = d;
    out.psi.resize(d * S);
    std::vector<double> rewards(S * A);
    for (std::size_t j = 0; j < S; ++j) {
        const auto f = grid.normalized(j);
        out.pair.features.push_back(f);
        for (std::size_t k = 0; k < d; ++k) out.psi[k * S + j] = f[k];
        for (std::size_t a = 0; a < A; ++a) rewards[j * A + a] = cartpole_reward(grid.centers(j));
    }
    for (std::size_t k = 0; k < shared; ++k) out.shared.push_back(k);

    out.theta_source.resize(S * A * d);
    out.theta_target.resize(S * A * d);
    std::vector<double> ps(S * A * S), pt(S * A * S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t pair = s * A + a;
            CounterRng common(stream_key(spec.seed, s, a, kLdsSharedTag));
            CounterRng src(stream_key(spec.seed, s, a, kLdsSourceTag));
            CounterRng tgt(stream_key(spec.seed, s, a,
                                      spec.tie_private_blocks ? kLdsSourceTag : kLdsTargetTag));
            double* ts = out.theta_source.data() + pair * d;
            double* tt = out.theta_target.data() + pair * d;
            for (std::size_t k = 0; k < shared; ++k) ts[k] = tt[k] = spec.scale * common.normal();
            for (std::size_t k = shared; k < d; ++k) {
                ts[k] = spec.scale * src.normal();
                tt[k] = spec.scale * tgt.normal();
            }
            for (std::size_t h = 0; h < 2; ++h) {
                const double* theta = h == 0 ? ts : tt;
                double* row = (h == 0 ? ps : pt).data() + pair * S;
                double top = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < S; ++j) {
                    double z = 0.0;
                    for (std::size_t k = 0; k < d; ++k) z += theta[k] * out.psi[k * S + j];
                    row[j] = z;
                    top = std::max(top, z);
                }
                double mass = 0.0;
                for (std::size_t j = 0; j < S; ++j) mass += row[j] = std::exp(row[j] - top);
                for (std::size_t j = 0; j < S; ++j) row[j] /= mass;
            }
        }
    out.pair.name = "lds_cartpole";
    out.pair.seed = spec.seed;
    out.pair.source = TabularMDP(TransitionKernel(S, A, std::move(ps)), rewards, spec.gamma);
    out.pair.target = TabularMDP(TransitionKernel(S, A, std::move(pt)), rewards, spec.gamma);
    out.pair.constants = {{"dim", static_cast<double>(d)},
                          {"private_dim", static_cast<double>(spec.private_dim)},
                          {"scale", spec.scale},
                          {"gamma", spec.gamma}};
    return out;
}

const std::vector<std::string>& env_names() {
    static const std::vector<std::string> names{"frozen_lake", "cliff_walking", "taxi", "cartpole",
                                                "acrobot",     "pendulum",      "lds_cartpole"};
    return names;
}

EnvPair build_env(const std::string& name, std::uint64_t seed) {
    EnvPair pair;
    if (name == "frozen_lake")
        pair = build_toy_text(ToyTextSpec::defaults(ToyTextEnv::FrozenLake));
    else if (name == "cliff_walking")
        pair = build_toy_text(ToyTextSpec::defaults(ToyTextEnv::CliffWalking));
    else if (name == "taxi")
        pair = build_toy_text(ToyTextSpec::defaults(ToyTextEnv::Taxi));
    else if (name == "cartpole")
        pair = build_control(ControlSpec::defaults(ControlEnv::CartPole, seed));
    else if (name == "acrobot")
        pair = build_control(ControlSpec::defaults(ControlEnv::Acrobot, seed));
    else if (name == "pendulum")
        pair = build_control(ControlSpec::defaults(ControlEnv::Pendulum, seed));
    else if (name == "lds_cartpole") {
        LdsCartPoleSpec spec;
        spec.seed = seed;
        pair = build_lds_cartpole(spec).pair;
    } else
        throw Error(ErrorCode::InvalidArgument, "unknown environment '" + name + "'");
    pair.seed = seed;
    return pair;
}

} // namespace ribe
