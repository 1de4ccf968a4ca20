#pragma once

#include "ribe/distances.hpp"
#include "ribe/types.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ribe {

/// Discount used by every generated environment.
inline constexpr double kDefaultGamma = 0.95;

enum class ToyTextEnv { FrozenLake, CliffWalking, Taxi };
enum class ControlEnv { CartPole, Acrobot, Pendulum };

struct ToyTextSpec {
    ToyTextEnv env = ToyTextEnv::FrozenLake;
    double r_source = 0.3;
    double r_target = 0.8;
    double alpha = 0.7;
    double gamma = kDefaultGamma;

    /// Table constants for each toy-text task.
    static ToyTextSpec defaults(ToyTextEnv env);
};

struct ControlSpec {
    ControlEnv env = ControlEnv::CartPole;
    double r_source = 0.6;
    double r_target = 0.7;
    double alpha = 0.2;
    double gamma = kDefaultGamma;
    std::uint64_t seed = 0;

    static ControlSpec defaults(ControlEnv env, std::uint64_t seed = 0);
};

struct LdsCartPoleSpec {
    std::size_t dim = 4;
    std::size_t private_dim = 2;
    double scale = 1.0;
    double gamma = kDefaultGamma;
    std::uint64_t seed = 0;
    /// Reuse the source private block for the target (identical kernels).
    bool tie_private_blocks = false;
};

struct EnvPair {
    std::string name;
    TabularMDP source;
    TabularMDP target;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> constants;
    /// Per-state coordinates used for the Euclidean ground cost.
    std::vector<std::vector<double>> features;

    CostMatrix ground_cost() const { return CostMatrix::euclidean(features); }
};

struct LdsBundle {
    EnvPair pair;
    std::size_t dim = 0;
    std::vector<double> psi;          ///< dim x S
    std::vector<double> theta_source; ///< S*A*dim
    std::vector<double> theta_target; ///< S*A*dim
    std::vector<std::size_t> shared;
};

EnvPair build_toy_text(const ToyTextSpec& spec);
EnvPair build_control(const ControlSpec& spec);
LdsBundle build_lds_cartpole(const LdsCartPoleSpec& spec);

/// frozen_lake, cliff_walking, taxi, cartpole, acrobot, pendulum, lds_cartpole.
EnvPair build_env(const std::string& name, std::uint64_t seed = 0);
const std::vector<std::string>& env_names();

/// The Frozen Lake map, one string per row: S start, F frozen, H hole, P prize, G goal.
const std::vector<std::string>& frozen_lake_map();

} // namespace ribe
