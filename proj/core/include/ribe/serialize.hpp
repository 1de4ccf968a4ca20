#pragma once

#include "ribe/envs.hpp"
#include "ribe/robust_dp.hpp"
#include "ribe/side_info.hpp"
#include "ribe/types.hpp"

#include <string>

namespace ribe {

// Documents are compact JSON; doubles round-trip exactly.
// Malformed input throws Error(InvalidArgument).

std::string to_json(const TransitionKernel& kernel);
TransitionKernel kernel_from_json(const std::string& text);

/// {"S","A","gamma","rewards":[[..]],"kernel":[[[..]]],"rewards_rescaled"}
std::string to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(const std::string& text);

/// {"name","seed","constants":{..},"features":[[..]],"source":MDP,"target":MDP}
std::string to_json(const EnvPair& pair);
EnvPair env_pair_from_json(const std::string& text);

/// Tagged by "kind": none, tv, w1, moment, density, lds, value_aware.
std::string to_json(const SideInfo& info);
SideInfo side_info_from_json(const std::string& text);

std::string to_json(const Policy& policy);
Policy policy_from_json(const std::string& text);

/// {"value":[..],"policy":{..},"iterations","residual","converged"}
std::string to_json(const PlanResult& plan);

} // namespace ribe
