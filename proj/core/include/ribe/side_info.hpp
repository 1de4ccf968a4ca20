#pragma once

#include "ribe/distances.hpp"

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

namespace ribe {

// Per-(s,a) quantities below are stored either as a single shared value or
// flattened (s, a[, k]) arrays.

struct NoSideInfo {};

struct DistanceTvInfo {
    std::vector<double> radius; ///< size 1 or S*A, each in [0,1]
};

struct DistanceW1Info {
    std::vector<double> radius; ///< size 1 or S*A, each >= 0
    CostMatrix cost;
};

struct MomentInfo {
    std::size_t dim = 0;
    std::vector<double> features; ///< dim x S, row-major; column j is phi(j)
    std::vector<double> beta;     ///< size 1, dim, or S*A*dim
};

enum class DensityMode { Global, Local };

struct DensityInfo {
    DensityMode mode = DensityMode::Global;
    std::vector<double> caps; ///< size 1, S*A (one B per pair) or S*A*S
    bool presmooth = false;
};

struct LdsInfo {
    std::size_t dim = 0;
    std::vector<double> psi;          ///< dim x S, row-major
    std::vector<std::size_t> shared;  ///< indices into [0, dim)
    std::vector<double> theta_source; ///< size dim or S*A*dim
};

struct ValueAwareInfo {
    std::vector<double> beta1; ///< size 1 or S*A
    CostMatrix metric;
};

using SideInfo = std::variant<NoSideInfo, DistanceTvInfo, DistanceW1Info, MomentInfo, DensityInfo,
                              LdsInfo, ValueAwareInfo>;

enum class PriorDefault { SourceKernel, Uniform };

/// JSON/CLI discriminator: none, tv, w1, moment, density, lds, value_aware.
std::string_view kind_name(const SideInfo& info) noexcept;

/// Mixing weight toward uniform used when pre-smoothing source rows.
inline constexpr double kPresmoothWeight = 1e-6;

/// Default moment map phi(j) = (x, x^2) with x = j / (S - 1).
std::vector<double> default_moment_features(std::size_t states);

} // namespace ribe
