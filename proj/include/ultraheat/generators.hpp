#pragma once

#include <cstdint>
#include <string>

#include "ultraheat/space.hpp"

namespace ultraheat {

/// Parameters for synthetic spaces.
///  - "dyadic": full binary tree; `branching` is ignored.
///  - "bary":   full `branching`-ary tree.
///  - "random": random branching in [2, branching], random radii and leaf
///              depths, at most `max_points` points; reproducible from `seed`.
/// Radii are q^(depth-1), ..., q, 1 for the regular kinds.
struct GeneratorParams {
  std::string kind = "dyadic";
  int depth = 3;
  int branching = 2;
  double q = 2.0;
  /// "unit" or "random" (uniform in [0.5, 2], from `seed`).
  std::string mass = "unit";
  std::uint64_t seed = 0;
  int max_points = 64;
};

SpaceSpec generate_space(const GeneratorParams& params);

}  // namespace ultraheat
