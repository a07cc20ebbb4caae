#include "ultraheat/generators.hpp"

#include <cmath>
#include <functional>

#include "ultraheat/error.hpp"
#include "ultraheat/random.hpp"

namespace ultraheat {

namespace {

SpaceSpec regular(int depth, int branching, double q, const std::function<double()>& mass) {
  int counter = 0;
  std::function<SpaceSpec(int)> build = [&](int level) {
    SpaceSpec s;
    s.radius = std::pow(q, depth - 1 - level);
    for (int c = 0; c < branching; ++c) {
      if (level == depth - 1) {
        s.leaves.push_back({"p" + std::to_string(counter++), mass()});
      } else {
        s.children.push_back(build(level + 1));
      }
    }
    return s;
  };
  return build(0);
}

}  // namespace

SpaceSpec generate_space(const GeneratorParams& params) {
  if (params.depth < 1) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
  if (!(params.q > 1.0)) throw Error(ErrorCode::InvalidArgument, "radius base q must be > 1");
  if (params.mass != "unit" && params.mass != "random") {
    throw Error(ErrorCode::InvalidArgument, "mass law must be 'unit' or 'random'");
  }
  Rng rng(params.seed);
  std::function<double()> mass = [&]() {
    return params.mass == "unit" ? 1.0 : rng.uniform(0.5, 2.0);
  };

  if (params.kind == "dyadic") return regular(params.depth, 2, params.q, mass);
  if (params.kind == "bary") {
    if (params.branching < 2) throw Error(ErrorCode::InvalidArgument, "branching must be >= 2");
    return regular(params.depth, params.branching, params.q, mass);
  }
  if (params.kind == "random") {
    if (params.branching < 2) throw Error(ErrorCode::InvalidArgument, "branching must be >= 2");
    if (params.max_points < 2) throw Error(ErrorCode::InvalidArgument, "max_points must be >= 2");
    int budget = params.max_points;
    int counter = 0;
    // Each call may spend at most `room` points; every ball gets >= 2 members.
    std::function<SpaceSpec(double, int, int)> build = [&](double radius, int level, int room) {
      SpaceSpec s;
      s.radius = radius;
      const int kids = static_cast<int>(rng.integer(2, std::min(params.branching, room)));
      int left = room;
      for (int c = 0; c < kids; ++c) {
        const int reserve = kids - c - 1;  // one point for each later child
        const bool can_split = level + 1 < params.depth && left - reserve >= 2;
        if (can_split && rng.uniform() < 0.6) {
          const int sub_room = static_cast<int>(rng.integer(2, left - reserve));
          const double child_radius = radius * rng.uniform(0.25, 0.75);
          SpaceSpec child = build(child_radius, level + 1, sub_room);
          int used = 0;
          std::function<void(const SpaceSpec&)> count = [&](const SpaceSpec& n) {
            used += static_cast<int>(n.leaves.size());
            for (const auto& ch : n.children) count(ch);
          };
          count(child);
          left -= used;
          s.children.push_back(std::move(child));
        } else {
          s.leaves.push_back({"p" + std::to_string(counter++), mass()});
          left -= 1;
        }
      }
      return s;
    };
    const double top = std::pow(params.q, params.depth - 1);
    return build(top, 0, budget);
  }
  throw Error(ErrorCode::UnknownGenerator, "unknown generator kind '" + params.kind + "'");
}

}  // namespace ultraheat
