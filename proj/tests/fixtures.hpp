#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ultraheat/error.hpp"
#include "ultraheat/kernel.hpp"
#include "ultraheat/space.hpp"

namespace fixtures {

using namespace ultraheat;

// a,b under radius 1; c,d under radius 1; root radius 2
inline SpaceSpec s4_spec() {
  SpaceSpec left{1.0, {}, {{"a", 1.0}, {"b", 1.0}}};
  SpaceSpec right{1.0, {}, {{"c", 1.0}, {"d", 1.0}}};
  return SpaceSpec{2.0, {left, right}, {}};
}

inline SpacePtr s4() { return std::make_shared<const UltrametricSpace>(build_tree(s4_spec())); }

inline SpacePtr s2() {
  return std::make_shared<const UltrametricSpace>(build_tree(SpaceSpec{1.0, {}, {{"0", 1.0}, {"1", 1.0}}}));
}

// r^-3, no mass scaling
inline JumpKernel s4_kernel() { return isotropic_kernel(s4(), PowerProfile{3.0, 1.0}, Scaling::None); }

inline JumpKernel s2_kernel() { return isotropic_kernel(s2(), [](double) { return 1.0; }, Scaling::None); }

inline Ball ball_ab(const UltrametricSpace& s) { return s.ball(s.index_of("a"), 1.0); }

template <class F>
std::optional<ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace fixtures
