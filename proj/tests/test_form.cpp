#include <doctest.h>

#include "fixtures.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/random.hpp"

using namespace ultraheat;
using fixtures::error_code;

TEST_SUITE("form") {

TEST_CASE("indicator energies on S4") {
  const JumpKernel k = fixtures::s4_kernel();
  const auto& s = k.space();
  const Ball ab = fixtures::ball_ab(s);
  const Vector f = ab.indicator(4);
  CHECK(energy(k, f) == doctest::Approx(1.0));
  CHECK(energy_trunc(k, f, 1.0) == 0.0);
  CHECK(energy(k, f, Vector::Constant(4, 3.0)) == 0.0);
}

TEST_CASE("indicator_energy_check") {
  const JumpKernel k = fixtures::s4_kernel();
  const auto& s = k.space();
  const auto r1 = indicator_energy_check(k, fixtures::ball_ab(s));
  CHECK(r1.pass);
  CHECK(r1.energy == doctest::Approx(1.0));
  CHECK(r1.twice_jump == doctest::Approx(1.0));
  const auto r2 = indicator_energy_check(k, s.ball(0, 2.0));
  CHECK(r2.pass);
  CHECK(r2.energy == 0.0);
  const auto r3 = indicator_energy_check(k, s.ball(0, 0.0));
  CHECK(r3.pass);
  CHECK(r3.energy == doctest::Approx(2.5));
  CHECK(r3.twice_jump == doctest::Approx(2.5));
}

TEST_CASE("simple functions") {
  const auto s = fixtures::s4();
  const auto parts = s->partition(1.0);
  const SimpleFunction f = simple_function({1.0, 2.0}, parts);
  CHECK(f(s->index_of("a")) == 1.0);
  CHECK(f(s->index_of("c")) == 2.0);
  CHECK(error_code([&] { simple_function({1.0, 1.0}, {s->ball(0, 1.0), s->ball(0, 0.0)}); }) ==
        ErrorCode::OverlappingBalls);
  CHECK(simple_function({0.0}, {s->ball(0, 1.0)}).evaluate(4).isZero());
}

TEST_CASE("truncated energy is monotone in rho and clamping contracts") {
  const JumpKernel k = fixtures::s4_kernel();
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const Vector f = rng.normal_vector(4);
    CHECK(energy_trunc(k, f, 0.5) <= energy_trunc(k, f, 1.0) + 1e-12);
    CHECK(energy_trunc(k, f, 1.0) <= energy(k, f) + 1e-12);
    CHECK(energy(k, f.cwiseMax(0.0).cwiseMin(1.0)) <= energy(k, f) + 1e-12);
  }
}

TEST_CASE("norms") {
  const Vector mu = Vector::Constant(2, 2.0);
  const Vector f = (Vector(2) << 1.0, -3.0).finished();
  CHECK(lp_norm(f, mu, 1.0) == doctest::Approx(8.0));
  CHECK(lp_norm(f, mu, 2.0) == doctest::Approx(std::sqrt(20.0)));
  CHECK(lp_norm(f, mu, std::numeric_limits<double>::infinity()) == 3.0);
  CHECK(l2_inner(f, f, mu) == doctest::Approx(20.0));
}

}
