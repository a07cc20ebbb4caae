#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "ultraheat/bounds.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/grid.hpp"
#include "ultraheat/semigroup.hpp"

using namespace ultraheat;
using fixtures::error_code;

TEST_SUITE("bounds") {

TEST_CASE("S2 closed-form constants") {
  const JumpKernel k = fixtures::s2_kernel();
  const ExponentConfig e{1.0, 1.0, 1.0};
  const auto times = log_grid(1e-3, 1.0, 32);
  const ConditionEstimate due = due_constant(k, e, times);
  CHECK(std::abs(due.constant - (1 + std::exp(-4.0)) / 2) < 1e-9);
  CHECK(due.witness["t"] == 1.0);
  CHECK(due.witness["x"] == due.witness["y"]);
  const ConditionEstimate wue = wue_constant(k, e, times);
  CHECK(std::abs(wue.constant - (1 - std::exp(-4.0))) < 1e-9);
  CHECK(wue.witness["x"] != wue.witness["y"]);
}

TEST_CASE("DUE with tiny alpha is the max density") {
  const JumpKernel k = fixtures::s4_kernel();
  const ExponentConfig e{1e-9, 1.0, 2.0};
  const auto times = log_grid(1e-3, 2.0, 16);
  const ConditionEstimate due = due_constant(k, e, times, false);
  double m = 0.0;
  const SpectralGenerator g = generator(k);
  for (double t : times) m = std::max(m, g.density(t).maxCoeff());
  CHECK(due.constant == doctest::Approx(m).epsilon(1e-6));
}

TEST_CASE("DUE on S4 is reproducible") {
  const JumpKernel k = fixtures::s4_kernel();
  const ExponentConfig e{1.0, 2.0, 2.0};
  const auto times = log_grid(4e-3, 4.0, 24);
  const double a = due_constant(k, e, times).constant;
  CHECK(a == due_constant(k, e, times).constant);
  CHECK(a >= due_constant(k, e, times, false).constant);
}

TEST_CASE("time grid outside (0, R0^beta]") {
  const JumpKernel k = fixtures::s2_kernel();
  const ExponentConfig e{1.0, 1.0, 1.0};
  CHECK(error_code([&] { due_constant(k, e, {0.5, 2.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Nash constant") {
  const JumpKernel k = fixtures::s4_kernel();
  const NashFamily fam = default_nash_family(k, 1.0, 1, 8);
  const ConditionEstimate c = nash_constant(k, 1.0, 1.0, 1.5, fam);
  REQUIRE(c.certified_upper);
  CHECK(c.constant <= *c.certified_upper);
  CHECK(*c.certified_upper == doctest::Approx(1.0 / 1.5));
  CHECK(nash_ratio(k, 1.0, 1.0, 1.5, Vector::Zero(4)) == 0.0);
}

TEST_CASE("energy difference") {
  const JumpKernel k = fixtures::s4_kernel();
  NashFamily one;
  one.add(k.space().ball(0, 0.0).indicator(4), "1_a");
  const CheckRecord r = energy_difference_check(k, 1.0, one);
  CHECK(r.status == Status::Pass);
  CHECK(r.lhs == doctest::Approx(0.5));
  CHECK(r.rhs == doctest::Approx(1.0));
  CHECK(energy_difference_check(k, 2.0, default_nash_family(k, 2.0, 3, 8)).lhs == 0.0);
  CHECK(energy_difference_check(k, 1.0, default_nash_family(k, 1.0, 3, 100)).status == Status::Pass);
}

TEST_CASE("truncation comparison") {
  const JumpKernel k = fixtures::s4_kernel();
  const auto times = log_grid(1e-3, 2.0, 24);
  const TruncationComparison full = truncation_comparison_check(k, 1.0, std::nullopt, Vector::Ones(4), times);
  CHECK(full.record.status == Status::Pass);
  const Vector f = fixtures::ball_ab(k.space()).indicator(4);
  const TruncationComparison tc = truncation_comparison_check(k, 1.0, std::nullopt, Vector::Ones(4) - f, times);
  CHECK(tc.record.status == Status::Pass);
  CHECK(tc.empirical_constant == doctest::Approx(2.0).epsilon(1e-3));
  const TruncationComparison dom =
      truncation_comparison_check(k, 1.0, std::vector<std::size_t>{0, 1, 2}, Vector::Ones(4), times);
  CHECK(dom.record.status == Status::Pass);
}

TEST_CASE("S4 tail slope and bound") {
  const JumpKernel k = fixtures::s4_kernel();
  const SpectralGenerator g = generator(k);
  const Vector out = Vector::Ones(4) - fixtures::ball_ab(k.space()).indicator(4);
  const auto slope = [&](double t) { return g.apply(t, out)[0] / t; };
  const double t = 1e-5;
  CHECK(std::abs(2 * slope(t / 2) - slope(t) - 0.5) < 1e-6);
  const ExponentConfig e{1.0, 1.0, 2.0};
  const TailReport rep = tail_probability_check(k, e, 1.25, log_grid(1e-4, 2.0, 12));
  for (const auto& r : rep.records) CHECK_MESSAGE(r.passed(), r.name);
  CHECK(rep.empirical_constant <= 5.0);
  const Vector late = g.apply(1e3, out);
  CHECK(late.maxCoeff() <= 1.0);
}

TEST_CASE("theorem 1 pipeline") {
  const JumpKernel k = fixtures::s4_kernel();
  const WueCertificate c = theorem1_pipeline(k, ExponentConfig{1.0, 2.0, 2.0});
  for (const auto& r : c.checks) CHECK_MESSAGE(r.passed(), r.name);
  CHECK(c.pass);
  CHECK(c.c_wue_derived >= c.c_wue_measured);
  CHECK_NOTHROW(require_pass(c));
  const Json j = c.to_json();
  CHECK(j["constants"].contains("C_wUE_derived"));

  // heavy uniform tail: every pair jumps at rate 50
  Matrix w = Matrix::Constant(4, 4, 50.0);
  w.diagonal().setZero();
  const JumpKernel heavy = from_matrix(fixtures::s4(), w);
  const WueCertificate h = theorem1_pipeline(heavy, ExponentConfig{1.0, 2.0, 2.0});
  CHECK(h.c_tj > c.c_tj);
  CHECK(h.pass);
  CHECK(h.c_wue_derived >= h.c_wue_measured);
}

}
