#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "ultraheat/bounds.hpp"
#include "ultraheat/davies.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/generators.hpp"
#include "ultraheat/grid.hpp"
#include "ultraheat/random.hpp"

using namespace ultraheat;
using fixtures::error_code;

namespace {

NashInput nash_for(const JumpKernel& k, double rho, const ExponentConfig& e) {
  NashInput n;
  n.nu = e.nu();
  n.K0 = e.k0(rho);
  const ConditionEstimate c = nash_constant(k, rho, n.nu, n.K0, default_nash_family(k, rho, 1, 16));
  n.C_N = c.constant;
  n.certified = *c.certified_upper;
  return n;
}

}  // namespace

TEST_SUITE("davies") {

TEST_CASE("admissible rho") {
  const auto s = fixtures::s4();
  const Ball ab = fixtures::ball_ab(*s);
  CHECK(rho_admissible(*s, ab, 1.0));
  CHECK_FALSE(rho_admissible(*s, ab, 2.0));
  CHECK(rho_admissible(*s, s->ball(0, 2.0), 2.0));
}

TEST_CASE("perturbation identity") {
  const JumpKernel k = fixtures::s4_kernel();
  const Ball ab = fixtures::ball_ab(k.space());
  Rng rng(11);
  const Vector f = rng.normal_vector(4), g = rng.normal_vector(4);
  const CheckRecord r = perturbation_identity_check(k, 1.0, ab, 3.0, f, g);
  CHECK(r.status == Status::Pass);

  const CheckRecord z = perturbation_identity_check(k, 2.0, ab, 0.0, f, g);
  CHECK(z.status == Status::Pass);

  // f, g must straddle the boundary of B; for f = g = 1_a the factors cancel
  const Vector ea = k.space().ball(0, 0.0).indicator(4);
  const Vector ec = k.space().ball(2, 0.0).indicator(4);
  CHECK(perturbation_identity_check(k, 2.0, ab, 1.0, ea, ea).lhs < 1e-15);
  const CheckRecord c = perturbation_identity_check(k, 2.0, ab, 1.0, ea, ec);
  CHECK(c.name == "perturbation_identity_control");
  CHECK(c.status == Status::Vacuous);
  CHECK(c.lhs > 1e-3);
}

TEST_CASE("power inequality") {
  const JumpKernel k = fixtures::s4_kernel();
  const Ball ab = fixtures::ball_ab(k.space());
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vector f = rng.uniform_vector(4, 0.0, 2.0);
    const CheckRecord one = power_inequality_check(k, 1.0, ab, 0.0, f, 1.0);
    CHECK(std::abs(one.lhs - one.rhs) <= 1e-12 * std::max(1.0, one.rhs));
    CHECK(std::abs(one.lhs - energy_trunc(k, f, 1.0)) <= 1e-12 * std::max(1.0, one.lhs));
    CHECK(power_inequality_check(k, 1.0, ab, 5.0, f, 2.0).status == Status::Pass);
  }
  CHECK(error_code([&] { power_inequality_check(k, 1.0, ab, 0.0, -Vector::Ones(4), 2.0); }) ==
        ErrorCode::NegativeInput);
  CHECK(error_code([&] { power_inequality_check(k, 1.0, ab, 0.0, Vector::Ones(4), 0.5); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("scalar lemma grid") {
  CHECK(scalar_power_lemma_check({0.0, 0.5, 1.0, 2.0}, {1.0, 2.0, 4.0}).status == Status::Pass);
}

TEST_CASE("Lp derivative") {
  const JumpKernel k2 = fixtures::s2_kernel();
  const ExponentConfig e2{1.0, 1.0, 1.0};
  const Vector f2 = (Vector(2) << 1.0, 0.0).finished();
  const auto times = log_grid(1e-3, 1.0, 32);
  const Ball b0 = k2.space().ball(0, 0.0);
  CHECK(lp_derivative_check(k2, 1.0, b0, 0.0, f2, 1.0, times, nash_for(k2, 1.0, e2)).record.status ==
        Status::Pass);

  const JumpKernel k4 = fixtures::s4_kernel();
  const ExponentConfig e4{1.0, 1.0, 2.0};
  Rng rng(4);
  const Vector f4 = rng.uniform_vector(4, 0.1, 1.0);
  const auto res = lp_derivative_check(k4, 1.0, fixtures::ball_ab(k4.space()), 2.0, f4, 2.0, times,
                                       nash_for(k4, 1.0, e4));
  CHECK(res.record.status == Status::Pass);
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    CHECK(std::abs(res.measured[i] - res.exact[i]) <= 1e-6 * (std::abs(res.exact[i]) + 1.0));
  }

  CHECK(error_code([&] {
          lp_derivative_check(k4, 1.0, fixtures::ball_ab(k4.space()), 2.0, f4, 2.0, {0.1, 0.2, 0.3},
                              nash_for(k4, 1.0, e4));
        }) == ErrorCode::StepTooCoarse);
}

TEST_CASE("Moser iteration") {
  const JumpKernel k = fixtures::s4_kernel();
  const ExponentConfig e{1.0, 1.0, 2.0};
  MoserConfig cfg;
  cfg.nash = nash_for(k, 1.0, e);
  const Vector f = k.space().ball(0, 0.0).indicator(4);
  const MoserResult r = moser_iteration(k, 1.0, fixtures::ball_ab(k.space()), 4.0, f, 1.0, cfg);
  for (const auto& rec : r.records) CHECK_MESSAGE(rec.passed(), rec.name);
  CHECK(r.trace.w.size() == 3);
  CHECK(r.trace.w[0].size() == 9);
  CHECK(r.trace.C1 == doctest::Approx(moser_constant(r.trace.C_N, 1.0)));
  cfg.k_max = 13;
  CHECK(error_code([&] { moser_iteration(k, 1.0, fixtures::ball_ab(k.space()), 4.0, f, 1.0, cfg); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("Moser constant") {
  CHECK(moser_constant(1.0, 1.0) == doctest::Approx(2.0));
  CHECK(moser_constant(16.0, 1.0) == doctest::Approx(8.0));
}

TEST_CASE("sup bounds near t = 0") {
  const JumpKernel k = fixtures::s4_kernel();
  const ExponentConfig e{1.0, 1.0, 2.0};
  const auto recs = sup_bound_check(k, 1.0, fixtures::ball_ab(k.space()), 2.0, log_grid(1e-8, 1.0, 40),
                                    nash_for(k, 1.0, e));
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) CHECK_MESSAGE(r.status == Status::Pass, r.name);
}

TEST_CASE("vanishing") {
  const JumpKernel k = fixtures::s4_kernel();
  const auto recs = vanishing_check(k, log_grid(1e-3, 1e3, 16));
  REQUIRE(recs.size() == 4);
  CHECK(recs[0].status == Status::Pass);
  CHECK(recs[0].lhs == 0.0);
  CHECK(recs[2].status == Status::Vacuous);

  GeneratorParams p;
  p.depth = 3;
  const auto s8 = std::make_shared<const UltrametricSpace>(build_tree(generate_space(p)));
  const JumpKernel k8 = isotropic_kernel(s8, PowerProfile{2.0, 1.0}, Scaling::None);
  const Matrix q = truncated_heat_kernel(k8, 1.0, 1e3).density;
  for (std::size_t x = 0; x < 8; ++x) {
    for (std::size_t y = 0; y < 8; ++y) {
      if (s8->distance(x, y) > 1.0) CHECK(q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) == 0.0);
    }
  }
}

TEST_CASE("ODE comparison") {
  OdeComparisonParams p;
  p.u0 = 1e-12;
  CHECK(ode_comparison_check(p, 2.0).record.status == Status::Pass);
  Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    OdeComparisonParams q;
    q.b = rng.uniform(0.1, 10.0);
    q.p = rng.uniform(1.01, 4.0);
    q.theta = rng.uniform(0.05, 3.0);
    q.K = rng.uniform(0.05, 5.0);
    q.a = rng.uniform(1.0, 3.0);
    q.w = [](double t) { return 1.0 + t; };
    q.u0 = rng.uniform(0.01, 10.0);
    const auto r = ode_comparison_check(q, 2.0);
    CHECK_MESSAGE(r.record.status == Status::Pass, q.b << " " << q.p << " " << q.theta);
  }
  OdeComparisonParams bad;
  bad.p = 0.5;
  CHECK(error_code([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

}
