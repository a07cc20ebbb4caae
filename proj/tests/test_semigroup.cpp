#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "ultraheat/fast_isotropic.hpp"
#include "ultraheat/generators.hpp"
#include "ultraheat/random.hpp"
#include "ultraheat/semigroup.hpp"

using namespace ultraheat;
using fixtures::error_code;

namespace {

bool all_pass(const std::vector<CheckRecord>& rs) {
  for (const auto& r : rs) {
    if (!r.passed()) {
      MESSAGE(r.name << " lhs=" << r.lhs << " rhs=" << r.rhs);
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("semigroup") {

TEST_CASE("S2 closed form") {
  const SpectralGenerator g = generator(fixtures::s2_kernel());
  for (double t : {1e-3, 0.1, 1.0, 5.0}) {
    const Matrix p = g.density(t);
    CHECK(p(0, 0) == doctest::Approx((1 + std::exp(-4 * t)) / 2).epsilon(1e-13));
    CHECK(p(0, 1) == doctest::Approx((1 - std::exp(-4 * t)) / 2).epsilon(1e-13));
  }
}

TEST_CASE("long time limit is 1 / mu(M)") {
  const SpectralGenerator g = generator(fixtures::s4_kernel());
  const Matrix p = g.density(1e3);
  CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("truncated kernel is block diagonal") {
  const JumpKernel k = fixtures::s4_kernel();
  const HeatKernelEntry q = truncated_heat_kernel(k, 1.0, 0.7);
  CHECK(q.flavor == Flavor::Truncated);
  CHECK(q.density(0, 2) == 0.0);
  CHECK(q.density(1, 3) == 0.0);
  CHECK(q.density(0, 1) > 0.0);
}

TEST_CASE("restricted semigroup kills outside points") {
  const JumpKernel k = fixtures::s4_kernel();
  const SpectralGenerator g = generator(k, std::nullopt, std::vector<std::size_t>{0, 1});
  CHECK(g.flavor() == Flavor::Restricted);
  const Vector u = g.apply(1.0, Vector::Ones(4));
  CHECK(u[2] == 0.0);
  CHECK(u[0] < 1.0);
  CHECK(u[0] > 0.0);
}

TEST_CASE("perturbed apply with lambda 0 is plain apply") {
  const JumpKernel k = fixtures::s4_kernel();
  const SpectralGenerator g = generator(k, 1.0);
  Rng rng(3);
  const Vector f = rng.normal_vector(4);
  const Perturbation pert{fixtures::ball_ab(k.space()), 0.0};
  CHECK((perturbed_apply(g, 0.5, pert, f) - g.apply(0.5, f)).norm() < 1e-15);
}

TEST_CASE("self checks") {
  const std::vector<double> times{1e-3, 1e-2, 0.1, 1.0, 10.0};
  CHECK(all_pass(semigroup_selfcheck(generator(fixtures::s2_kernel()), fixtures::s2_kernel(), times)));
  const JumpKernel k = fixtures::s4_kernel();
  CHECK(all_pass(semigroup_selfcheck(generator(k), k, times)));
  CHECK(all_pass(semigroup_selfcheck(generator(k, 1.0), k, times)));
}

TEST_CASE("corrupted generator fails symmetry") {
  const JumpKernel k = fixtures::s4_kernel();
  Matrix L = generator(k).matrix();
  L(0, 1) += 0.3;
  L(0, 0) -= 0.3;
  const SpectralGenerator bad = SpectralGenerator::from_matrix(k.space_ptr(), L);
  bool symmetry_failed = false;
  for (const auto& r : semigroup_selfcheck(bad, k, {0.1, 1.0})) {
    if (r.name == "generator_symmetry" && r.status == Status::Fail) {
      symmetry_failed = true;
      CHECK(r.witness.contains("x"));
    }
  }
  CHECK(symmetry_failed);
}

TEST_CASE("spectral, dense and expm routes agree with masses") {
  GeneratorParams p;
  p.kind = "random";
  p.mass = "random";
  p.seed = 5;
  p.max_points = 24;
  const auto s = std::make_shared<const UltrametricSpace>(build_tree(generate_space(p)));
  const JumpKernel k = isotropic_kernel(s, PowerProfile{2.0, 1.0}, Scaling::None);
  const SpectralGenerator g = generator(k);
  for (double t : {1e-2, 1.0}) {
    const Matrix a = g.density(t);
    CHECK((a - density_dense_spectral(g, t)).cwiseAbs().maxCoeff() < 1e-10 * a.maxCoeff());
    CHECK((a - density_by_expm(g, t)).cwiseAbs().maxCoeff() < 1e-10 * a.maxCoeff());
  }
}

}

TEST_SUITE("fast_isotropic") {

TEST_CASE("matches the dense oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    GeneratorParams p;
    p.kind = "random";
    p.mass = "random";
    p.seed = seed;
    p.max_points = 48;
    const auto s = std::make_shared<const UltrametricSpace>(build_tree(generate_space(p)));
    const PowerProfile prof{1.5, 1.0};
    const FastIsotropicHeatKernel fast = FastIsotropicHeatKernel::from_profile(s, prof);
    const SpectralGenerator g = generator(isotropic_kernel(s, prof, Scaling::Mass));
    for (double t : {1e-3, 0.3, 10.0}) {
      const Matrix d = g.density(t);
      double err = 0.0;
      for (std::size_t x = 0; x < s->size(); ++x) {
        for (std::size_t y = 0; y < s->size(); ++y) {
          err = std::max(err, std::abs(fast.density(t, x, y) - d(x, y)) / std::sqrt(d(x, x) * d(y, y)));
        }
      }
      CHECK(err < 1e-10);
    }
  }
}

TEST_CASE("from_kernel recovers rates and rejects other kernels") {
  const auto s = fixtures::s4();
  const JumpKernel iso = isotropic_kernel(s, PowerProfile{3.0, 1.0}, Scaling::Mass);
  const FastIsotropicHeatKernel f = FastIsotropicHeatKernel::from_kernel(iso);
  const Matrix d = generator(iso).density(0.4);
  CHECK(std::abs(f.density(0.4, 0, 2) - d(0, 2)) < 1e-13);
  Matrix w = iso.weights();
  w(0, 2) = w(2, 0) = 0.5;
  CHECK(error_code([&] { FastIsotropicHeatKernel::from_kernel(from_matrix(s, w)); }) ==
        ErrorCode::NotIsotropic);
}

}
