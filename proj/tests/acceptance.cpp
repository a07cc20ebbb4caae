// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ultraheat/bounds.hpp"
#include "ultraheat/davies.hpp"
#include "ultraheat/error.hpp"
#include "ultraheat/fast_isotropic.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/generators.hpp"
#include "ultraheat/grid.hpp"
#include "ultraheat/io.hpp"
#include "ultraheat/random.hpp"
#include "ultraheat/semigroup.hpp"

using namespace ultraheat;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

struct Scenario {
  std::string name;
  SpacePtr space;
  std::shared_ptr<const JumpKernel> kernel;
  ExponentConfig exp;
};

SpacePtr make_space(const SpaceSpec& spec) { return std::make_shared<const UltrametricSpace>(build_tree(spec)); }

SpacePtr generated(const std::string& kind, int depth, int branching, std::uint64_t seed, int max_points,
                   const std::string& mass = "unit") {
  GeneratorParams p;
  p.kind = kind;
  p.depth = depth;
  p.branching = branching;
  p.seed = seed;
  p.max_points = max_points;
  p.mass = mass;
  return make_space(generate_space(p));
}

Scenario power_scenario(std::string name, SpacePtr s, double exponent, Scaling scaling, double beta) {
  auto k = std::make_shared<const JumpKernel>(isotropic_kernel(s, PowerProfile{exponent, 1.0}, scaling));
  return {std::move(name), s, k, ExponentConfig{1.0, beta, s->diam()}};
}

Scenario s2_scenario() {
  const SpacePtr s = make_space(SpaceSpec{1.0, {}, {{"0", 1.0}, {"1", 1.0}}});
  auto k = std::make_shared<const JumpKernel>(isotropic_kernel(s, [](double) { return 1.0; }, Scaling::None));
  return {"S2", s, k, ExponentConfig{1.0, 1.0, 1.0}};
}

Scenario s4_scenario() {
  SpaceSpec left{1.0, {}, {{"a", 1.0}, {"b", 1.0}}};
  SpaceSpec right{1.0, {}, {{"c", 1.0}, {"d", 1.0}}};
  return power_scenario("S4", make_space(SpaceSpec{2.0, {left, right}, {}}), 3.0, Scaling::None, 1.0);
}

Scenario dyadic8_scenario() {
  return power_scenario("dyadic8", generated("dyadic", 3, 2, 0, 64), 2.0, Scaling::None, 1.0);
}

/// The ten seeded scenarios used by the Davies-method criteria.
std::vector<Scenario> scenarios() {
  std::vector<Scenario> out{s2_scenario(), s4_scenario(), dyadic8_scenario()};
  out.push_back(power_scenario("bary3x2", generated("bary", 2, 3, 0, 64, "random"), 2.0, Scaling::Mass, 1.0));
  const double exps[] = {1.5, 2.0, 2.5, 3.0, 2.0, 1.5};
  for (int i = 0; i < 6; ++i) {
    const std::uint64_t seed = 100 + static_cast<std::uint64_t>(i);
    out.push_back(power_scenario("random" + std::to_string(seed),
                                 generated("random", 4, 4, seed, 32, i % 2 ? "random" : "unit"), exps[i],
                                 i % 3 == 0 ? Scaling::Mass : Scaling::None, i % 2 ? 2.0 : 1.0));
  }
  return out;
}

/// Ball of more than one point around point 0, truncated at its radius.
struct Setup {
  Ball ball;
  double rho;
  NashInput nash;
};

Setup davies_setup(const Scenario& sc) {
  Setup s;
  s.ball = sc.space->ball_of(sc.space->node(sc.space->leaf(0)).parent);
  s.rho = s.ball.radius;
  s.nash.nu = sc.exp.nu();
  s.nash.K0 = sc.exp.k0(s.rho);
  const ConditionEstimate c =
      nash_constant(*sc.kernel, s.rho, s.nash.nu, s.nash.K0, default_nash_family(*sc.kernel, s.rho, 1, 16));
  s.nash.C_N = c.constant;
  s.nash.certified = *c.certified_upper;
  return s;
}

/// Collects failures for one criterion.
struct Tally {
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string first_failure;

  void add(bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      if (failures == 0) first_failure = what;
      ++failures;
    }
  }
  void add(const CheckRecord& r, const std::string& where) {
    std::ostringstream s;
    s << where << ": " << r.name << " lhs=" << r.lhs << " rhs=" << r.rhs << " margin=" << r.margin;
    if (!r.note.empty()) s << " (" << r.note << ")";
    add(r.passed(), s.str());
  }
  void add_all(const std::vector<CheckRecord>& rs, const std::string& where) {
    for (const auto& r : rs) add(r, where);
  }
};

int failed_criteria = 0;

void report(const std::string& name, const Tally& t, const std::string& detail) {
  const bool ok = t.failures == 0 && t.checks > 0;
  if (!ok) ++failed_criteria;
  std::cout << (ok ? "PASS " : "FAIL ") << name << "  [" << t.checks << " checks";
  if (t.failures) std::cout << ", " << t.failures << " failed; first: " << t.first_failure;
  std::cout << "] " << detail << std::endl;
}

void guarded(const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    ++failed_criteria;
    std::cout << "FAIL " << name << "  [exception: " << e.what() << "]" << std::endl;
  }
}

// --- criteria --------------------------------------------------------------

void vanishing() {
  const auto t0 = Clock::now();
  Tally t;
  const auto times = log_grid(1e-3, 1e3, 25);
  std::size_t max_n = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const SpacePtr s = generated("random", 5, 5, seed, 64, seed % 2 ? "random" : "unit");
    max_n = std::max(max_n, s->size());
    const JumpKernel k = isotropic_kernel(s, PowerProfile{1.0 + 0.05 * static_cast<double>(seed % 40), 1.0},
                                          seed % 3 ? Scaling::None : Scaling::Mass);
    t.add_all(vanishing_check(k, times, 1e-13), "seed " + std::to_string(seed));
  }
  const double secs = seconds_since(t0);
  t.add(max_n <= 64, "space larger than 64 points");
  t.add(secs < 60.0, "runtime " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << "50 spaces, n <= " << max_n << ", 25 times in [1e-3, 1e3], " << secs << " s";
  report("vanishing_truncated_kernel", t, d.str());
}

void perturbation() {
  Tally t;
  std::size_t controls = 0, nonzero = 0, asserted = 0;
  std::vector<Scenario> list{s2_scenario(), s4_scenario(), dyadic8_scenario()};
  for (std::uint64_t seed : {7u, 8u}) {
    list.push_back(power_scenario("random", generated("random", 4, 4, seed, 32, "random"), 2.0, Scaling::None, 1.0));
  }
  Rng rng(2024);
  const double lambdas[] = {-50.0, -5.0, 0.0, 5.0, 50.0};
  for (const Scenario& sc : list) {
    const std::size_t n = sc.space->size();
    t.add(n <= 32, sc.name + " has more than 32 points");
    for (const Ball& b : sc.space->balls()) {
      for (double rho : sc.space->levels()) {
        for (double lambda : lambdas) {
          for (int pair = 0; pair < 20; ++pair) {
            const Vector f = rng.normal_vector(ix(n)), g = rng.normal_vector(ix(n));
            const CheckRecord r = perturbation_identity_check(*sc.kernel, rho, b, lambda, f, g, 1e-12);
            if (r.status == Status::Vacuous) {
              ++controls;
              if (r.lhs > 1e-12) ++nonzero;
            } else {
              ++asserted;
              t.add(r, sc.name);
            }
          }
        }
      }
    }
  }
  const double frac = controls ? static_cast<double>(nonzero) / static_cast<double>(controls) : 0.0;
  t.add(controls > 0 && frac >= 0.9, "negative control nonzero fraction " + std::to_string(frac));
  std::ostringstream d;
  d << asserted << " identity cases; control " << nonzero << "/" << controls << " nonzero (" << frac << ")";
  report("perturbation_identity", t, d.str());
}

void power() {
  Tally t;
  std::vector<Scenario> list{s2_scenario(), s4_scenario(), dyadic8_scenario()};
  list.push_back(power_scenario("random", generated("random", 4, 4, 11, 24, "random"), 2.0, Scaling::None, 1.0));
  Rng rng(77);
  const double ps[] = {1.0, 1.5, 2.0, 4.0, 8.0};
  double worst_eq = 0.0;
  for (const Scenario& sc : list) {
    const std::size_t n = sc.space->size();
    const auto balls = sc.space->balls();
    const auto& levels = sc.space->levels();
    for (int i = 0; i < 100; ++i) {
      Vector f = rng.uniform_vector(ix(n), 0.0, 3.0);
      if (i % 4 == 1) f = f.cwiseProduct(rng.uniform_vector(ix(n), 0.0, 1.0).unaryExpr([](double u) { return u < 0.5 ? 0.0 : 1.0; }));
      const Ball& b = balls[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(balls.size()) - 1))];
      std::vector<double> ok_rho;
      for (double r : levels) {
        if (rho_admissible(*sc.space, b, r)) ok_rho.push_back(r);
      }
      const double lambda = ok_rho.empty() ? 0.0 : rng.uniform(-50.0, 50.0);
      if (ok_rho.empty()) ok_rho = levels;
      const double rho = ok_rho[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(ok_rho.size()) - 1))];
      for (double p : ps) {
        const CheckRecord r = power_inequality_check(*sc.kernel, rho, b, lambda, f, p, 1e-12);
        t.add(r, sc.name + " p=" + std::to_string(p));
        if (p == 1.0) {
          const double scale = std::max({std::abs(r.lhs), std::abs(r.rhs), 1e-300});
          const double gap = std::abs(r.lhs - r.rhs) / scale;
          worst_eq = std::max(worst_eq, gap);
          t.add(gap <= 1e-12, sc.name + " p=1 equality gap " + std::to_string(gap));
        }
      }
    }
  }
  std::vector<double> values;
  for (int i = 0; i <= 40; ++i) values.push_back(0.1 * i);
  t.add(scalar_power_lemma_check(values, {1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0}), "scalar lemma");
  std::ostringstream d;
  d << "100 nonnegative f per space, p in {1,1.5,2,4,8}; worst p=1 relative gap " << worst_eq;
  report("power_inequality", t, d.str());
}

void lp_derivative() {
  Tally t;
  const auto times = log_grid(1e-3, 1.0, 256);
  Rng rng(5);
  std::size_t sources[3] = {0, 0, 0};
  for (const Scenario& sc : {s2_scenario(), s4_scenario(), dyadic8_scenario()}) {
    const Setup s = davies_setup(sc);
    const Vector f = rng.uniform_vector(ix(sc.space->size()), 0.1, 1.0);
    for (double p : {1.0, 2.0, 4.0}) {
      for (double lambda : {0.0, 2.0}) {
        const LpDerivativeResult r = lp_derivative_check(*sc.kernel, s.rho, s.ball, lambda, f, p, times, s.nash);
        t.add(r.record, sc.name);
        sources[r.nash.source == "family" ? 0 : r.nash.source == "enlarged" ? 1 : 2]++;
      }
    }
  }
  std::ostringstream d;
  d << "S2, S4, dyadic8; 256 log times in [1e-3, 1]; Nash constant from family/enlarged/certified: "
    << sources[0] << "/" << sources[1] << "/" << sources[2];
  report("lp_derivative", t, d.str());
}

void moser_and_sup() {
  const auto t0 = Clock::now();
  Tally moser, sup;
  const auto list = scenarios();
  const auto sup_times = log_grid(1e-4, 1.0, 48);
  for (const Scenario& sc : list) {
    const Setup s = davies_setup(sc);
    const std::size_t n = sc.space->size();
    Vector f = Vector::Zero(ix(n));
    f[0] = 1.0;
    f /= lp_norm(f, sc.space->masses(), 2.0);
    MoserConfig cfg;
    cfg.nash = s.nash;
    cfg.k_max = 8;
    for (double t : {0.1, 1.0}) {
      moser.add_all(moser_iteration(*sc.kernel, s.rho, s.ball, 4.0, f, t, cfg).records, sc.name);
    }
    for (double lambda : {0.0, 4.0, -4.0}) {
      sup.add_all(sup_bound_check(*sc.kernel, s.rho, s.ball, lambda, sup_times, s.nash), sc.name);
    }
  }
  const double secs = seconds_since(t0);
  moser.add(secs < 120.0, "runtime " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << list.size() << " scenarios, k <= 8, t in {0.1, 1}, " << secs << " s";
  report("moser_iteration", moser, d.str());
  report("sup_bounds", sup, std::to_string(list.size()) + " scenarios, lambda in {0, 4, -4}, 48 times");
}

void ode() {
  Tally t;
  Rng rng(31337);
  double worst_ratio = 0.0;
  for (int i = 0; i < 200; ++i) {
    OdeComparisonParams p;
    p.b = rng.uniform(0.1, 10.0);
    p.p = 4.0 - 3.0 * rng.uniform();      // (1, 4]
    p.theta = 3.0 - 3.0 * rng.uniform();  // (0, 3]
    p.K = 5.0 - 5.0 * rng.uniform();      // (0, 5]
    p.a = rng.uniform(1.0, 3.0);
    if (i % 2) {
      p.w = [](double s) { return 1.0 + s; };
      p.w_label = "1+t";
    }
    p.u0 = std::exp(rng.uniform(std::log(1e-2), std::log(1e2)));
    const OdeComparisonResult r = ode_comparison_check(p, 2.0, 1e-8);
    std::ostringstream where;
    where << "b=" << p.b << " p=" << p.p << " theta=" << p.theta << " K=" << p.K << " a=" << p.a << " w=" << p.w_label;
    t.add(r.record, where.str());
    for (std::size_t j = 0; j < r.u.size(); ++j) {
      if (r.bound[j] > 0 && std::isfinite(r.bound[j])) worst_ratio = std::max(worst_ratio, r.u[j] / r.bound[j]);
    }
  }
  std::ostringstream d;
  d << "200 random parameter sets, tolerance 1e-8; largest u/bound " << worst_ratio;
  report("ode_comparison", t, d.str());
}

void truncation_and_tail() {
  Tally t;
  const auto times = log_grid(1e-3, 1.0, 24);
  Rng rng(8);
  double c_emp = 0.0;
  for (const Scenario& sc : scenarios()) {
    const std::size_t n = sc.space->size();
    const double c_tj = tj_constant(*sc.kernel, sc.exp.beta, sc.exp.R0);
    const double top = std::pow(sc.exp.R0, sc.exp.beta);
    const TailReport tail = tail_probability_check(*sc.kernel, sc.exp, c_tj, log_grid(1e-3 * top, top, 24));
    t.add_all(tail.records, sc.name);
    for (double rho : sc.space->levels()) {
      std::vector<std::size_t> omega;
      for (const Ball& b : sc.space->partition(rho * 0.5)) {
        if (rng.uniform() < 0.6) {
          for (std::size_t x = b.begin; x < b.end; ++x) omega.push_back(x);
        }
      }
      for (const Vector& f : {Vector(rng.normal_vector(ix(n))), Vector(rng.uniform_vector(ix(n), 0.0, 1.0))}) {
        const auto all = truncation_comparison_check(*sc.kernel, rho, std::nullopt, f, times, 4.0);
        t.add(all.record, sc.name);
        c_emp = std::max(c_emp, all.empirical_constant);
        if (!omega.empty()) {
          const auto dom = truncation_comparison_check(*sc.kernel, rho, omega, f, times, 4.0);
          t.add(dom.record, sc.name + " restricted");
          c_emp = std::max(c_emp, dom.empirical_constant);
        }
      }
    }
  }

  // S4 first-order slope of the escape probability from {a,b}
  const Scenario s4 = s4_scenario();
  const SpectralGenerator g = generator(*s4.kernel);
  const Vector out = Vector::Ones(4) - s4.space->ball(0, 1.0).indicator(4);
  const auto ratio = [&](double s) { return g.apply(s, out)[0] / s; };
  const double h = 1e-5;
  const double slope = 2.0 * ratio(h / 2) - ratio(h);
  t.add(std::abs(slope - 0.5) <= 1e-6, "S4 slope " + std::to_string(slope));
  const double c_tj = tj_constant(*s4.kernel, 1.0, 2.0);
  t.add(std::abs(4.0 * c_tj - 5.0) < 1e-12, "S4 tail constant " + std::to_string(4.0 * c_tj));

  std::ostringstream d;
  d.precision(10);
  d << "S4 slope " << slope << " vs bound slope " << 4.0 * c_tj << "; largest truncation constant " << c_emp
    << " (c = 4)";
  report("truncation_and_tail", t, d.str());
}

void theorem1() {
  Tally t;
  double worst = 0.0;
  for (const Scenario& sc : scenarios()) {
    const WueCertificate c = theorem1_pipeline(*sc.kernel, sc.exp);
    t.add_all(c.checks, sc.name);
    t.add(c.pass && c.c_wue_derived >= c.c_wue_measured, sc.name + " derived below measured");
    worst = std::max(worst, c.c_wue_measured / c.c_wue_derived);
  }
  const Scenario s2 = s2_scenario();
  const WueCertificate c = theorem1_pipeline(*s2.kernel, s2.exp);
  const double due = (1.0 + std::exp(-4.0)) / 2.0, wue = 1.0 - std::exp(-4.0);
  t.add(std::abs(c.c_due - due) <= 1e-9, "S2 C_DUE " + std::to_string(c.c_due));
  t.add(std::abs(c.c_wue_measured - wue) <= 1e-9, "S2 C_wUE " + std::to_string(c.c_wue_measured));
  std::ostringstream d;
  d.precision(12);
  d << "S2 C_DUE " << c.c_due << " (err " << std::abs(c.c_due - due) << "), C_wUE " << c.c_wue_measured << " (err "
    << std::abs(c.c_wue_measured - wue) << "); largest measured/derived " << worst;
  report("wue_pipeline", t, d.str());
}

void semigroup() {
  Tally t;
  const auto times = log_grid(1e-3, 1e2, 12);
  for (const Scenario& sc : scenarios()) {
    std::vector<std::optional<double>> rhos{std::nullopt};
    for (double r : sc.space->levels()) rhos.emplace_back(r);
    for (const auto& rho : rhos) {
      t.add_all(semigroup_selfcheck(generator(*sc.kernel, rho), *sc.kernel, times, 3), sc.name);
    }
    std::vector<std::size_t> omega;
    for (std::size_t x = 0; x < sc.space->size(); x += 2) omega.push_back(x);
    t.add_all(semigroup_selfcheck(generator(*sc.kernel, std::nullopt, omega), *sc.kernel, times, 3),
              sc.name + " restricted");
  }
  report("semigroup_selfcheck", t, "full, every truncation level and one restricted domain per scenario");
}

void fast_path() {
  Tally t;
  double worst = 0.0;
  std::size_t largest = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int cap = seed <= 3 ? 64 : 256;
    const SpacePtr s = generated("random", 6, 6, seed, cap, "random");
    largest = std::max(largest, s->size());
    const PowerProfile prof{1.0 + 0.3 * static_cast<double>(seed), 1.0};
    const FastIsotropicHeatKernel fast = FastIsotropicHeatKernel::from_profile(s, prof);
    const SpectralGenerator g = generator(isotropic_kernel(s, prof, Scaling::Mass));
    for (double tm : {1e-3, 0.1, 10.0}) {
      const Matrix d = g.density(tm);
      for (std::size_t x = 0; x < s->size(); ++x) {
        for (std::size_t y = 0; y < s->size(); ++y) {
          const double e = std::abs(fast.density(tm, x, y) - d(ix(x), ix(y))) /
                           std::sqrt(d(ix(x), ix(x)) * d(ix(y), ix(y)));
          worst = std::max(worst, e);
        }
      }
    }
  }
  t.add(worst <= 1e-10, "fast/dense disagreement " + std::to_string(worst));
  // dyadic tree with 2^12 = 4096 points
  const SpacePtr big = generated("dyadic", 12, 2, 0, 4096, "unit");
  const PowerProfile prof{2.0, 1.0};
  auto t0 = Clock::now();
  const FastIsotropicHeatKernel fast = FastIsotropicHeatKernel::from_profile(big, prof);
  const Vector diag = fast.diagonal(0.5);
  const double fast_secs = seconds_since(t0);
  t.add(big->size() == 4096 && diag.size() == 4096, "size");
  t.add(fast_secs < 1.0, "fast diagonal took " + std::to_string(fast_secs) + " s");

  // dense route timed at n = 1024 and scaled by n^3
  const SpacePtr mid = generated("dyadic", 10, 2, 0, 1024, "unit");
  const JumpKernel k = isotropic_kernel(mid, prof, Scaling::Mass);
  t0 = Clock::now();
  const Vector dense_diag = generator(k).density(0.5).diagonal();
  const double dense_1024 = seconds_since(t0);
  const double dense_4096 = dense_1024 * 64.0;
  const double ratio = dense_4096 / std::max(fast_secs, 1e-6);
  const FastIsotropicHeatKernel fast_mid = FastIsotropicHeatKernel::from_profile(mid, prof);
  t.add((fast_mid.diagonal(0.5) - dense_diag).cwiseAbs().maxCoeff() <= 1e-10 * dense_diag.maxCoeff(),
        "n=1024 diagonal disagreement");
  t.add(ratio >= 100.0, "speedup " + std::to_string(ratio));

  const Json bench{{"fast_seconds_n4096", fast_secs},
                   {"dense_seconds_n1024", dense_1024},
                   {"dense_seconds_n4096_estimate", dense_4096},
                   {"speedup_estimate", ratio},
                   {"fast_floor_seconds", 1e-6},
                   {"max_relative_error", worst},
                   {"largest_checked_n", largest}};
  write_text_file("fast_isotropic_benchmark.json", bench.dump(2) + "\n");
  std::ostringstream d;
  d << "max error " << worst << " (n <= " << largest << "); n=4096 diagonal " << fast_secs
    << " s; dense estimate " << dense_4096 << " s; speedup " << ratio;
  report("fast_isotropic", t, d.str());
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  guarded("vanishing_truncated_kernel", vanishing);
  guarded("perturbation_identity", perturbation);
  guarded("power_inequality", power);
  guarded("lp_derivative", lp_derivative);
  guarded("moser_iteration+sup_bounds", moser_and_sup);
  guarded("ode_comparison", ode);
  guarded("truncation_and_tail", truncation_and_tail);
  guarded("wue_pipeline", theorem1);
  guarded("semigroup_selfcheck", semigroup);
  guarded("fast_isotropic", fast_path);
  std::cout << (failed_criteria ? "FAILED " : "ALL PASSED ") << failed_criteria << " criteria failed, "
            << seconds_since(t0) << " s" << std::endl;
  return failed_criteria ? 1 : 0;
}
