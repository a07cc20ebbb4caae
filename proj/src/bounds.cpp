#include "ultraheat/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ultraheat/error.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/grid.hpp"
#include "ultraheat/random.hpp"

namespace ultraheat {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

constexpr double kIdentityTol = 1e-12;
constexpr double kSpectralTol = 1e-10;

struct PairMax {
  double value = 0.0;
  std::size_t x = 0;
  std::size_t y = 0;
};

PairMax due_scan(const SpectralGenerator& gen, const ExponentConfig& cfg, double t) {
  const Matrix p = gen.density(t);
  const double weight = std::pow(t, cfg.alpha / cfg.beta);
  PairMax best;
  best.value = -1.0;
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double v = weight * p(i, j);
      if (v > best.value) best = {v, static_cast<std::size_t>(j), static_cast<std::size_t>(i)};
    }
  }
  return best;
}

PairMax wue_scan(const SpectralGenerator& gen, const Matrix& dist, const ExponentConfig& cfg,
                 double t) {
  const Matrix p = gen.density(t);
  const double weight = std::pow(t, cfg.alpha / cfg.beta);
  const double scale = std::pow(t, 1.0 / cfg.beta);
  PairMax best;
  best.value = -1.0;
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double factor = std::pow(1.0 + std::min(dist(i, j), cfg.R0) / scale, cfg.beta);
      const double v = weight * p(i, j) * factor;
      if (v > best.value) best = {v, static_cast<std::size_t>(j), static_cast<std::size_t>(i)};
    }
  }
  return best;
}

std::vector<double> sorted_times(std::vector<double> times) {
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

ConditionEstimate scan_constant(const std::string& kind, const std::function<PairMax(double)>& scan,
                                const UltrametricSpace& space, const std::vector<double>& times,
                                bool refine) {
  const std::vector<double> grid = sorted_times(times);
  double grid_max = 0.0;
  for (double t : grid) grid_max = std::max(grid_max, scan(t).value);
  GridMax best{grid_max, grid.front(), 0};
  if (refine) {
    best = refine_max([&](double t) { return scan(t).value; }, grid);
  } else {
    for (double t : grid) {
      if (scan(t).value == grid_max) {
        best.argmax = t;
        break;
      }
    }
  }
  const PairMax at = scan(best.argmax);
  ConditionEstimate e;
  e.kind = kind;
  e.constant = std::max(best.value, grid_max);
  e.witness = Json{{"t", best.argmax}, {"x", space.id(at.x)}, {"y", space.id(at.y)}};
  e.scan = std::to_string(grid.size()) + " log-spaced times in [" + std::to_string(grid.front()) +
           ", " + std::to_string(grid.back()) + "]" +
           (refine ? ", refined near the maximizer (" + std::to_string(best.refinements) + " rounds)"
                   : "");
  return e;
}

double sup_norm(const Vector& f) { return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff(); }

Json ball_json(const UltrametricSpace& space, const Ball& b) {
  Json members = Json::array();
  for (std::size_t i = b.begin; i < b.end; ++i) members.push_back(space.id(i));
  return Json{{"members", members}, {"radius", b.radius}};
}

}  // namespace

Json to_json(const ConditionEstimate& e) {
  Json j{{"kind", e.kind}, {"constant", e.constant}, {"witness", e.witness}, {"scan", e.scan}};
  if (e.certified_upper) j["certified_upper"] = *e.certified_upper;
  return j;
}

void check_time_grid(const std::vector<double>& times, const ExponentConfig& cfg) {
  if (times.empty()) throw Error(ErrorCode::InvalidArgument, "time grid is empty");
  const double top = std::pow(cfg.R0, cfg.beta) * (1.0 + 1e-12);
  for (double t : times) {
    if (!(t > 0.0) || t > top) {
      throw Error(ErrorCode::InvalidArgument,
                  "time " + std::to_string(t) + " outside (0, R0^beta]");
    }
  }
}

ConditionEstimate due_constant(const SpectralGenerator& full, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine) {
  cfg.validate(full.space());
  check_time_grid(times, cfg);
  return scan_constant(
      "DUE", [&](double t) { return due_scan(full, cfg, t); }, full.space(), times, refine);
}

ConditionEstimate due_constant(const JumpKernel& kernel, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine) {
  return due_constant(generator(kernel), cfg, times, refine);
}

ConditionEstimate wue_constant(const SpectralGenerator& full, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine) {
  cfg.validate(full.space());
  check_time_grid(times, cfg);
  const Matrix dist = full.space().distance_matrix();
  return scan_constant(
      "wUE", [&](double t) { return wue_scan(full, dist, cfg, t); }, full.space(), times, refine);
}

ConditionEstimate wue_constant(const JumpKernel& kernel, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine) {
  return wue_constant(generator(kernel), cfg, times, refine);
}

void NashFamily::add(Vector u, std::string label) {
  functions.push_back(std::move(u));
  labels.push_back(std::move(label));
}

NashFamily default_nash_family(const JumpKernel& kernel, double rho, std::uint64_t seed,
                               int count) {
  const UltrametricSpace& space = kernel.space();
  const std::size_t n = space.size();
  NashFamily fam;
  const Matrix phi_rho = generator(kernel, rho).eigenfunctions();
  for (Index k = 0; k < phi_rho.cols(); ++k) {
    fam.add(phi_rho.col(k), "eigen_trunc_" + std::to_string(k));
  }
  const Matrix phi = generator(kernel).eigenfunctions();
  for (Index k = 0; k < phi.cols(); ++k) fam.add(phi.col(k), "eigen_full_" + std::to_string(k));
  const std::vector<Ball> balls = space.balls();
  for (std::size_t b = 0; b < balls.size(); ++b) {
    fam.add(balls[b].indicator(n), "ball_" + std::to_string(b));
  }
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    // Random simple function: cut the tree at a random level and draw
    // a coefficient per block.
    const auto& levels = space.levels();
    const double r = levels.empty()
                         ? 0.0
                         : levels[static_cast<std::size_t>(
                               rng.integer(0, static_cast<std::int64_t>(levels.size()) - 1))];
    Vector u = Vector::Zero(ix(n));
    for (const Ball& b : space.partition(r * rng.uniform(0.0, 1.0))) {
      const double c = rng.normal();
      for (std::size_t p = b.begin; p < b.end; ++p) u[ix(p)] = c;
    }
    fam.add(u, "simple_" + std::to_string(i));
  }
  for (int i = 0; i < count; ++i) {
    fam.add(rng.uniform_vector(ix(n), 0.0, 1.0), "positive_" + std::to_string(i));
  }
  return fam;
}

double nash_ratio(const JumpKernel& kernel, double rho, double nu, double K0, const Vector& u) {
  const Vector& mu = kernel.space().masses();
  const double l2 = lp_norm(u, mu, 2.0);
  const double l1 = lp_norm(u, mu, 1.0);
  if (l2 == 0.0 || l1 == 0.0) return 0.0;
  // Homogeneous of degree 0: normalize first to keep powers in range.
  const Vector v = u / l2;
  const double e = std::max(0.0, energy_trunc(kernel, v, rho));
  return 1.0 / ((e + K0) * std::pow(lp_norm(v, mu, 1.0), 2.0 * nu));
}

ConditionEstimate nash_constant(const JumpKernel& kernel, double rho, double nu, double K0,
                                const NashFamily& family) {
  ConditionEstimate e;
  e.kind = "Nash";
  e.constant = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double r = nash_ratio(kernel, rho, nu, K0, family.functions[i]);
    if (r > e.constant) {
      e.constant = r;
      best = i;
    }
  }
  e.witness = Json{{"function", family.size() ? family.labels[best] : std::string()}};
  e.scan = "largest ratio over " + std::to_string(family.size()) +
           " test functions (lower estimate of the best constant)";
  e.certified_upper = 1.0 / (K0 * std::pow(kernel.space().masses().minCoeff(), nu));
  return e;
}

CheckRecord energy_difference_check(const JumpKernel& kernel, double rho,
                                    const NashFamily& family) {
  const Vector& mu = kernel.space().masses();
  const double sup_tail = kernel.sup_tail(rho);
  WorstCase worst;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Vector& u = family.functions[i];
    const FormValue full = energy_terms(kernel, u, u);
    const FormValue trunc = energy_terms(kernel, u, u, rho);
    const double lhs = full.value - trunc.value;
    const double l2 = lp_norm(u, mu, 2.0);
    const double rhs = 4.0 * l2 * l2 * sup_tail;
    worst.offer(lhs, rhs, kIdentityTol * std::max(full.abs_sum, 1e-300),
                Json{{"function", family.labels[i]}});
  }
  return worst.record("energy_difference", Json{{"rho", rho}, {"sup_tail", sup_tail}});
}

TruncationComparison truncation_comparison_check(
    const JumpKernel& kernel, double rho, const std::optional<std::vector<std::size_t>>& omega,
    const Vector& f, const std::vector<double>& times, double c) {
  if (f.size() != ix(kernel.size())) {
    throw Error(ErrorCode::DimensionMismatch, "function length does not match the space");
  }
  const SpectralGenerator P = generator(kernel, std::nullopt, omega);
  const SpectralGenerator Q = generator(kernel, rho, omega);
  const double sup_tail = kernel.sup_tail(rho);
  const double fmax = sup_norm(f);
  const UltrametricSpace& space = kernel.space();
  WorstCase worst;
  TruncationComparison out;
  for (double t : times) {
    const Vector pf = P.apply(t, f);
    const Vector qf = Q.apply(t, f);
    const double bound = c * t * sup_tail * fmax;
    for (std::size_t x : P.domain()) {
      const double diff = std::abs(pf[ix(x)] - qf[ix(x)]);
      worst.offer(diff, bound, kSpectralTol * std::max(fmax, 1e-300),
                  Json{{"t", t}, {"x", space.id(x)}});
      if (sup_tail > 0.0 && fmax > 0.0) {
        out.empirical_constant = std::max(out.empirical_constant, diff / (t * sup_tail * fmax));
      }
    }
  }
  out.record = worst.record("truncation_comparison",
                            Json{{"rho", rho},
                                 {"c", c},
                                 {"sup_tail", sup_tail},
                                 {"restricted", omega.has_value()},
                                 {"times", times.size()}});
  out.record.witness["empirical_constant"] = out.empirical_constant;
  return out;
}

TailReport tail_probability_check(const SpectralGenerator& full, const ExponentConfig& cfg,
                                  double c_tj, const std::vector<double>& times) {
  const UltrametricSpace& space = full.space();
  const std::size_t n = space.size();
  const std::vector<Ball> balls = space.balls();
  const double c_tail = 4.0 * c_tj;
  TailReport out;
  for (double t : times) {
    // P_t 1_{B^c} for every node, indexed by node id.
    std::vector<Vector> escape(space.nodes().size());
    WorstCase bound;
    for (const Ball& b : balls) {
      const Vector outside = Vector::Ones(ix(n)) - b.indicator(n);
      escape[b.node] = full.apply(t, outside);
      double sup = 0.0;
      std::size_t arg = b.begin;
      for (std::size_t x = b.begin; x < b.end; ++x) {
        if (escape[b.node][ix(x)] > sup) {
          sup = escape[b.node][ix(x)];
          arg = x;
        }
      }
      const double r_eff = std::min(space.outer_radius(b), cfg.R0);
      const double rhs = c_tail * t / std::pow(r_eff, cfg.beta);
      Json w = ball_json(space, b);
      w["t"] = t;
      w["x"] = space.id(arg);
      w["r_eff"] = r_eff;
      bound.offer(sup, rhs, kSpectralTol, std::move(w));
      if (t > 0.0) out.empirical_constant = std::max(out.empirical_constant, sup * std::pow(r_eff, cfg.beta) / t);
    }
    out.records.push_back(bound.record(
        "tail_bound", Json{{"t", t}, {"beta", cfg.beta}, {"R0", cfg.R0}, {"C_tail", c_tail}}));

    WorstCase mono;
    for (std::size_t x = 0; x < n; ++x) {
      NodeId cur = space.leaf(x);
      while (space.node(cur).parent != kNoNode) {
        const NodeId up = space.node(cur).parent;
        mono.offer(escape[up][ix(x)], escape[cur][ix(x)], kIdentityTol,
                   Json{{"t", t},
                        {"x", space.id(x)},
                        {"inner_radius", space.node(cur).radius},
                        {"outer_radius", space.node(up).radius}});
        cur = up;
      }
    }
    out.records.push_back(mono.record("tail_monotone", Json{{"t", t}}, "single point space"));
  }
  return out;
}

TailReport tail_probability_check(const JumpKernel& kernel, const ExponentConfig& cfg,
                                  double c_tj, const std::vector<double>& times) {
  return tail_probability_check(generator(kernel), cfg, c_tj, times);
}

Json WueCertificate::to_json() const {
  Json checks_json = Json::array();
  for (const CheckRecord& r : checks) checks_json.push_back(ultraheat::to_json(r));
  return Json{{"inputs", inputs},
              {"constants",
               {{"C_TJ", c_tj},
                {"C_DUE", c_due},
                {"C_N", c_nash},
                {"C_tail", c_tail},
                {"C_wUE_derived", c_wue_derived},
                {"C_wUE_measured", c_wue_measured},
                {"C_tail_half_radius", c_tail_half_radius},
                {"C_wUE_half_radius", c_wue_half_radius}}},
              {"checks", checks_json},
              {"status", pass ? "pass" : "fail"}};
}

WueCertificate theorem1_pipeline(const JumpKernel& kernel, const ExponentConfig& cfg,
                                 std::vector<double> times) {
  const UltrametricSpace& space = kernel.space();
  cfg.validate(space);
  const double top = std::pow(cfg.R0, cfg.beta);
  if (times.empty()) times = log_grid(1e-3 * top, top, 48);
  times = sorted_times(times);
  check_time_grid(times, cfg);

  WueCertificate cert;
  cert.inputs = Json{{"points", space.size()},
                     {"diam", space.diam()},
                     {"alpha", cfg.alpha},
                     {"beta", cfg.beta},
                     {"R0", cfg.R0},
                     {"times", {{"min", times.front()}, {"max", times.back()}, {"points", times.size()}}}};

  const SpectralGenerator full = generator(kernel);
  const double ab = cfg.alpha / cfg.beta;

  const TjConstant tj = tj_constant_detail(kernel, cfg.beta, cfg.R0);
  cert.c_tj = tj.value;
  cert.c_tail = 4.0 * tj.value;
  cert.c_tail_half_radius = 4.0 * std::pow(2.0, cfg.beta) * tj.value;

  // The chaining at time s = 2t needs the on-diagonal bound at t = s/2.
  std::vector<double> due_times = times;
  for (double t : times) due_times.push_back(t / 2.0);
  due_times = sorted_times(due_times);
  const ConditionEstimate due = due_constant(full, cfg, due_times);
  cert.c_due = due.constant;

  const double nash_rho = cfg.R0;
  const ConditionEstimate nash = nash_constant(kernel, nash_rho, cfg.nu(), cfg.k0(nash_rho),
                                               default_nash_family(kernel, nash_rho, 1, 16));
  cert.c_nash = nash.constant;

  const ConditionEstimate wue = wue_constant(full, cfg, times);
  cert.c_wue_measured = wue.constant;

  const auto derive = [&](double c_tail) {
    const double far = std::pow(2.0, cfg.beta + ab) *
                       std::pow(1.0 + std::pow(2.0, 1.0 / cfg.beta), cfg.beta) * cert.c_due * c_tail;
    const double near = std::pow(1.0 + std::pow(2.0, -1.0 / cfg.beta), cfg.beta) * cert.c_due;
    return std::max(far, near);
  };
  cert.c_wue_derived = derive(cert.c_tail);
  cert.c_wue_half_radius = derive(cert.c_tail_half_radius);

  // Tail estimates that the chaining relies on.
  TailReport tail = tail_probability_check(full, cfg, tj.value, due_times);
  for (auto& r : tail.records) cert.checks.push_back(std::move(r));

  const Vector& mu = space.masses();
  const std::size_t n = space.size();
  WorstCase split_check;
  WorstCase bound_check;
  std::size_t near_pairs = 0;
  for (double s : times) {
    const double t = s / 2.0;
    const Matrix pt = full.density(t);
    const Matrix ps = full.density(s);
    const double reach = std::pow(t, 1.0 / cfg.beta);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = x + 1; y < n; ++y) {
        const double d = space.distance(x, y);
        if (d < reach) {
          ++near_pairs;
          continue;
        }
        const double r = d / 2.0;
        const Ball bx = space.ball(x, r);
        const Ball by = space.ball(y, r);
        double split = 0.0;
        for (std::size_t z = 0; z < n; ++z) {
          const double term = pt(ix(x), ix(z)) * pt(ix(z), ix(y)) * mu[ix(z)];
          if (!bx.contains(z)) split += term;
          if (!by.contains(z)) split += term;
        }
        const double lhs = ps(ix(x), ix(y));
        Json w{{"t", t}, {"x", space.id(x)}, {"y", space.id(y)}, {"r", r}};
        split_check.offer(lhs, split, kSpectralTol * std::max(1.0, std::abs(ps(ix(x), ix(x)))), w);
        const double rhs = 2.0 * (cert.c_due / std::pow(t, ab)) *
                           (cert.c_tail * t / std::pow(std::min(r, cfg.R0), cfg.beta));
        bound_check.offer(split, rhs, kSpectralTol * std::max(1.0, split), w);
      }
    }
  }
  CheckRecord split_rec = split_check.record("chaining_split", Json::object(), "no far pairs");
  CheckRecord bound_rec = bound_check.record("chaining_bound",
                                             Json{{"C_DUE", cert.c_due}, {"C_tail", cert.c_tail}},
                                             "no far pairs");
  bound_rec.note = std::to_string(near_pairs) +
                   " (t, x, y) triples with d < t^{1/beta} follow from the on-diagonal bound directly";
  cert.checks.push_back(std::move(split_rec));
  cert.checks.push_back(std::move(bound_rec));

  CheckRecord cmp = make_check("wue_derived_vs_measured", cert.c_wue_measured, cert.c_wue_derived,
                               1e-9 * cert.c_wue_derived,
                               Json{{"C_DUE", cert.c_due}, {"C_tail", cert.c_tail}},
                               Json{{"measured_at", wue.witness}});
  cert.checks.push_back(std::move(cmp));

  cert.inputs["C_DUE_scan"] = to_json(due);
  cert.inputs["C_wUE_scan"] = to_json(wue);
  cert.inputs["C_N_scan"] = to_json(nash);
  cert.inputs["C_TJ_witness"] = Json{{"x", space.id(tj.point)}, {"radius", tj.radius}};

  cert.pass = all_passed(cert.checks) && std::isfinite(cert.c_wue_derived);
  return cert;
}

void require_pass(const WueCertificate& cert) {
  for (const CheckRecord& r : cert.checks) {
    if (!r.passed()) {
      throw Error(ErrorCode::ConditionFailure,
                  "step '" + r.name + "' failed: witness " + r.witness.dump());
    }
  }
  if (!std::isfinite(cert.c_wue_derived)) {
    throw Error(ErrorCode::ConditionFailure, "derived constant is not finite");
  }
}

}  // namespace ultraheat
