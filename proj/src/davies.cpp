#include "ultraheat/davies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint.hpp>

#include "ultraheat/bounds.hpp"
#include "ultraheat/error.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/grid.hpp"

namespace ultraheat {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

constexpr double kEps = std::numeric_limits<double>::epsilon();

Json ball_json(const UltrametricSpace& space, const Ball& b) {
  Json members = Json::array();
  for (std::size_t i = b.begin; i < b.end; ++i) members.push_back(space.id(i));
  return Json{{"members", members}, {"radius", b.radius}};
}

void require_nonnegative(const Vector& f) {
  for (Index i = 0; i < f.size(); ++i) {
    if (!(f[i] >= 0.0)) {
      throw Error(ErrorCode::NegativeInput, "function must be nonnegative",
                  {static_cast<std::size_t>(i)});
    }
  }
}

void require_admissible(const UltrametricSpace& space, const Ball& ball, double rho,
                        double lambda) {
  if (lambda != 0.0 && !rho_admissible(space, ball, rho)) {
    throw Error(ErrorCode::InvalidArgument,
                "rho = " + std::to_string(rho) + " exceeds every radius of the perturbation ball");
  }
}

Vector clamp_pow(const Vector& f, double q) {
  Vector out(f.size());
  for (Index i = 0; i < f.size(); ++i) out[i] = std::pow(std::max(f[i], 0.0), q);
  return out;
}

double max_ratio(const JumpKernel& kernel, double rho, const NashInput& nash,
                 const std::vector<Vector>& functions) {
  double best = 0.0;
  for (const Vector& u : functions) best = std::max(best, nash_ratio(kernel, rho, nash.nu, nash.K0, u));
  return best;
}

}  // namespace

bool rho_admissible(const UltrametricSpace& space, const Ball& ball, double rho) {
  return rho < space.outer_radius(ball);
}

CheckRecord perturbation_identity_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                        double lambda, const Vector& f, const Vector& g,
                                        double rel_tol) {
  const std::size_t n = kernel.size();
  const Vector psi = lambda * ball.indicator(n);
  const Vector fm = (-psi).array().exp().matrix().cwiseProduct(f);
  const Vector gp = psi.array().exp().matrix().cwiseProduct(g);
  const FormValue lhs = energy_terms(kernel, fm, gp, rho);
  const FormValue rhs = energy_terms(kernel, f, g, rho);
  const double scale = std::max({lhs.abs_sum, rhs.abs_sum, 1e-300});
  const double gap = std::abs(lhs.value - rhs.value) / scale;
  Json params{{"rho", rho}, {"lambda", lambda}, {"ball", ball_json(kernel.space(), ball)}};
  Json witness{{"perturbed", lhs.value}, {"plain", rhs.value}};
  if (lambda == 0.0 || rho_admissible(kernel.space(), ball, rho)) {
    return make_check("perturbation_identity", gap, 0.0, rel_tol, std::move(params),
                      std::move(witness));
  }
  CheckRecord r = make_vacuous("perturbation_identity_control",
                               "rho exceeds every radius of the ball; gap reported, not asserted",
                               std::move(params));
  r.lhs = gap;
  r.witness = std::move(witness);
  return r;
}

CheckRecord power_inequality_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                   double lambda, const Vector& f, double p, double rel_tol) {
  require_nonnegative(f);
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "p must be >= 1");
  require_admissible(kernel.space(), ball, rho, lambda);
  const std::size_t n = kernel.size();
  const Vector psi = lambda * ball.indicator(n);
  const Vector fp = clamp_pow(f, p);
  const Vector left = (-psi).array().exp().matrix().cwiseProduct(f);
  const Vector right = psi.array().exp().matrix().cwiseProduct(clamp_pow(f, 2.0 * p - 1.0));
  const FormValue small = energy_terms(kernel, fp, fp, rho);
  const FormValue big = energy_terms(kernel, left, right, rho);
  const double margin = rel_tol * std::max({small.abs_sum / p, big.abs_sum, 1e-300});
  return make_check("power_inequality", small.value / p, big.value, margin,
                    Json{{"rho", rho}, {"lambda", lambda}, {"p", p},
                         {"ball", ball_json(kernel.space(), ball)}});
}

CheckRecord scalar_power_lemma_check(const std::vector<double>& values,
                                     const std::vector<double>& exponents) {
  WorstCase worst;
  for (double p : exponents) {
    for (double a : values) {
      for (double b : values) {
        const double rhs = (a - b) * (std::pow(a, 2.0 * p - 1.0) - std::pow(b, 2.0 * p - 1.0));
        const double d = std::pow(a, p) - std::pow(b, p);
        const double lhs = d * d / p;
        worst.offer(lhs, rhs, 1e-12 * std::max({std::abs(lhs), std::abs(rhs), 1.0}),
                    Json{{"a", a}, {"b", b}, {"p", p}});
      }
    }
  }
  return worst.record("scalar_power_lemma",
                      Json{{"values", values.size()}, {"exponents", exponents.size()}});
}

LpDerivativeResult lp_derivative_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                       double lambda, const Vector& f, double p,
                                       const std::vector<double>& times, const NashInput& nash,
                                       double fd_tol) {
  if (times.size() < 4) {
    throw Error(ErrorCode::StepTooCoarse,
                "need at least 4 times for the finite-difference derivative, got " +
                    std::to_string(times.size()));
  }
  require_nonnegative(f);
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "p must be >= 1");
  require_admissible(kernel.space(), ball, rho, lambda);

  const SpectralGenerator gen = generator(kernel, rho);
  const Perturbation pert{ball, lambda};
  const Vector& mu = kernel.space().masses();
  const Vector psi = pert.psi(kernel.size());
  const Vector ep = psi.array().exp().matrix();
  const Vector em = (-psi).array().exp().matrix();
  const auto norm_at = [&](double s) { return lp_norm(perturbed_apply(gen, s, pert, f), mu, 2.0 * p); };

  LpDerivativeResult out;
  std::vector<double> n2p, np;
  std::vector<Vector> trajectory;
  for (double t : times) {
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "times must be > 0");
    const double h = 1e-4 * t;
    const Vector ft = perturbed_apply(gen, t, pert, f);
    const double N = lp_norm(ft, mu, 2.0 * p);
    const double d1 = (norm_at(t + h) - norm_at(t - h)) / (2.0 * h);
    const double d2 = (norm_at(t + h / 2) - norm_at(t - h / 2)) / h;
    const double dr = (4.0 * d2 - d1) / 3.0;
    const double err = std::abs(d1 - d2) / 3.0 + 8.0 * kEps * N / h;

    const Vector gt = ep.cwiseProduct(gen.matrix() * em.cwiseProduct(ft));
    double exact = 0.0;
    if (N > 0.0) {
      const Vector fn = ft / N;
      exact = N * clamp_pow(fn, 2.0 * p - 1.0).cwiseProduct(gt / N).cwiseProduct(mu).sum();
    }
    out.times.push_back(t);
    out.measured.push_back(dr);
    out.exact.push_back(exact);
    out.error.push_back(err);
    n2p.push_back(N);
    np.push_back(lp_norm(ft, mu, p));
    trajectory.push_back(clamp_pow(ft, p));
  }

  const auto evaluate = [&](double C, bool strict) {
    WorstCase worst;
    out.bound.clear();
    for (std::size_t i = 0; i < out.times.size(); ++i) {
      const double N = n2p[i];
      const double M = np[i];
      const double t1 = M > 0.0 ? -(N / (p * C)) * std::pow(N / M, 2.0 * p * nash.nu) : 0.0;
      const double t2 = nash.K0 * N / p;
      const double bound = t1 + t2;
      const double margin = fd_tol * (std::abs(out.measured[i]) + std::abs(t1) + std::abs(t2));
      if (strict && out.error[i] > margin) {
        throw Error(ErrorCode::StepTooCoarse,
                    "finite-difference error " + std::to_string(out.error[i]) + " exceeds margin " +
                        std::to_string(margin) + " at t = " + std::to_string(out.times[i]));
      }
      out.bound.push_back(bound);
      worst.offer(out.measured[i], bound, margin,
                  Json{{"t", out.times[i]}, {"exact_derivative", out.exact[i]},
                       {"fd_error", out.error[i]}});
    }
    return worst;
  };

  NashUsage usage{nash.C_N, "family"};
  WorstCase worst = evaluate(usage.C_N, true);
  if (worst.record("lp_derivative").status == Status::Fail && nash.enlarge) {
    const double c = std::max(usage.C_N, max_ratio(kernel, rho, nash, trajectory));
    if (c > usage.C_N) usage = {c, "enlarged"};
    worst = evaluate(usage.C_N, false);
  }
  if (worst.record("lp_derivative").status == Status::Fail && std::isfinite(nash.certified) &&
      nash.certified > usage.C_N) {
    usage = {nash.certified, "certified"};
    worst = evaluate(usage.C_N, false);
  }
  out.nash = usage;
  out.record = worst.record("lp_derivative",
                            Json{{"rho", rho},
                                 {"lambda", lambda},
                                 {"p", p},
                                 {"nu", nash.nu},
                                 {"K0", nash.K0},
                                 {"C_N", usage.C_N},
                                 {"C_N_source", usage.source},
                                 {"fd_tolerance", fd_tol},
                                 {"times", times.size()}});
  return out;
}

double moser_constant(double C_N, double nu) {
  return std::max(1.0, std::pow(C_N / nu, 1.0 / (2.0 * nu))) * std::pow(2.0, 1.0 / nu);
}

double IterationTrace::D(double t) const {
  return std::pow(C_N / nu, 1.0 / (2.0 * nu)) * std::exp(K0 * t);
}

Json IterationTrace::to_json() const {
  return Json{{"nu", nu},         {"K0", K0},     {"C_N", C_N}, {"C_N_source", nash_source},
              {"k_max", k_max},   {"times", times}, {"w", w},   {"argmax", argmax},
              {"norm_f", norm_f}, {"a", a},       {"C1", C1}};
}

MoserResult moser_iteration(const JumpKernel& kernel, double rho, const Ball& ball, double lambda,
                            const Vector& f, double t, const MoserConfig& cfg) {
  if (cfg.k_max < 1 || cfg.k_max > 12) {
    throw Error(ErrorCode::InvalidArgument,
                "k_max must lie in [1, 12], got " + std::to_string(cfg.k_max));
  }
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be > 0");
  require_nonnegative(f);
  require_admissible(kernel.space(), ball, rho, lambda);

  const SpectralGenerator gen = generator(kernel, rho);
  const Perturbation pert{ball, lambda};
  const Vector& mu = kernel.space().masses();
  const double nu = cfg.nash.nu;
  const int levels = cfg.k_max + 1;

  MoserResult out;
  IterationTrace& tr = out.trace;
  tr.nu = nu;
  tr.K0 = cfg.nash.K0;
  tr.k_max = cfg.k_max;
  tr.norm_f = lp_norm(f, mu, 2.0);
  tr.a = std::pow(2.0, 1.0 / (2.0 * nu));
  tr.times = {t / 4.0, t / 2.0, t};

  const auto weight_exp = [&](int k) {
    return (std::pow(2.0, k - 1) - 1.0) / (std::pow(2.0, k) * nu);
  };
  const auto base_grid = [&](double top, int decades) {
    return log_grid(top * std::pow(10.0, -decades), top, decades * cfg.points_per_decade + 1);
  };

  for (double tt : tr.times) {
    std::vector<double> wk(static_cast<std::size_t>(levels));
    std::vector<double> at(static_cast<std::size_t>(levels));
    for (int k = 1; k <= levels; ++k) {
      const double e = weight_exp(k);
      const double q = std::pow(2.0, k);
      const auto fn = [&](double s) {
        return std::pow(s, e) * lp_norm(perturbed_apply(gen, s, pert, f), mu, q);
      };
      int decades = cfg.decades;
      GridMax gm;
      for (int attempt = 0;; ++attempt) {
        const std::vector<double> grid = base_grid(tt, decades);
        gm = refine_max(fn, grid, cfg.refine_tol);
        if (k == 1 || gm.argmax > grid.front()) break;
        if (attempt == 4) {
          throw Error(ErrorCode::GridRefinementFailed,
                      "supremum of level " + std::to_string(k) + " sits at the smallest time");
        }
        decades += cfg.decades;
      }
      // Level 1 carries no time weight; its supremum includes s -> 0.
      if (k == 1 && tr.norm_f >= gm.value) gm = {tr.norm_f, 0.0, gm.refinements};
      wk[static_cast<std::size_t>(k - 1)] = gm.value;
      at[static_cast<std::size_t>(k - 1)] = gm.argmax;
    }
    tr.w.push_back(std::move(wk));
    tr.argmax.push_back(std::move(at));
  }

  const auto evaluate = [&](double C) {
    std::vector<CheckRecord> recs;
    const double C1 = moser_constant(C, nu);
    WorstCase w1, step, fin, mono;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      const double tt = tr.times[j];
      const auto& w = tr.w[j];
      w1.offer(w[0], std::exp(tr.K0 * tt) * tr.norm_f, 1e-12 * tr.norm_f, Json{{"t", tt}});
      const double logD = std::log(C / nu) / (2.0 * nu) + tr.K0 * tt;
      for (int k = 1; k <= cfg.k_max; ++k) {
        const double wk = w[static_cast<std::size_t>(k - 1)];
        const double wk1 = w[static_cast<std::size_t>(k)];
        const double factor = std::exp(std::ldexp(logD + k * std::log(tr.a), -k));
        step.offer(wk1, factor * wk, 1e-8 * factor * wk, Json{{"t", tt}, {"k", k}});
        const double final_bound = C1 * std::exp(2.0 * tr.K0 * tt) * tr.norm_f;
        fin.offer(wk1, final_bound, 1e-8 * final_bound, Json{{"t", tt}, {"k", k}});
      }
      if (j > 0) {
        for (int k = 1; k <= levels; ++k) {
          const double prev = tr.w[j - 1][static_cast<std::size_t>(k - 1)];
          const double cur = w[static_cast<std::size_t>(k - 1)];
          mono.offer(prev, cur, 1e-8 * std::max(cur, 1e-300),
                     Json{{"t_small", tr.times[j - 1]}, {"t_large", tt}, {"k", k}});
        }
      }
    }
    Json params{{"rho", rho}, {"lambda", lambda}, {"t", t}, {"k_max", cfg.k_max},
                {"nu", nu},   {"K0", tr.K0},      {"C_N", C}, {"C1", C1}};
    recs.push_back(w1.record("moser_w1", params));
    recs.push_back(step.record("moser_step", params));
    recs.push_back(fin.record("moser_final", params));
    recs.push_back(mono.record("moser_monotone", params));
    return recs;
  };

  NashUsage usage{cfg.nash.C_N, "family"};
  std::vector<CheckRecord> recs = evaluate(usage.C_N);
  const auto bounds_fail = [](const std::vector<CheckRecord>& rs) {
    return !rs[1].passed() || !rs[2].passed();
  };
  if (bounds_fail(recs) && cfg.nash.enlarge) {
    std::vector<Vector> extra;
    for (double s : base_grid(t, cfg.decades)) {
      const Vector fs = perturbed_apply(gen, s, pert, f);
      for (int k = 0; k <= cfg.k_max; ++k) extra.push_back(clamp_pow(fs, std::pow(2.0, k)));
    }
    const double c = std::max(usage.C_N, max_ratio(kernel, rho, cfg.nash, extra));
    if (c > usage.C_N) usage = {c, "enlarged"};
    recs = evaluate(usage.C_N);
  }
  if (bounds_fail(recs) && std::isfinite(cfg.nash.certified) && cfg.nash.certified > usage.C_N) {
    usage = {cfg.nash.certified, "certified"};
    recs = evaluate(usage.C_N);
  }
  for (auto& r : recs) r.params["C_N_source"] = usage.source;
  tr.C_N = usage.C_N;
  tr.nash_source = usage.source;
  tr.C1 = moser_constant(usage.C_N, nu);
  out.records = std::move(recs);
  return out;
}

std::vector<CheckRecord> sup_bound_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                         double lambda, const std::vector<double>& times,
                                         const NashInput& nash) {
  require_admissible(kernel.space(), ball, rho, lambda);
  const UltrametricSpace& space = kernel.space();
  const SpectralGenerator gen = generator(kernel, rho);
  const std::size_t n = space.size();
  const Vector& mu = space.masses();
  const Vector ind = ball.indicator(n);
  const double nu = nash.nu;

  std::vector<Matrix> q;
  for (double t : times) {
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "times must be > 0");
    q.push_back(gen.density(t));
  }

  const auto evaluate = [&](double C) {
    const double C1 = moser_constant(C, nu);
    const double logC = 2.0 * std::log(C1) + std::log(2.0) / nu;
    WorstCase op, ker;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double t = times[i];
      double norm = 0.0;
      std::size_t arg = 0;
      for (std::size_t x = 0; x < n; ++x) {
        double s = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          const double v = q[i](ix(x), ix(y)) * std::exp(lambda * (ind[ix(x)] - ind[ix(y)]));
          s += v * v * mu[ix(y)];
        }
        if (std::sqrt(s) > norm) {
          norm = std::sqrt(s);
          arg = x;
        }
      }
      const double log_rhs = std::log(C1) - std::log(t) / (2.0 * nu) + 2.0 * nash.K0 * t;
      const double rhs = std::exp(std::min(log_rhs, 700.0));
      op.offer(norm, rhs, 1e-10 * rhs, Json{{"t", t}, {"x", space.id(arg)}});
      for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
          const double v = q[i](ix(x), ix(y));
          if (v <= 0.0) continue;
          const double lr = logC - std::log(t) / nu + 2.0 * nash.K0 * t +
                            lambda * (ind[ix(y)] - ind[ix(x)]);
          const double ratio = std::exp(std::min(std::log(v) - lr, 700.0));
          ker.offer(ratio, 1.0, 1e-10, Json{{"t", t}, {"x", space.id(x)}, {"y", space.id(y)}});
        }
      }
    }
    Json params{{"rho", rho}, {"lambda", lambda}, {"nu", nu}, {"K0", nash.K0},
                {"C_N", C},   {"C1", C1}};
    return std::vector<CheckRecord>{op.record("sup_operator_norm", params),
                                    ker.record("sup_kernel_bound", params)};
  };

  NashUsage usage{nash.C_N, "family"};
  std::vector<CheckRecord> recs = evaluate(usage.C_N);
  const auto fails = [](const std::vector<CheckRecord>& rs) { return !all_passed(rs); };
  if (fails(recs) && std::isfinite(nash.certified) && nash.certified > usage.C_N) {
    usage = {nash.certified, "certified"};
    recs = evaluate(usage.C_N);
  }
  for (auto& r : recs) r.params["C_N_source"] = usage.source;
  return recs;
}

std::vector<CheckRecord> vanishing_check(const JumpKernel& kernel, const std::vector<double>& times,
                                         double dense_tol) {
  const UltrametricSpace& space = kernel.space();
  const std::size_t n = space.size();
  std::vector<CheckRecord> out;
  for (double rho : space.levels()) {
    Json params{{"rho", rho}, {"times", times.size()}};
    if (rho >= space.diam()) {
      out.push_back(make_vacuous("vanishing_exact", "no pair is farther apart than rho", params));
      out.push_back(make_vacuous("vanishing_dense", "no pair is farther apart than rho", params));
      continue;
    }
    const SpectralGenerator gen = generator(kernel, rho);
    const Matrix d = space.distance_matrix();
    double exact_max = 0.0;
    double dense_max = 0.0;
    Json exact_w = Json::object();
    Json dense_w = Json::object();
    for (double t : times) {
      const Matrix q = gen.density(t);
      const Matrix qd = density_dense_spectral(gen, t);
      const double scale = std::max(qd.cwiseAbs().maxCoeff(), 1e-300);
      for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
          if (d(ix(x), ix(y)) <= rho) continue;
          const double a = std::abs(q(ix(x), ix(y)));
          if (a > exact_max || exact_w.empty()) {
            exact_max = std::max(exact_max, a);
            exact_w = Json{{"t", t}, {"x", space.id(x)}, {"y", space.id(y)}};
          }
          const double b = std::abs(qd(ix(x), ix(y))) / scale;
          if (b > dense_max || dense_w.empty()) {
            dense_max = std::max(dense_max, b);
            dense_w = Json{{"t", t}, {"x", space.id(x)}, {"y", space.id(y)}};
          }
        }
      }
    }
    out.push_back(make_check("vanishing_exact", exact_max, 0.0, 0.0, params, exact_w));
    out.push_back(make_check("vanishing_dense", dense_max, dense_tol, 0.0, params, dense_w));
  }
  return out;
}

void OdeComparisonParams::validate() const {
  if (!(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "b must be > 0");
  if (!(p > 1.0)) throw Error(ErrorCode::InvalidArgument, "p must be > 1");
  if (!(theta > 0.0)) throw Error(ErrorCode::InvalidArgument, "theta must be > 0");
  if (!(K > 0.0)) throw Error(ErrorCode::InvalidArgument, "K must be > 0");
  if (!(a >= 1.0)) throw Error(ErrorCode::InvalidArgument, "a must be >= 1");
  if (!(u0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "u0 must be > 0");
  if (!w) throw Error(ErrorCode::InvalidArgument, "w must be set");
}

double OdeComparisonParams::bound(double t) const {
  return std::pow(2.0 * std::pow(p, a) / (theta * b), 1.0 / theta) *
         std::pow(t, -(p - 1.0) / theta) * std::exp(K * std::pow(p, -a) * t) * w(t);
}

OdeComparisonResult ode_comparison_check(const OdeComparisonParams& prm, double t_max, double tol,
                                         int samples) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  prm.validate();
  if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be > 0");

  const bool use_tau = prm.p < 2.0;
  const double pm1 = prm.p - 1.0;
  const auto to_t = [&](double s) { return use_tau ? std::pow(pm1 * s, 1.0 / pm1) : s; };
  const auto to_s = [&](double t) { return use_tau ? std::pow(t, pm1) / pm1 : t; };

  const auto w_at = [&](double t) {
    const double v = prm.w(t);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::IntegratorFailure, "w must stay positive and finite");
    }
    return v;
  };
  const auto rhs = [&](const State& x, State& dx, double s) {
    const double u = x[0];
    if (!std::isfinite(u)) throw Error(ErrorCode::IntegratorFailure, "solution left the finite range");
    const double t = to_t(s);
    const double up = std::max(u, 0.0);
    const double decay = prm.b * std::pow(w_at(t), -prm.theta) * std::pow(up, 1.0 + prm.theta);
    if (use_tau) {
      // du/dtau = t^{2-p} du/dt
      dx[0] = -decay + prm.K * u * std::pow(t, 2.0 - prm.p);
    } else {
      dx[0] = -std::pow(t, prm.p - 2.0) * decay + prm.K * u;
    }
  };

  std::vector<double> obs_t = log_grid(1e-6 * t_max, t_max, samples);
  std::vector<double> obs_s{0.0};
  for (double t : obs_t) obs_s.push_back(to_s(t));

  OdeComparisonResult out;
  State x{prm.u0};
  const double step_tol = std::min(tol, 1e-10);
  auto stepper = odeint::make_dense_output(step_tol, step_tol, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(
        stepper, rhs, x, obs_s.begin(), obs_s.end(), 1e-9 * std::max(obs_s.back(), 1e-300),
        [&](const State& st, double s) {
          if (s <= 0.0) return;
          out.times.push_back(to_t(s));
          out.u.push_back(st[0]);
        },
        odeint::max_step_checker(1000000));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IntegratorFailure, e.what());
  }

  WorstCase worst;
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    const double t = out.times[i];
    const double u = out.u[i];
    if (!std::isfinite(u)) throw Error(ErrorCode::IntegratorFailure, "solution is not finite");
    const double bd = prm.bound(t);
    out.bound.push_back(bd);
    worst.offer(u, bd, tol * std::max(1.0, std::abs(u)), Json{{"t", t}});
  }
  out.record = worst.record("ode_comparison",
                            Json{{"b", prm.b},
                                 {"p", prm.p},
                                 {"theta", prm.theta},
                                 {"K", prm.K},
                                 {"a", prm.a},
                                 {"w", prm.w_label},
                                 {"u0", prm.u0},
                                 {"t_max", t_max}});
  return out;
}

}  // namespace ultraheat
