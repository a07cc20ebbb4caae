#include "ultraheat/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <thread>

#include "ultraheat/bounds.hpp"
#include "ultraheat/davies.hpp"
#include "ultraheat/error.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/grid.hpp"
#include "ultraheat/io.hpp"
#include "ultraheat/random.hpp"
#include "ultraheat/semigroup.hpp"

namespace ultraheat {

namespace {

using Index = Eigen::Index;
namespace fs = std::filesystem;

Index ix(std::size_t i) { return static_cast<Index>(i); }

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

double get_number(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_error(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

int get_int(const Json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) config_error(std::string("'") + key + "' must be an integer");
  return j[key].get<int>();
}

void absorb(WorstCase& w, const CheckRecord& r) {
  if (r.status == Status::Vacuous) return;
  Json wit = r.witness;
  wit["params"] = r.params;
  w.offer(r.lhs, r.rhs, r.margin, std::move(wit));
}

/// What a task contributes to the report.
struct TaskOutput {
  std::vector<CheckRecord> records;
  Json constants = Json::object();
  std::optional<Json> certificate{};
};

Vector random_positive(Rng& rng, std::size_t n) { return rng.uniform_vector(ix(n), 0.0, 1.0); }

Vector normalized(const Vector& f, const Vector& mu) {
  const double n = lp_norm(f, mu, 2.0);
  return n > 0.0 ? Vector(f / n) : f;
}

/// Smallest ball of more than one point around point 0; rho equal to its
/// radius keeps the perturbation block-constant.
struct DaviesSetup {
  Ball ball;
  double rho = 0.0;
  NashInput nash;
};

DaviesSetup davies_setup(const RunConfig& cfg) {
  const UltrametricSpace& space = *cfg.space;
  DaviesSetup s;
  s.ball = space.ball_of(space.node(space.leaf(0)).parent);
  s.rho = s.ball.radius;
  s.nash.nu = cfg.exponents.nu();
  s.nash.K0 = cfg.exponents.k0(s.rho);
  const ConditionEstimate est = nash_constant(*cfg.kernel, s.rho, s.nash.nu, s.nash.K0,
                                              default_nash_family(*cfg.kernel, s.rho, cfg.seed, 16));
  s.nash.C_N = est.constant;
  s.nash.certified = est.certified_upper.value_or(std::numeric_limits<double>::infinity());
  return s;
}

std::vector<double> condition_times(const RunConfig& cfg) {
  const double top = std::pow(cfg.exponents.R0, cfg.exponents.beta);
  std::vector<double> out;
  for (double t : cfg.grid.values()) {
    if (t <= top * (1.0 + 1e-12)) out.push_back(std::min(t, top));
  }
  if (out.empty()) out = log_grid(1e-3 * top, top, std::max(cfg.grid.points, 2));
  return out;
}

Json ball_label(const UltrametricSpace& space, const Ball& b) {
  return Json{{"first", space.id(b.begin)}, {"size", b.size()}, {"radius", b.radius}};
}

// --- individual checks -----------------------------------------------------

TaskOutput task_ultrametric(const RunConfig& cfg) {
  const UltrametricReport rep = validate_ultrametric(*cfg.space);
  CheckRecord r = make_check("ultrametric", rep.ok ? 0.0 : 1.0, 0.0, 0.0,
                             Json{{"points", cfg.space->size()}});
  Json w = Json::array();
  for (std::size_t i : rep.witness) w.push_back(cfg.space->id(i));
  r.witness = Json{{"triple", w}, {"message", rep.message}};
  return {{r}};
}

TaskOutput task_form(const RunConfig& cfg, Rng& rng) {
  const JumpKernel& k = *cfg.kernel;
  const UltrametricSpace& space = *cfg.space;
  const std::size_t n = space.size();
  WorstCase ind;
  for (const Ball& b : space.balls()) {
    const IndicatorEnergyReport r = indicator_energy_check(k, b, cfg.tol.identity);
    ind.offer(r.rel_gap, 0.0, cfg.tol.identity,
              Json{{"ball", ball_label(space, b)}, {"energy", r.energy}, {"twice_jump", r.twice_jump}});
  }
  WorstCase mono, clamp, zero;
  for (int s = 0; s < std::max(cfg.samples, 1) * 10; ++s) {
    const Vector f = rng.normal_vector(ix(n));
    double prev = 0.0;
    std::vector<double> radii = space.levels();
    radii.push_back(space.diam() * 2.0);
    for (double rho : radii) {
      const FormValue e = energy_terms(k, f, f, rho);
      mono.offer(prev, e.value, cfg.tol.identity * std::max(e.abs_sum, 1e-300),
                 Json{{"sample", s}, {"rho", rho}});
      prev = e.value;
    }
    const Vector c = f.cwiseMax(0.0).cwiseMin(1.0);
    const FormValue ef = energy_terms(k, f, f);
    clamp.offer(energy(k, c), ef.value, cfg.tol.identity * std::max(ef.abs_sum, 1e-300),
                Json{{"sample", s}});
    const FormValue ez = energy_terms(k, f, Vector::Constant(ix(n), rng.normal()));
    zero.offer(std::abs(ez.value), 0.0, cfg.tol.identity * std::max(ez.abs_sum, 1e-300),
               Json{{"sample", s}});
  }
  return {{ind.record("indicator_energy"), mono.record("energy_trunc_monotone"),
           clamp.record("energy_clamp"), zero.record("energy_constant")}};
}

TaskOutput task_semigroup(const RunConfig& cfg) {
  const std::vector<double> times = cfg.grid.values();
  TaskOutput out;
  SelfCheckTolerances tol;
  tol.symmetry = tol.positivity = tol.mass = tol.duality = cfg.tol.identity;
  tol.chapman_kolmogorov = tol.expm = cfg.tol.spectral;
  std::vector<std::optional<double>> radii{std::nullopt};
  for (double r : cfg.space->levels()) {
    if (r < cfg.space->diam()) radii.emplace_back(r);
  }
  std::map<std::string, WorstCase> merged;
  std::vector<std::string> order;
  for (const auto& rho : radii) {
    const SpectralGenerator gen = generator(*cfg.kernel, rho);
    for (CheckRecord& r : semigroup_selfcheck(gen, *cfg.kernel, times, cfg.seed, tol)) {
      const std::string name = "semigroup_" + r.name;
      if (!merged.count(name)) order.push_back(name);
      r.params["rho"] = rho ? Json(*rho) : Json("none");
      if (r.status == Status::Vacuous) {
        merged[name];
        continue;
      }
      absorb(merged[name], r);
    }
  }
  for (const std::string& name : order) {
    out.records.push_back(merged[name].record(name, Json{{"times", times.size()}, {"truncations", radii.size()}},
                                              "not applicable"));
  }
  return out;
}

TaskOutput task_vanishing(const RunConfig& cfg) {
  TaskOutput out;
  out.records = vanishing_check(*cfg.kernel, cfg.grid.values(), 1e-13);
  return out;
}

TaskOutput task_perturbation(const RunConfig& cfg, Rng& rng) {
  const UltrametricSpace& space = *cfg.space;
  const std::size_t n = space.size();
  WorstCase asserted;
  std::size_t controls = 0;
  std::size_t nonzero = 0;
  for (const Ball& b : space.balls()) {
    for (double rho : space.levels()) {
      for (double lambda : cfg.lambdas) {
        for (int s = 0; s < cfg.samples; ++s) {
          const Vector f = rng.normal_vector(ix(n));
          const Vector g = rng.normal_vector(ix(n));
          const CheckRecord r = perturbation_identity_check(*cfg.kernel, rho, b, lambda, f, g,
                                                            cfg.tol.identity);
          if (r.status == Status::Vacuous) {
            ++controls;
            if (r.lhs > cfg.tol.identity) ++nonzero;
          } else {
            absorb(asserted, r);
          }
        }
      }
    }
  }
  TaskOutput out;
  out.records.push_back(asserted.record("perturbation_identity"));
  CheckRecord ctrl = make_vacuous("perturbation_identity_control",
                                  "rho above every radius of the ball; the identity is not expected");
  ctrl.lhs = controls ? static_cast<double>(nonzero) / static_cast<double>(controls) : 0.0;
  ctrl.witness = Json{{"cases", controls}, {"nonzero_gap", nonzero}};
  out.records.push_back(ctrl);
  return out;
}

TaskOutput task_power(const RunConfig& cfg, Rng& rng) {
  const UltrametricSpace& space = *cfg.space;
  const std::size_t n = space.size();
  const std::vector<double> ps{1.0, 1.5, 2.0, 4.0, 8.0};
  TaskOutput out;
  WorstCase equality;
  for (double p : ps) {
    WorstCase worst;
    for (const Ball& b : space.balls()) {
      for (double rho : space.levels()) {
        if (!rho_admissible(space, b, rho)) continue;
        for (double lambda : {0.0, 5.0}) {
          for (int s = 0; s < cfg.samples; ++s) {
            const Vector f = random_positive(rng, n);
            const CheckRecord r = power_inequality_check(*cfg.kernel, rho, b, lambda, f, p,
                                                         cfg.tol.identity);
            absorb(worst, r);
            if (p == 1.0) {
              equality.offer(std::abs(r.lhs - r.rhs), 0.0, r.margin, r.params);
            }
          }
        }
      }
    }
    out.records.push_back(worst.record("power_inequality", Json{{"p", p}}));
  }
  out.records.push_back(equality.record("power_equality_p1"));
  out.records.push_back(scalar_power_lemma_check({0.0, 0.25, 0.5, 1.0, 2.0, 3.0},
                                                 {1.0, 1.5, 2.0, 4.0, 8.0}));
  return out;
}

TaskOutput task_lp_derivative(const RunConfig& cfg, Rng& rng) {
  const DaviesSetup s = davies_setup(cfg);
  const Vector& mu = cfg.space->masses();
  const Vector f = normalized(random_positive(rng, cfg.space->size()), mu);
  TaskOutput out;
  for (double p : {1.0, 2.0, 4.0}) {
    for (double lambda : {0.0, 2.0}) {
      out.records.push_back(lp_derivative_check(*cfg.kernel, s.rho, s.ball, lambda, f, p,
                                                cfg.grid.values(), s.nash,
                                                cfg.tol.finite_difference)
                                .record);
    }
  }
  return out;
}

TaskOutput task_moser(const RunConfig& cfg) {
  const DaviesSetup s = davies_setup(cfg);
  const Vector& mu = cfg.space->masses();
  Vector f = Vector::Zero(ix(cfg.space->size()));
  f[0] = 1.0;
  f = normalized(f, mu);
  MoserConfig mc;
  mc.nash = s.nash;
  mc.k_max = cfg.moser_k_max;
  const double t = cfg.moser_t.value_or(cfg.grid.values().back());
  MoserResult res = moser_iteration(*cfg.kernel, s.rho, s.ball, 4.0, f, t, mc);
  TaskOutput out;
  out.records = std::move(res.records);
  out.constants["moser_trace"] = res.trace.to_json();
  return out;
}

TaskOutput task_supbound(const RunConfig& cfg) {
  const DaviesSetup s = davies_setup(cfg);
  TaskOutput out;
  for (double lambda : {0.0, 4.0}) {
    for (CheckRecord& r : sup_bound_check(*cfg.kernel, s.rho, s.ball, lambda, cfg.grid.values(), s.nash)) {
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

TaskOutput task_ode(const RunConfig& cfg, Rng& rng) {
  WorstCase worst;
  for (int i = 0; i < cfg.ode_samples; ++i) {
    OdeComparisonParams p;
    p.b = rng.uniform(0.1, 10.0);
    p.p = 1.0 + rng.uniform(0.01, 3.0);
    p.theta = rng.uniform(0.05, 3.0);
    p.K = rng.uniform(0.05, 5.0);
    p.a = rng.uniform(1.0, 3.0);
    if (i % 2 == 1) {
      p.w = [](double t) { return 1.0 + t; };
      p.w_label = "1+t";
    }
    p.u0 = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
    absorb(worst, ode_comparison_check(p, 2.0, 1e-8).record);
  }
  return {{worst.record("ode_comparison", Json{{"samples", cfg.ode_samples}})}};
}

TaskOutput task_nash(const RunConfig& cfg) {
  const double rho = cfg.exponents.R0;
  const double nu = cfg.exponents.nu();
  const double K0 = cfg.exponents.k0(rho);
  const NashFamily fam = default_nash_family(*cfg.kernel, rho, cfg.seed, 32);
  const ConditionEstimate e = nash_constant(*cfg.kernel, rho, nu, K0, fam);
  TaskOutput out;
  out.constants["C_N"] = to_json(e);
  out.records.push_back(make_check("nash_family_below_certified", e.constant, *e.certified_upper,
                                   cfg.tol.identity * *e.certified_upper,
                                   Json{{"rho", rho}, {"nu", nu}, {"K0", K0}}, e.witness));
  WorstCase homog;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const double r1 = nash_ratio(*cfg.kernel, rho, nu, K0, fam.functions[i]);
    const double r2 = nash_ratio(*cfg.kernel, rho, nu, K0, 2.0 * fam.functions[i]);
    homog.offer(std::abs(r1 - r2), 0.0, 1e-12 * std::max(r1, 1e-300), Json{{"function", fam.labels[i]}});
  }
  out.records.push_back(homog.record("nash_homogeneity"));
  return out;
}

TaskOutput task_due(const RunConfig& cfg) {
  const std::vector<double> times = condition_times(cfg);
  const SpectralGenerator gen = generator(*cfg.kernel);
  const ConditionEstimate plain = due_constant(gen, cfg.exponents, times, false);
  const ConditionEstimate refined = due_constant(gen, cfg.exponents, times, true);
  TaskOutput out;
  out.constants["C_DUE"] = to_json(refined);
  out.records.push_back(make_check("due_refinement", plain.constant, refined.constant,
                                   1e-9 * refined.constant, Json::object(),
                                   Json{{"grid_constant", plain.constant}}));
  return out;
}

TaskOutput task_wue(const RunConfig& cfg) {
  const std::vector<double> times = condition_times(cfg);
  const SpectralGenerator gen = generator(*cfg.kernel);
  const ConditionEstimate due = due_constant(gen, cfg.exponents, times, true);
  const ConditionEstimate wue = wue_constant(gen, cfg.exponents, times, true);
  TaskOutput out;
  out.constants["C_wUE"] = to_json(wue);
  out.records.push_back(make_check("wue_at_least_due", due.constant, wue.constant,
                                   1e-9 * wue.constant));
  return out;
}

TaskOutput task_energy_diff(const RunConfig& cfg) {
  TaskOutput out;
  std::vector<double> radii = cfg.space->levels();
  for (double rho : radii) {
    const NashFamily fam = default_nash_family(*cfg.kernel, rho, cfg.seed, 100);
    out.records.push_back(energy_difference_check(*cfg.kernel, rho, fam));
  }
  return out;
}

TaskOutput task_p8(const RunConfig& cfg, Rng& rng) {
  const UltrametricSpace& space = *cfg.space;
  const std::size_t n = space.size();
  const std::vector<double> times = cfg.grid.values();
  TaskOutput out;
  double c_star = 0.0;
  WorstCase worst;
  for (double rho : space.levels()) {
    std::vector<Vector> fs{random_positive(rng, n), rng.normal_vector(ix(n)),
                           Vector::Ones(ix(n)) - space.ball(0, rho).indicator(n)};
    std::vector<std::optional<std::vector<std::size_t>>> domains{std::nullopt};
    // A random union of balls as the open set.
    std::vector<std::size_t> omega;
    for (const Ball& b : space.partition(rho * rng.uniform(0.0, 1.0))) {
      if (rng.uniform() < 0.6) {
        for (std::size_t x = b.begin; x < b.end; ++x) omega.push_back(x);
      }
    }
    if (!omega.empty()) domains.emplace_back(omega);
    for (const auto& dom : domains) {
      for (const Vector& f : fs) {
        const TruncationComparison tc = truncation_comparison_check(*cfg.kernel, rho, dom, f, times, 4.0);
        absorb(worst, tc.record);
        c_star = std::max(c_star, tc.empirical_constant);
      }
    }
  }
  out.records.push_back(worst.record("truncation_comparison", Json{{"c", 4.0}}));
  out.constants["c_P8_empirical"] = c_star;
  return out;
}

TaskOutput task_tail(const RunConfig& cfg) {
  const TjConstant tj = tj_constant_detail(*cfg.kernel, cfg.exponents.beta, cfg.exponents.R0);
  const TailReport rep = tail_probability_check(*cfg.kernel, cfg.exponents, tj.value, cfg.grid.values());
  WorstCase bound, mono;
  for (const CheckRecord& r : rep.records) absorb(r.name == "tail_bound" ? bound : mono, r);
  TaskOutput out;
  out.constants["C_TJ"] = Json{{"constant", tj.value}, {"x", cfg.space->id(tj.point)}, {"radius", tj.radius}};
  out.constants["C_tail"] = 4.0 * tj.value;
  out.constants["C_tail_empirical"] = rep.empirical_constant;
  out.records.push_back(bound.record("tail_bound", Json{{"C_tail", 4.0 * tj.value}}));
  out.records.push_back(mono.record("tail_monotone", Json::object(), "single point space"));
  return out;
}

TaskOutput task_theorem1(const RunConfig& cfg) {
  WueCertificate cert = theorem1_pipeline(*cfg.kernel, cfg.exponents, condition_times(cfg));
  cert.inputs["space"] = cfg.space_json;
  cert.inputs["kernel"] = cfg.kernel_json;
  TaskOutput out;
  // per-time records collapse to their worst instance
  std::map<std::string, WorstCase> merged;
  std::vector<std::string> order;
  for (const CheckRecord& r : cert.checks) {
    const std::string name = "theorem1_" + r.name;
    if (!merged.count(name)) order.push_back(name);
    absorb(merged[name], r);
  }
  for (const std::string& name : order) {
    out.records.push_back(merged[name].record(name, Json::object(), "no instance applies"));
  }
  out.certificate = cert.to_json();
  out.constants["C_wUE_derived"] = cert.c_wue_derived;
  out.constants["C_wUE_measured"] = cert.c_wue_measured;
  return out;
}

using Task = std::function<TaskOutput(const RunConfig&, Rng&)>;

Task lookup(const std::string& name) {
  const auto plain = [](TaskOutput (*f)(const RunConfig&)) {
    return [f](const RunConfig& c, Rng&) { return f(c); };
  };
  if (name == "ultrametric") return plain(task_ultrametric);
  if (name == "form") return task_form;
  if (name == "semigroup") return plain(task_semigroup);
  if (name == "vanishing") return plain(task_vanishing);
  if (name == "perturbation") return task_perturbation;
  if (name == "power") return task_power;
  if (name == "lp_derivative") return task_lp_derivative;
  if (name == "moser") return plain(task_moser);
  if (name == "supbound") return plain(task_supbound);
  if (name == "ode") return task_ode;
  if (name == "nash") return plain(task_nash);
  if (name == "due") return plain(task_due);
  if (name == "wue") return plain(task_wue);
  if (name == "energy_diff") return plain(task_energy_diff);
  if (name == "p8") return task_p8;
  if (name == "tail") return plain(task_tail);
  if (name == "theorem1") return plain(task_theorem1);
  config_error("unknown check '" + name + "'");
}

}  // namespace

std::vector<double> TimeGrid::values() const {
  if (scale == "linear") return linear_grid(min, max, points);
  return log_grid(min, max, points);
}

const std::vector<std::string>& all_checks() {
  static const std::vector<std::string> names{
      "ultrametric", "form", "semigroup", "vanishing", "perturbation", "power",
      "lp_derivative", "moser", "supbound", "ode", "nash", "due",
      "wue", "energy_diff", "p8", "tail", "theorem1"};
  return names;
}

int thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ULTRAHEAT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = n > 0 ? std::min(n, cap) : cap;
  }
  return std::max(n, 1);
}

RunConfig parse_config(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) config_error("config must be a JSON object");
  RunConfig cfg;

  if (!j.contains("space")) config_error("config needs a 'space' entry");
  const Json& sj = j["space"];
  UltrametricSpace space = [&]() {
    if (sj.contains("file")) {
      fs::path p = sj["file"].get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      return load_space(p);
    }
    if (sj.contains("distance_csv")) {
      fs::path p = sj["distance_csv"].get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      std::vector<double> masses;
      if (sj.contains("masses")) masses = sj["masses"].get<std::vector<double>>();
      return load_distance_csv(p, masses);
    }
    if (sj.contains("generator")) {
      const Json& g = sj["generator"];
      GeneratorParams gp;
      gp.kind = g.value("kind", gp.kind);
      gp.depth = get_int(g, "depth", gp.depth);
      gp.branching = get_int(g, "branching", gp.branching);
      gp.q = get_number(g, "q", gp.q);
      gp.mass = g.value("mass", gp.mass);
      gp.seed = static_cast<std::uint64_t>(get_int(g, "seed", 0));
      gp.max_points = get_int(g, "max_points", gp.max_points);
      return build_tree(generate_space(gp));
    }
    return build_tree(space_spec_from_json(sj));
  }();
  cfg.space = std::make_shared<const UltrametricSpace>(std::move(space));
  cfg.space_json = to_json(to_spec(*cfg.space));

  if (!j.contains("kernel")) config_error("config needs a 'kernel' entry");
  cfg.kernel_json = j["kernel"];
  cfg.kernel = std::make_shared<const JumpKernel>(kernel_from_json(cfg.space, j["kernel"], base_dir));

  const Json ex = j.value("exponents", Json::object());
  cfg.exponents.alpha = get_number(ex, "alpha", 1.0);
  cfg.exponents.beta = get_number(ex, "beta", 1.0);
  cfg.exponents.R0 = get_number(ex, "R0", cfg.space->diam());
  if (cfg.space->size() < 2) config_error("the space needs at least two points");
  cfg.exponents.validate(*cfg.space);

  const Json tg = j.value("time_grid", Json::object());
  cfg.grid.min = get_number(tg, "min", cfg.grid.min);
  cfg.grid.max = get_number(tg, "max", cfg.grid.max);
  cfg.grid.points = get_int(tg, "points", cfg.grid.points);
  cfg.grid.scale = tg.value("scale", cfg.grid.scale);
  if (!(cfg.grid.min > 0.0)) config_error("time grid min must be > 0");
  if (!(cfg.grid.max >= cfg.grid.min)) config_error("time grid max must be >= min");
  if (cfg.grid.points < 1) config_error("time grid needs at least one point");
  if (cfg.grid.scale != "log" && cfg.grid.scale != "linear") {
    config_error("time grid scale must be 'log' or 'linear'");
  }

  if (j.contains("checks")) {
    if (!j["checks"].is_array()) config_error("'checks' must be an array");
    for (const auto& c : j["checks"]) cfg.checks.push_back(c.get<std::string>());
    if (cfg.checks.empty()) config_error("checks must not be empty");
  } else {
    cfg.checks = all_checks();
  }
  for (const auto& c : cfg.checks) lookup(c);

  const Json tol = j.value("tolerances", Json::object());
  cfg.tol.identity = get_number(tol, "identity", cfg.tol.identity);
  cfg.tol.spectral = get_number(tol, "spectral", cfg.tol.spectral);
  cfg.tol.finite_difference = get_number(tol, "finite_difference", cfg.tol.finite_difference);

  if (j.contains("output")) {
    fs::path p = j["output"].get<std::string>();
    cfg.output = p.is_relative() ? base_dir / p : p;
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_error("'seed' must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("lambdas")) cfg.lambdas = j["lambdas"].get<std::vector<double>>();
  for (double l : cfg.lambdas) {
    if (std::abs(l) > 50.0) config_error("lambda values must lie in [-50, 50]");
  }
  cfg.samples = get_int(j, "samples", cfg.samples);
  cfg.ode_samples = get_int(j, "ode_samples", cfg.ode_samples);
  if (j.contains("moser")) {
    cfg.moser_k_max = get_int(j["moser"], "k_max", cfg.moser_k_max);
    if (j["moser"].contains("t")) cfg.moser_t = get_number(j["moser"], "t", 1.0);
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

RunResult run_checks(const RunConfig& cfg) {
  const std::size_t count = cfg.checks.size();
  std::vector<TaskOutput> outputs(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        Rng rng(cfg.seed * 1000003ULL + i * 7919ULL +
                std::hash<std::string>{}(cfg.checks[i]) % 1000ULL);
        outputs[i] = lookup(cfg.checks[i])(cfg, rng);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(thread_count(), static_cast<int>(count));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunResult res;
  Json constants = Json::object();
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) {
      CheckRecord r;
      r.name = cfg.checks[i] + "_error";
      r.status = Status::Fail;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        r.note = e.what();
      }
      res.records.push_back(std::move(r));
      continue;
    }
    for (auto& r : outputs[i].records) res.records.push_back(std::move(r));
    for (auto& [k, v] : outputs[i].constants.items()) constants[k] = v;
    if (outputs[i].certificate) res.certificate = outputs[i].certificate;
  }

  const CheckSummary sum = summarize(res.records);
  Json checks = Json::array();
  for (const auto& r : res.records) checks.push_back(to_json(r));
  res.report = Json{
      {"environment", {{"tool", "ultraheat"}, {"version", kVersion}, {"seed", cfg.seed}}},
      {"inputs",
       {{"points", cfg.space->size()},
        {"diam", cfg.space->diam()},
        {"alpha", cfg.exponents.alpha},
        {"beta", cfg.exponents.beta},
        {"R0", cfg.exponents.R0},
        {"time_grid",
         {{"min", cfg.grid.min}, {"max", cfg.grid.max}, {"points", cfg.grid.points}, {"scale", cfg.grid.scale}}},
        {"checks", cfg.checks}}},
      {"constants", constants},
      {"summary", {{"pass", sum.pass}, {"fail", sum.fail}, {"vacuous", sum.vacuous}}},
      {"checks", checks}};
  res.exit_code = sum.fail > 0 ? 1 : 0;
  return res;
}

std::vector<fs::path> write_curves(const RunConfig& cfg) {
  const UltrametricSpace& space = *cfg.space;
  const std::vector<double> times = cfg.grid.values();
  const fs::path dir = cfg.output / "curves";
  std::vector<fs::path> written;

  const SpectralGenerator full = generator(*cfg.kernel);
  const HeatKernelTable pt = heat_kernel_table(full, times);
  write_text_file(dir / "heat_kernel.csv", heat_kernel_csv(space, pt));
  written.push_back(dir / "heat_kernel.csv");

  for (double rho : space.levels()) {
    if (rho >= space.diam()) continue;
    const HeatKernelTable qt = heat_kernel_table(generator(*cfg.kernel, rho), times);
    const fs::path p = dir / ("truncated_rho_" + format_double(rho) + ".csv");
    write_text_file(p, heat_kernel_csv(space, qt));
    written.push_back(p);
  }

  const Matrix d = space.distance_matrix();
  const double ab = cfg.exponents.alpha / cfg.exponents.beta;
  std::string sup = "t,max_density,due_quantity,wue_quantity\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const Matrix& p = pt.densities[i];
    double wue = 0.0;
    for (Index x = 0; x < p.rows(); ++x) {
      for (Index y = 0; y < p.cols(); ++y) {
        const double f = std::pow(1.0 + std::min(d(x, y), cfg.exponents.R0) / std::pow(t, 1.0 / cfg.exponents.beta),
                                  cfg.exponents.beta);
        wue = std::max(wue, std::pow(t, ab) * p(x, y) * f);
      }
    }
    const double m = p.maxCoeff();
    sup += format_double(t) + "," + format_double(m) + "," + format_double(std::pow(t, ab) * m) + "," +
           format_double(wue) + "\n";
  }
  write_text_file(dir / "sup.csv", sup);
  written.push_back(dir / "sup.csv");

  std::string tail = "t,ball_first,ball_size,radius,sup_escape\n";
  const std::size_t n = space.size();
  for (double t : times) {
    for (const Ball& b : space.balls()) {
      const Vector e = full.apply(t, Vector::Ones(ix(n)) - b.indicator(n));
      double s = 0.0;
      for (std::size_t x = b.begin; x < b.end; ++x) s = std::max(s, e[ix(x)]);
      tail += format_double(t) + "," + space.id(b.begin) + "," + std::to_string(b.size()) + "," +
              format_double(b.radius) + "," + format_double(s) + "\n";
    }
  }
  write_text_file(dir / "tail.csv", tail);
  written.push_back(dir / "tail.csv");
  return written;
}

RunResult run(const RunConfig& cfg) {
  RunResult res = run_checks(cfg);
  fs::create_directories(cfg.output);
  write_text_file(cfg.output / "report.json", res.report.dump(2) + "\n");
  if (res.certificate) write_text_file(cfg.output / "certificate.json", res.certificate->dump(2) + "\n");
  write_curves(cfg);
  return res;
}

std::vector<fs::path> generate_files(const GenerateOptions& opts, const fs::path& out) {
  const SpaceSpec spec = generate_space(opts.params);
  const UltrametricSpace space = build_tree(spec);
  if (opts.scaling != "none" && opts.scaling != "mass") {
    throw Error(ErrorCode::InvalidArgument, "scaling must be 'none' or 'mass'");
  }
  const Json kernel{{"kind", "power"}, {"exponent", opts.exponent}, {"scale", 1.0}, {"scaling", opts.scaling}};
  const Json cfg{{"space", {{"file", "space.json"}}},
                 {"kernel", kernel},
                 {"exponents", {{"alpha", 1.0}, {"beta", 1.0}, {"R0", space.diam()}}},
                 {"time_grid", {{"min", 1e-3}, {"max", 1.0}, {"points", 16}, {"scale", "log"}}},
                 {"output", "out"},
                 {"seed", opts.params.seed}};
  fs::create_directories(out);
  const std::vector<fs::path> files{out / "space.json", out / "kernel.json", out / "config.json"};
  write_text_file(files[0], to_json(spec).dump(2) + "\n");
  write_text_file(files[1], kernel.dump(2) + "\n");
  write_text_file(files[2], cfg.dump(2) + "\n");
  return files;
}

}  // namespace ultraheat
