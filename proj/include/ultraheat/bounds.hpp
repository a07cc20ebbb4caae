#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ultraheat/kernel.hpp"
#include "ultraheat/report.hpp"
#include "ultraheat/semigroup.hpp"

namespace ultraheat {

struct ConditionEstimate {
  std::string kind;  // "TJ", "DUE", "wUE" or "Nash"
  double constant = 0.0;
  Json witness = Json::object();
  std::string scan;
  /// Nash only: a constant valid for every u, not just the scanned family.
  std::optional<double> certified_upper;
};

Json to_json(const ConditionEstimate& estimate);

/// Times must lie in (0, R0^beta].
void check_time_grid(const std::vector<double>& times, const ExponentConfig& cfg);

/// max over t, x, y of t^{alpha/beta} p_t(x,y), refined near the maximizer.
ConditionEstimate due_constant(const SpectralGenerator& full, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine = true);
ConditionEstimate due_constant(const JumpKernel& kernel, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine = true);

/// max over t, x, y of t^{alpha/beta} p_t(x,y) (1 + (d(x,y) ^ R0) / t^{1/beta})^beta.
ConditionEstimate wue_constant(const SpectralGenerator& full, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine = true);
ConditionEstimate wue_constant(const JumpKernel& kernel, const ExponentConfig& cfg,
                               const std::vector<double>& times, bool refine = true);

struct NashFamily {
  std::vector<Vector> functions;
  std::vector<std::string> labels;

  void add(Vector u, std::string label);
  std::size_t size() const { return functions.size(); }
};

/// Eigenfunctions of the rho-truncated and the full generator, indicators of
/// every ball, `count` random simple functions and `count` random positive
/// vectors.
NashFamily default_nash_family(const JumpKernel& kernel, double rho, std::uint64_t seed,
                               int count = 32);

/// ||u||_2^{2(1+nu)} / ((E_rho(u) + K0 ||u||_2^2) ||u||_1^{2 nu}); 0 for u = 0.
double nash_ratio(const JumpKernel& kernel, double rho, double nu, double K0, const Vector& u);

/// Largest ratio over the family (a lower estimate of the best constant),
/// together with the certified bound 1 / (K0 min(mu)^nu).
ConditionEstimate nash_constant(const JumpKernel& kernel, double rho, double nu, double K0,
                                const NashFamily& family);

/// E(u) - E_rho(u) <= 4 ||u||_2^2 sup_x tail(x, rho) over the family.
CheckRecord energy_difference_check(const JumpKernel& kernel, double rho, const NashFamily& family);

struct TruncationComparison {
  CheckRecord record;
  /// max of (P_t f - Q_t f) / (t sup tail ||f||_inf); 0 when nothing jumps
  /// beyond rho.
  double empirical_constant = 0.0;
};

/// P_t^Omega f <= Q_t^Omega f + c t sup_x tail(x, rho) ||f||_inf pointwise.
TruncationComparison truncation_comparison_check(
    const JumpKernel& kernel, double rho, const std::optional<std::vector<std::size_t>>& omega,
    const Vector& f, const std::vector<double>& times, double c = 4.0);

struct TailReport {
  std::vector<CheckRecord> records;
  /// max over balls and times of P_t 1_{B^c}(x) * r_eff^beta / t
  double empirical_constant = 0.0;
};

/// For every ball B with admissible radii [r, r_out) and every t:
///   sup_{x in B} P_t 1_{B^c}(x) <= 4 C_TJ t / min(r_out, R0)^beta,
/// which covers both radius r < R0 and the (r ^ R0) form. Also checks that
/// P_t 1_{B^c}(x) does not increase along the chain of balls around each x.
TailReport tail_probability_check(const JumpKernel& kernel, const ExponentConfig& cfg,
                                  double c_tj, const std::vector<double>& times);
TailReport tail_probability_check(const SpectralGenerator& full, const ExponentConfig& cfg,
                                  double c_tj, const std::vector<double>& times);

struct WueCertificate {
  Json inputs = Json::object();
  double c_tj = 0.0;
  double c_due = 0.0;
  double c_nash = 0.0;
  double c_tail = 0.0;
  /// Constant obtained with the truncation at half the radius.
  double c_tail_half_radius = 0.0;
  double c_wue_derived = 0.0;
  double c_wue_half_radius = 0.0;
  double c_wue_measured = 0.0;
  std::vector<CheckRecord> checks;
  bool pass = false;

  Json to_json() const;
};

/// Measures C_TJ and C_DUE, replays the chaining estimate
///   p_{2t}(x,y) <= sum over z outside B(x,r) and outside B(y,r) <= 2 (C_DUE / t^{a/b}) (C_tail t / (r ^ R0)^b)
/// for d(x,y) >= t^{1/b}, r = d(x,y)/2, and compares the resulting constant
/// with the directly measured wUE constant. Uses `times` (default: 48 log
/// points in [1e-3 R0^b, R0^b]).
WueCertificate theorem1_pipeline(const JumpKernel& kernel, const ExponentConfig& cfg,
                                 std::vector<double> times = {});

/// Throws ConditionFailure naming the first failed step.
void require_pass(const WueCertificate& cert);

}  // namespace ultraheat
