#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ultraheat/kernel.hpp"
#include "ultraheat/report.hpp"
#include "ultraheat/semigroup.hpp"

namespace ultraheat {

/// True when ball B equals ball(x, r) for some r >= rho, i.e. rho is below
/// the radius of B's parent. Then psi = lambda 1_B is constant on every block
/// of partition(rho).
bool rho_admissible(const UltrametricSpace& space, const Ball& ball, double rho);

/// E_rho(e^{-psi} f, e^{psi} g) against E_rho(f, g). Asserted when rho is
/// admissible for B or lambda = 0; otherwise the relative gap is reported as
/// a vacuous negative control (name "perturbation_identity_control").
CheckRecord perturbation_identity_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                        double lambda, const Vector& f, const Vector& g,
                                        double rel_tol = 1e-12);

/// (1/p) E_rho(f^p) <= E_rho(e^{-psi} f, e^{psi} f^{2p-1}) for f >= 0, p >= 1.
CheckRecord power_inequality_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                   double lambda, const Vector& f, double p,
                                   double rel_tol = 1e-12);

/// (a-b)(a^{2p-1} - b^{2p-1}) >= (1/p)(a^p - b^p)^2 over a x b x p.
CheckRecord scalar_power_lemma_check(const std::vector<double>& values,
                                     const std::vector<double>& exponents);

/// Where the Nash constant comes from and how to enlarge it.
struct NashInput {
  double nu = 1.0;
  double K0 = 1.0;
  double C_N = 1.0;
  /// Add the functions actually met by the check to the test family and
  /// recompute C_N before declaring failure.
  bool enlarge = true;
  /// Constant valid for every function; last resort.
  double certified = std::numeric_limits<double>::infinity();
};

/// Which constant a check ended up using: "family", "enlarged" or "certified".
struct NashUsage {
  double C_N = 0.0;
  std::string source = "family";
};

struct LpDerivativeResult {
  CheckRecord record;
  NashUsage nash;
  std::vector<double> times;
  std::vector<double> measured;  // finite-difference derivative of ||f_t||_{2p}
  std::vector<double> exact;     // derivative from the generator
  std::vector<double> bound;
  std::vector<double> error;     // finite-difference error estimate
};

/// d/dt ||f_t||_{2p} <= -(1/(p C_N)) ||f_t||_{2p}^{1+2p nu} ||f_t||_p^{-2p nu} + (K0/p) ||f_t||_{2p}
/// with f_t = Q_t^psi f. The derivative uses central differences with
/// h = 1e-4 t and h/2 (Richardson); the margin is fd_tol times the size of
/// the terms. Throws StepTooCoarse for fewer than 4 times or when the
/// difference error estimate exceeds the margin.
LpDerivativeResult lp_derivative_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                       double lambda, const Vector& f, double p,
                                       const std::vector<double>& times, const NashInput& nash,
                                       double fd_tol = 1e-6);

struct MoserConfig {
  NashInput nash;
  int k_max = 8;
  int points_per_decade = 64;
  int decades = 3;
  double refine_tol = 1e-9;
};

struct IterationTrace {
  double nu = 1.0;
  double K0 = 1.0;
  double C_N = 1.0;
  std::string nash_source;
  int k_max = 0;
  /// Times at which w_k was evaluated (t/4, t/2, t).
  std::vector<double> times;
  /// w[j][k-1] = w_k(times[j]) for k = 1 .. k_max + 1.
  std::vector<std::vector<double>> w;
  /// Where each supremum was attained, same layout as w.
  std::vector<std::vector<double>> argmax;
  double norm_f = 0.0;
  double a = 0.0;
  double C1 = 0.0;

  /// (C_N^{-1} nu)^{-1/(2 nu)} e^{K0 t}
  double D(double t) const;
  Json to_json() const;
};

struct MoserResult {
  IterationTrace trace;
  std::vector<CheckRecord> records;
};

/// u_k(s) = ||f_s||_{2^k}, w_k(t) = sup_{0<s<=t} s^{(2^{k-1}-1)/(2^k nu)} u_k(s).
/// Checks w_1(t) <= e^{K0 t} ||f||_2, the single step
/// w_{k+1} <= (D a^k)^{2^{-k}} w_k, the final w_{k+1} <= C1 e^{2 K0 t} ||f||_2
/// and monotonicity of w_k in t. k_max must be in [1, 12].
MoserResult moser_iteration(const JumpKernel& kernel, double rho, const Ball& ball, double lambda,
                            const Vector& f, double t, const MoserConfig& cfg = {});

/// C1 = max{1, (C_N^{-1} nu)^{-1/(2 nu)}} 2^{1/nu}
double moser_constant(double C_N, double nu);

/// max_x ||q_t(x,.) e^{psi(x)-psi(.)}||_{L2(mu)} <= C1 t^{-1/(2nu)} e^{2 K0 t} and
/// q_t(x,y) <= C1^2 2^{1/nu} t^{-1/nu} exp(2 K0 t + lambda (1_B(y) - 1_B(x))).
/// The kernel record compares the ratio of both sides with 1.
std::vector<CheckRecord> sup_bound_check(const JumpKernel& kernel, double rho, const Ball& ball,
                                         double lambda, const std::vector<double>& times,
                                         const NashInput& nash);

/// For every distance level rho and every t: truncated kernel entries with
/// d(x,y) > rho are exactly 0, and a single unsplit eigendecomposition gives
/// entries below dense_tol (relative to the largest entry).
std::vector<CheckRecord> vanishing_check(const JumpKernel& kernel, const std::vector<double>& times,
                                         double dense_tol = 1e-13);

struct OdeComparisonParams {
  double b = 1.0;
  double p = 2.0;
  double theta = 1.0;
  double K = 1.0;
  double a = 1.0;
  std::function<double(double)> w = [](double) { return 1.0; };
  std::string w_label = "1";
  double u0 = 0.5;

  void validate() const;
  /// (2 p^a / (theta b))^{1/theta} t^{-(p-1)/theta} e^{K p^{-a} t} w(t)
  double bound(double t) const;
};

struct OdeComparisonResult {
  CheckRecord record;
  std::vector<double> times;
  std::vector<double> u;
  std::vector<double> bound;
};

/// Integrates u' = -b t^{p-2} w(t)^{-theta} u^{1+theta} + K u from u(0) = u0
/// with an adaptive Dormand-Prince pair and compares with the bound on
/// (0, t_max]. For p < 2 the equation is solved in tau = t^{p-1}/(p-1),
/// which removes the singular factor at t = 0. Throws IntegratorFailure.
OdeComparisonResult ode_comparison_check(const OdeComparisonParams& params, double t_max,
                                         double tol = 1e-8, int samples = 200);

}  // namespace ultraheat
