#pragma once

#include <optional>
#include <vector>

#include "ultraheat/kernel.hpp"

namespace ultraheat {

/// A form evaluation together with the sum of absolute pair contributions,
/// which is the natural scale for judging cancellation error.
struct FormValue {
  double value = 0.0;
  double abs_sum = 0.0;
  std::optional<double> rho;
};

/// E(f,g) = sum over ordered pairs x != y of (f(x)-f(y)) (g(x)-g(y)) w(x,y).
/// With `rho`, only pairs with d(x,y) <= rho contribute.
FormValue energy_terms(const JumpKernel& kernel, const Vector& f, const Vector& g,
                       std::optional<double> rho = std::nullopt);

double energy(const JumpKernel& kernel, const Vector& f, const Vector& g);
double energy(const JumpKernel& kernel, const Vector& f);
double energy_trunc(const JumpKernel& kernel, const Vector& f, const Vector& g, double rho);
double energy_trunc(const JumpKernel& kernel, const Vector& f, double rho);

struct IndicatorEnergyReport {
  double energy = 0.0;
  double twice_jump = 0.0;
  double rel_gap = 0.0;
  bool pass = false;
};

/// E(1_B) against 2 j(B, B^c).
IndicatorEnergyReport indicator_energy_check(const JumpKernel& kernel, const Ball& ball,
                                             double rel_tol = 1e-12);

/// sum_i c_i 1_{B_i} over pairwise disjoint balls.
class SimpleFunction {
 public:
  SimpleFunction(std::vector<double> coeffs, std::vector<Ball> balls);

  double operator()(std::size_t point) const;
  Vector evaluate(std::size_t n) const;
  const std::vector<double>& coefficients() const { return coeffs_; }
  const std::vector<Ball>& balls() const { return balls_; }

 private:
  std::vector<double> coeffs_;
  std::vector<Ball> balls_;
};

SimpleFunction simple_function(std::vector<double> coeffs, std::vector<Ball> balls);

/// L^p(mu) norm; p = infinity gives the max norm.
double lp_norm(const Vector& f, const Vector& mu, double p);
double l2_inner(const Vector& f, const Vector& g, const Vector& mu);

}  // namespace ultraheat
