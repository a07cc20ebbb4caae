#include "ultraheat/form.hpp"

#include <cmath>
#include <limits>

#include "ultraheat/error.hpp"

namespace ultraheat {

namespace {

void check_dims(const JumpKernel& kernel, const Vector& f, const Vector& g) {
  const auto n = static_cast<Eigen::Index>(kernel.size());
  if (f.size() != n || g.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "function length " + std::to_string(f.size()) + "/" +
                                                  std::to_string(g.size()) + " vs " +
                                                  std::to_string(n) + " points");
  }
}

// Unordered pairs inside [begin, end); each counted twice by symmetry of w,
// and the two ordered terms are bitwise equal.
void accumulate_block(const Matrix& w, const Vector& f, const Vector& g, Eigen::Index begin,
                      Eigen::Index end, double& value, double& abs_sum) {
  for (Eigen::Index x = begin; x < end; ++x) {
    for (Eigen::Index y = x + 1; y < end; ++y) {
      const double wxy = w(x, y);
      if (wxy == 0.0) continue;
      const double term = (f[x] - f[y]) * (g[x] - g[y]) * wxy;
      value += term;
      abs_sum += std::abs(term);
    }
  }
}

}  // namespace

FormValue energy_terms(const JumpKernel& kernel, const Vector& f, const Vector& g,
                       std::optional<double> rho) {
  check_dims(kernel, f, g);
  if (rho && !(*rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be > 0");
  FormValue out;
  out.rho = rho;
  const Matrix& w = kernel.weights();
  if (!rho || *rho >= kernel.space().diam()) {
    accumulate_block(w, f, g, 0, static_cast<Eigen::Index>(kernel.size()), out.value, out.abs_sum);
  } else {
    // d(x,y) <= rho exactly when x and y share a block of partition(rho).
    for (const Ball& b : kernel.space().partition(*rho)) {
      accumulate_block(w, f, g, static_cast<Eigen::Index>(b.begin),
                       static_cast<Eigen::Index>(b.end), out.value, out.abs_sum);
    }
  }
  out.value *= 2.0;
  out.abs_sum *= 2.0;
  return out;
}

double energy(const JumpKernel& kernel, const Vector& f, const Vector& g) {
  return energy_terms(kernel, f, g).value;
}

double energy(const JumpKernel& kernel, const Vector& f) { return energy(kernel, f, f); }

double energy_trunc(const JumpKernel& kernel, const Vector& f, const Vector& g, double rho) {
  return energy_terms(kernel, f, g, rho).value;
}

double energy_trunc(const JumpKernel& kernel, const Vector& f, double rho) {
  return energy_trunc(kernel, f, f, rho);
}

IndicatorEnergyReport indicator_energy_check(const JumpKernel& kernel, const Ball& ball,
                                             double rel_tol) {
  const std::size_t n = kernel.size();
  const Vector ind = ball.indicator(n);
  IndicatorEnergyReport r;
  r.energy = energy(kernel, ind);
  double cross = 0.0;
  const Matrix& w = kernel.weights();
  for (std::size_t x = ball.begin; x < ball.end; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (!ball.contains(y)) cross += w(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }
  }
  r.twice_jump = 2.0 * cross;
  const double scale = std::max(std::abs(r.energy), std::abs(r.twice_jump));
  r.rel_gap = scale > 0.0 ? std::abs(r.energy - r.twice_jump) / scale : 0.0;
  r.pass = r.rel_gap <= rel_tol;
  return r;
}

SimpleFunction::SimpleFunction(std::vector<double> coeffs, std::vector<Ball> balls)
    : coeffs_(std::move(coeffs)), balls_(std::move(balls)) {
  if (balls_.empty()) throw Error(ErrorCode::InvalidArgument, "simple function needs a ball");
  if (coeffs_.size() != balls_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one coefficient per ball required");
  }
  for (std::size_t i = 0; i < balls_.size(); ++i) {
    for (std::size_t j = i + 1; j < balls_.size(); ++j) {
      const bool disjoint = balls_[i].end <= balls_[j].begin || balls_[j].end <= balls_[i].begin;
      if (!disjoint) {
        throw Error(ErrorCode::OverlappingBalls,
                    "balls " + std::to_string(i) + " and " + std::to_string(j) + " intersect",
                    {i, j});
      }
    }
  }
}

double SimpleFunction::operator()(std::size_t point) const {
  for (std::size_t i = 0; i < balls_.size(); ++i) {
    if (balls_[i].contains(point)) return coeffs_[i];
  }
  return 0.0;
}

Vector SimpleFunction::evaluate(std::size_t n) const {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < balls_.size(); ++i) {
    for (std::size_t p = balls_[i].begin; p < balls_[i].end && p < n; ++p) {
      v[static_cast<Eigen::Index>(p)] = coeffs_[i];
    }
  }
  return v;
}

SimpleFunction simple_function(std::vector<double> coeffs, std::vector<Ball> balls) {
  return SimpleFunction(std::move(coeffs), std::move(balls));
}

double lp_norm(const Vector& f, const Vector& mu, double p) {
  if (f.size() != mu.size()) throw Error(ErrorCode::DimensionMismatch, "norm dimension mismatch");
  if (std::isinf(p)) return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
  // Scale by the max entry so high powers neither overflow nor underflow.
  const double top = f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += std::pow(std::abs(f[i]) / top, p) * mu[i];
  return top * std::pow(s, 1.0 / p);
}

double l2_inner(const Vector& f, const Vector& g, const Vector& mu) {
  return (f.array() * g.array() * mu.array()).sum();
}

}  // namespace ultraheat
