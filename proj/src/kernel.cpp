#include "ultraheat/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ultraheat/error.hpp"

namespace ultraheat {

double PowerProfile::operator()(double r) const { return scale * std::pow(r, -exponent); }

JumpKernel::JumpKernel(SpacePtr space, Matrix weights)
    : space_(std::move(space)), w_(std::move(weights)) {
  if (!space_) throw Error(ErrorCode::InvalidArgument, "kernel needs a space");
  const auto n = static_cast<Eigen::Index>(space_->size());
  if (w_.rows() != n || w_.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "weight matrix is " + std::to_string(w_.rows()) + "x" + std::to_string(w_.cols()) +
                    ", space has " + std::to_string(n) + " points");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w_(i, i) != 0.0) {
      throw Error(ErrorCode::NonzeroDiagonal, "w(" + space_->id(i) + "," + space_->id(i) + ") != 0",
                  {static_cast<std::size_t>(i)});
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(w_(i, j) >= 0.0) || !std::isfinite(w_(i, j))) {
        throw Error(ErrorCode::NegativeWeight,
                    "w(" + space_->id(i) + "," + space_->id(j) + ") is negative or not finite",
                    {static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
      }
      if (w_(i, j) != w_(j, i)) {
        throw Error(ErrorCode::Asymmetric,
                    "w(" + space_->id(i) + "," + space_->id(j) + ") != w(" + space_->id(j) + "," +
                        space_->id(i) + ")",
                    {static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
      }
    }
  }
}

double JumpKernel::weight(std::size_t x, std::size_t y) const {
  if (x >= size() || y >= size()) throw Error(ErrorCode::UnknownPoint, "weight index out of range");
  return w_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
}

double JumpKernel::tail(std::size_t x, double r) const {
  const Ball b = space_->ball(x, r);
  const auto row = w_.row(static_cast<Eigen::Index>(x));
  const auto n = static_cast<Eigen::Index>(size());
  const auto lo = static_cast<Eigen::Index>(b.begin);
  const auto hi = static_cast<Eigen::Index>(b.end);
  const double outside = row.head(lo).sum() + row.segment(hi, n - hi).sum();
  return outside / space_->mass(x);
}

Vector JumpKernel::tails(double r) const {
  Vector out(static_cast<Eigen::Index>(size()));
  for (std::size_t x = 0; x < size(); ++x) out[static_cast<Eigen::Index>(x)] = tail(x, r);
  return out;
}

double JumpKernel::sup_tail(double r) const { return size() == 0 ? 0.0 : tails(r).maxCoeff(); }

double JumpKernel::jump(const Ball& a, const Ball& b) const {
  return w_.block(static_cast<Eigen::Index>(a.begin), static_cast<Eigen::Index>(b.begin),
                  static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()))
      .sum();
}

JumpKernel isotropic_kernel(SpacePtr space, const Profile& profile, Scaling scaling) {
  if (!space) throw Error(ErrorCode::InvalidArgument, "kernel needs a space");
  for (double level : space->levels()) {
    const double v = profile(level);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      std::ostringstream msg;
      msg << "profile(" << level << ") = " << v;
      throw Error(ErrorCode::NegativeProfile, msg.str());
    }
  }
  const auto n = static_cast<Eigen::Index>(space->size());
  Matrix w = Matrix::Zero(n, n);
  const Matrix d = space->distance_matrix();
  const Vector& mu = space->masses();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = profile(d(i, j));
      if (scaling == Scaling::Mass) v *= mu[i] * mu[j];
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  JumpKernel k(std::move(space), std::move(w));
  k.iso_ = IsotropicInfo{profile, scaling};
  return k;
}

JumpKernel from_matrix(SpacePtr space, const Matrix& weights) {
  return JumpKernel(std::move(space), weights);
}

TjConstant tj_constant_detail(const JumpKernel& kernel, double beta, double R0) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
  if (!(R0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "R0 must be > 0");
  const UltrametricSpace& space = kernel.space();
  std::vector<double> levels{0.0};
  levels.insert(levels.end(), space.levels().begin(), space.levels().end());

  TjConstant best;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] >= R0) break;
    const double upper = i + 1 < levels.size() ? std::min(levels[i + 1], R0) : R0;
    const double scale = std::pow(upper, beta);
    for (std::size_t x = 0; x < space.size(); ++x) {
      const double v = scale * kernel.tail(x, levels[i]);
      if (v > best.value) best = {v, x, upper};
    }
  }
  return best;
}

double tj_constant(const JumpKernel& kernel, double beta, double R0) {
  return tj_constant_detail(kernel, beta, R0).value;
}

double ExponentConfig::k0(double rho) const {
  return std::pow(rho, -beta) + std::pow(R0, -beta);
}

void ExponentConfig::validate(const UltrametricSpace& space) const {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
  if (!(R0 > 0.0) || R0 > space.diam() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "R0 = " << R0 << " must lie in (0, diam] = (0, " << space.diam() << "]";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
}

}  // namespace ultraheat
