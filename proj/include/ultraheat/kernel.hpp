#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "ultraheat/space.hpp"

namespace ultraheat {

using SpacePtr = std::shared_ptr<const UltrametricSpace>;

/// Weight attached to a distance value.
using Profile = std::function<double(double)>;

/// profile(r) = scale * r^(-exponent)
struct PowerProfile {
  double exponent = 1.0;
  double scale = 1.0;
  double operator()(double r) const;
};

enum class Scaling { None, Mass };

struct IsotropicInfo {
  Profile profile;
  Scaling scaling = Scaling::None;
};

/// Symmetric jump measure j on a finite ultrametric space: w(x,y) = j({(x,y)}).
/// The transition function is J(x, {y}) = w(x,y) / mu(x).
class JumpKernel {
 public:
  JumpKernel(SpacePtr space, Matrix weights);

  const UltrametricSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const Matrix& weights() const { return w_; }
  double weight(std::size_t x, std::size_t y) const;
  std::size_t size() const { return space_->size(); }

  /// J(x, B(x,r)^c): total jump rate from x to points at distance > r.
  double tail(std::size_t x, double r) const;
  Vector tails(double r) const;
  double sup_tail(double r) const;

  /// j(A, B) = sum over x in A, y in B of w(x,y).
  double jump(const Ball& a, const Ball& b) const;

  /// Set when the kernel was built from a radial profile.
  const std::optional<IsotropicInfo>& isotropic() const { return iso_; }

 private:
  friend JumpKernel isotropic_kernel(SpacePtr, const Profile&, Scaling);
  SpacePtr space_;
  Matrix w_;
  std::optional<IsotropicInfo> iso_;
};

/// w(x,y) = profile(d(x,y)), optionally multiplied by mu(x) mu(y).
JumpKernel isotropic_kernel(SpacePtr space, const Profile& profile, Scaling scaling);

/// Validates symmetry, sign and zero diagonal of an explicit weight matrix.
JumpKernel from_matrix(SpacePtr space, const Matrix& weights);

struct TjConstant {
  double value = 0.0;
  std::size_t point = 0;
  /// The supremum is approached as r increases to this radius.
  double radius = 0.0;
};

/// Smallest C with r^beta * tail(x,r) <= C for every x and r in (0, R0).
/// Tails are piecewise constant between distance levels, so scanning the
/// levels is exact.
TjConstant tj_constant_detail(const JumpKernel& kernel, double beta, double R0);
double tj_constant(const JumpKernel& kernel, double beta, double R0);

struct ExponentConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double R0 = 1.0;

  double nu() const { return beta / alpha; }
  /// K0 = rho^-beta + R0^-beta
  double k0(double rho) const;
  /// Throws InvalidArgument unless alpha, beta > 0 and 0 < R0 <= diam.
  void validate(const UltrametricSpace& space) const;
};

}  // namespace ultraheat
