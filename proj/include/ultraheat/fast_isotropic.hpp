#pragma once

#include <utility>
#include <vector>

#include "ultraheat/kernel.hpp"

namespace ultraheat {

/// Heat kernel of a kernel of the form w(x,y) = g(N) mu(x) mu(y), where
/// N = lca(x,y). Every internal node N contributes the eigenspace of
/// functions constant on its children with zero mean on N, with eigenvalue
///   lambda_N = 2 g(N) mu(N) + sum over strict ancestors A of 2 g(A) (mu(A) - mu(A_N)),
/// A_N being the child of A on the path to N. Hence p_t(x,y) needs only the
/// ancestors of lca(x,y): O(depth) per query after an O(#nodes) pass.
class FastIsotropicHeatKernel {
 public:
  /// `node_rate[N]` is g(N); ignored for leaves.
  FastIsotropicHeatKernel(SpacePtr space, std::vector<double> node_rate);

  /// Isotropic profile with mass scaling: g(N) = profile(radius(N)).
  static FastIsotropicHeatKernel from_profile(SpacePtr space, const Profile& profile);
  /// Recovers g from an explicit kernel; throws NotIsotropic when
  /// w(x,y) / (mu(x) mu(y)) is not constant over the pairs split by a node.
  static FastIsotropicHeatKernel from_kernel(const JumpKernel& kernel, double rel_tol = 1e-12);

  double density(double t, std::size_t x, std::size_t y) const;
  std::vector<double> density(double t,
                              const std::vector<std::pair<std::size_t, std::size_t>>& queries) const;
  Vector diagonal(double t) const;

  /// Eigenvalue attached to each node (0 for leaves).
  const std::vector<double>& node_eigenvalues() const { return lambda_; }
  const UltrametricSpace& space() const { return *space_; }

 private:
  SpacePtr space_;
  std::vector<double> rate_;
  std::vector<double> lambda_;
};

std::vector<double> fast_isotropic_heat_kernel(
    SpacePtr space, const Profile& profile, double t,
    const std::vector<std::pair<std::size_t, std::size_t>>& queries);

}  // namespace ultraheat
