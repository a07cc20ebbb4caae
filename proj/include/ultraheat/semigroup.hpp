#pragma once

#include <optional>
#include <vector>

#include "ultraheat/kernel.hpp"
#include "ultraheat/report.hpp"

namespace ultraheat {

/// Eigen-decomposition of one diagonal block of the mu^{1/2}-symmetrized
/// generator. Columns of `vectors` are Euclidean-orthonormal; the
/// L^2(mu)-orthonormal eigenfunctions are vectors(x,k) / sqrt(mu(x)).
struct SpectralBlock {
  std::vector<std::size_t> points;
  Vector sqrt_mass;
  /// Eigenvalues of -L restricted to the block, ascending, clamped at 0.
  Vector eigenvalues;
  Matrix vectors;
};

enum class Flavor { Full, Truncated, Restricted, TruncatedRestricted };

/// The operator L with <-L f, g>_mu = E_rho(f, g) for f, g vanishing outside
/// the domain Omega:
///   (L f)(x) = 2 sum_{y : d(x,y) <= rho} (f(y) 1_Omega(y) - f(x)) w(x,y) / mu(x).
/// Points outside Omega are killed. The matrix is block diagonal over the
/// balls of partition(rho), and every exponential is taken block by block.
class SpectralGenerator {
 public:
  const UltrametricSpace& space() const { return *space_; }
  std::size_t size() const { return space_->size(); }
  std::optional<double> rho() const { return rho_; }
  const std::vector<std::size_t>& domain() const { return domain_; }
  bool full_domain() const { return domain_.size() == size(); }
  Flavor flavor() const;

  /// n x n matrix; rows and columns outside the domain are zero.
  const Matrix& matrix() const { return L_; }
  const std::vector<SpectralBlock>& blocks() const { return blocks_; }

  /// All eigenvalues of -L on the domain, ascending.
  Vector eigenvalues() const;
  /// L^2(mu)-orthonormal eigenfunctions as columns (zero outside the domain),
  /// ordered like eigenvalues().
  Matrix eigenfunctions() const;

  /// p_t(x,y) = (e^{tL})_{xy} / mu(y). Entries coupling different blocks, or
  /// touching points outside the domain, are exactly 0.
  Matrix density(double t) const;

  /// e^{tL} f, zero outside the domain.
  Vector apply(double t, const Vector& f) const;

  /// Spectral data computed from an arbitrary generator matrix without block
  /// splitting. Meant for negative controls in self-checks.
  static SpectralGenerator from_matrix(SpacePtr space, Matrix L,
                                       std::optional<double> rho = std::nullopt);

 private:
  friend SpectralGenerator generator(const JumpKernel&, std::optional<double>,
                                     std::optional<std::vector<std::size_t>>);
  SpacePtr space_;
  std::optional<double> rho_;
  std::vector<std::size_t> domain_;
  Matrix L_;
  std::vector<SpectralBlock> blocks_;
};

SpectralGenerator generator(const JumpKernel& kernel, std::optional<double> rho = std::nullopt,
                            std::optional<std::vector<std::size_t>> omega = std::nullopt);

/// psi = lambda 1_B
struct Perturbation {
  Ball ball;
  double lambda = 0.0;

  Vector psi(std::size_t n) const;
};

/// Q_t^psi f = e^{psi} Q_t(e^{-psi} f)
Vector perturbed_apply(const SpectralGenerator& gen, double t, const Perturbation& pert,
                       const Vector& f);
Vector apply(const SpectralGenerator& gen, double t, const Vector& f);

struct HeatKernelEntry {
  double t = 0.0;
  Flavor flavor = Flavor::Full;
  Matrix density;
};

struct HeatKernelTable {
  Flavor flavor = Flavor::Full;
  std::optional<double> rho;
  std::vector<double> times;
  std::vector<Matrix> densities;
};

HeatKernelEntry heat_kernel(const SpectralGenerator& gen, double t);
HeatKernelTable heat_kernel_table(const SpectralGenerator& gen, const std::vector<double>& times);
HeatKernelEntry truncated_heat_kernel(const JumpKernel& kernel, double rho, double t);

/// Heat kernel via scaling-and-squaring of the dense generator; cross-check
/// for the spectral route.
Matrix density_by_expm(const SpectralGenerator& gen, double t);
/// Heat kernel via one eigen-decomposition of the whole (unsplit) generator.
Matrix density_dense_spectral(const SpectralGenerator& gen, double t);

struct SelfCheckTolerances {
  double symmetry = 1e-12;
  double positivity = 1e-12;
  double mass = 1e-12;
  double chapman_kolmogorov = 1e-10;
  double duality = 1e-12;
  double expm = 1e-10;
};

/// Symmetry of L in L^2(mu) and of p_t, positivity, conservativeness (full
/// domain only), Chapman-Kolmogorov, agreement with the matrix exponential and
/// form-generator duality on seeded random vectors.
std::vector<CheckRecord> semigroup_selfcheck(const SpectralGenerator& gen, const JumpKernel& kernel,
                                             const std::vector<double>& times,
                                             unsigned long long seed = 1,
                                             const SelfCheckTolerances& tol = {});

}  // namespace ultraheat
