#include "ultraheat/semigroup.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "ultraheat/error.hpp"
#include "ultraheat/form.hpp"
#include "ultraheat/random.hpp"

namespace ultraheat {

namespace {

constexpr double kEigenClamp = 1e-12;

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

SpectralBlock decompose(const Matrix& L, const Vector& mu, std::vector<std::size_t> points) {
  SpectralBlock b;
  const Index m = ix(points.size());
  b.points = std::move(points);
  b.sqrt_mass.resize(m);
  for (Index i = 0; i < m; ++i) b.sqrt_mass[i] = std::sqrt(mu[ix(b.points[i])]);
  Matrix s(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      s(i, j) = L(ix(b.points[i]), ix(b.points[j])) * b.sqrt_mass[i] / b.sqrt_mass[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  // s has eigenvalues <= 0; reverse so that -L's eigenvalues ascend.
  b.eigenvalues = -solver.eigenvalues().reverse();
  b.vectors = solver.eigenvectors().rowwise().reverse();
  const double scale = std::max(1.0, b.eigenvalues.cwiseAbs().maxCoeff());
  for (Index k = 0; k < m; ++k) {
    if (std::abs(b.eigenvalues[k]) < kEigenClamp * scale) b.eigenvalues[k] = 0.0;
  }
  return b;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

Flavor SpectralGenerator::flavor() const {
  const bool truncated = rho_ && *rho_ < space_->diam();
  if (truncated) return full_domain() ? Flavor::Truncated : Flavor::TruncatedRestricted;
  return full_domain() ? Flavor::Full : Flavor::Restricted;
}

Vector SpectralGenerator::eigenvalues() const {
  std::vector<double> all;
  for (const auto& b : blocks_) all.insert(all.end(), b.eigenvalues.begin(), b.eigenvalues.end());
  std::stable_sort(all.begin(), all.end());
  return Eigen::Map<Vector>(all.data(), ix(all.size()));
}

Matrix SpectralGenerator::eigenfunctions() const {
  struct Col {
    double lambda;
    std::size_t block;
    Index k;
  };
  std::vector<Col> cols;
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    for (Index k = 0; k < blocks_[bi].eigenvalues.size(); ++k) {
      cols.push_back({blocks_[bi].eigenvalues[k], bi, k});
    }
  }
  std::stable_sort(cols.begin(), cols.end(),
                   [](const Col& a, const Col& b) { return a.lambda < b.lambda; });
  Matrix phi = Matrix::Zero(ix(size()), ix(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const SpectralBlock& b = blocks_[cols[c].block];
    for (std::size_t i = 0; i < b.points.size(); ++i) {
      phi(ix(b.points[i]), ix(c)) = b.vectors(ix(i), cols[c].k) / b.sqrt_mass[ix(i)];
    }
  }
  return phi;
}

Matrix SpectralGenerator::density(double t) const {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "time must be >= 0");
  const Index n = ix(size());
  Matrix p = Matrix::Zero(n, n);
  for (const SpectralBlock& b : blocks_) {
    const Index m = ix(b.points.size());
    const Vector half = (-0.5 * t * b.eigenvalues).array().exp();
    const Matrix a = b.vectors * half.asDiagonal();
    const Matrix k = a * a.transpose();
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j <= i; ++j) {
        const double v = k(i, j) / (b.sqrt_mass[i] * b.sqrt_mass[j]);
        p(ix(b.points[i]), ix(b.points[j])) = v;
        p(ix(b.points[j]), ix(b.points[i])) = v;
      }
    }
  }
  return p;
}

Vector SpectralGenerator::apply(double t, const Vector& f) const {
  if (f.size() != ix(size())) {
    throw Error(ErrorCode::DimensionMismatch, "function length does not match the space");
  }
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "time must be >= 0");
  Vector out = Vector::Zero(f.size());
  for (const SpectralBlock& b : blocks_) {
    const Index m = ix(b.points.size());
    Vector g(m);
    for (Index i = 0; i < m; ++i) g[i] = f[ix(b.points[i])] * b.sqrt_mass[i];
    const Vector coeff = (b.vectors.transpose() * g).cwiseProduct(
        (-t * b.eigenvalues).array().exp().matrix());
    const Vector h = b.vectors * coeff;
    for (Index i = 0; i < m; ++i) out[ix(b.points[i])] = h[i] / b.sqrt_mass[i];
  }
  return out;
}

SpectralGenerator SpectralGenerator::from_matrix(SpacePtr space, Matrix L,
                                                 std::optional<double> rho) {
  if (!space) throw Error(ErrorCode::InvalidArgument, "generator needs a space");
  const Index n = ix(space->size());
  if (L.rows() != n || L.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "generator matrix size does not match the space");
  }
  SpectralGenerator g;
  g.space_ = std::move(space);
  g.rho_ = rho;
  g.L_ = std::move(L);
  g.domain_.resize(g.space_->size());
  for (std::size_t i = 0; i < g.domain_.size(); ++i) g.domain_[i] = i;
  g.blocks_.push_back(decompose(g.L_, g.space_->masses(), g.domain_));
  return g;
}

SpectralGenerator generator(const JumpKernel& kernel, std::optional<double> rho,
                            std::optional<std::vector<std::size_t>> omega) {
  const UltrametricSpace& space = kernel.space();
  const std::size_t n = space.size();
  if (rho && !(*rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be > 0");

  SpectralGenerator g;
  g.space_ = kernel.space_ptr();
  g.rho_ = rho;
  std::vector<bool> inside(n, !omega.has_value());
  if (omega) {
    for (std::size_t p : *omega) {
      if (p >= n) throw Error(ErrorCode::UnknownPoint, "domain point out of range", {p});
      inside[p] = true;
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (inside[p]) g.domain_.push_back(p);
  }
  if (g.domain_.empty()) throw Error(ErrorCode::EmptyDomain, "restriction domain is empty");

  const Matrix& w = kernel.weights();
  const Vector& mu = space.masses();
  g.L_ = Matrix::Zero(ix(n), ix(n));
  const std::vector<Ball> blocks = (rho && *rho < space.diam())
                                       ? space.partition(*rho)
                                       : std::vector<Ball>{space.ball_of(space.root())};
  for (const Ball& block : blocks) {
    std::vector<std::size_t> pts;
    for (std::size_t x = block.begin; x < block.end; ++x) {
      if (!inside[x]) continue;
      pts.push_back(x);
      double rate = 0.0;
      for (std::size_t y = block.begin; y < block.end; ++y) {
        if (y == x) continue;
        const double a = 2.0 * w(ix(x), ix(y)) / mu[ix(x)];
        rate += a;
        if (inside[y]) g.L_(ix(x), ix(y)) = a;
      }
      g.L_(ix(x), ix(x)) = -rate;
    }
    if (!pts.empty()) g.blocks_.push_back(decompose(g.L_, mu, std::move(pts)));
  }
  return g;
}

Vector Perturbation::psi(std::size_t n) const { return lambda * ball.indicator(n); }

Vector apply(const SpectralGenerator& gen, double t, const Vector& f) { return gen.apply(t, f); }

Vector perturbed_apply(const SpectralGenerator& gen, double t, const Perturbation& pert,
                       const Vector& f) {
  if (f.size() != ix(gen.size())) {
    throw Error(ErrorCode::DimensionMismatch, "function length does not match the space");
  }
  const Vector psi = pert.psi(gen.size());
  const Vector inner = (-psi).array().exp().matrix().cwiseProduct(f);
  return psi.array().exp().matrix().cwiseProduct(gen.apply(t, inner));
}

HeatKernelEntry heat_kernel(const SpectralGenerator& gen, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "heat kernel time must be > 0");
  return {t, gen.flavor(), gen.density(t)};
}

HeatKernelTable heat_kernel_table(const SpectralGenerator& gen, const std::vector<double>& times) {
  HeatKernelTable table;
  table.flavor = gen.flavor();
  table.rho = gen.rho();
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  for (double t : sorted) {
    table.times.push_back(t);
    table.densities.push_back(heat_kernel(gen, t).density);
  }
  return table;
}

HeatKernelEntry truncated_heat_kernel(const JumpKernel& kernel, double rho, double t) {
  return heat_kernel(generator(kernel, rho), t);
}

namespace {

Matrix domain_block(const SpectralGenerator& gen) {
  const auto& dom = gen.domain();
  const Index m = ix(dom.size());
  Matrix sub(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) sub(i, j) = gen.matrix()(ix(dom[i]), ix(dom[j]));
  }
  return sub;
}

Matrix embed(const SpectralGenerator& gen, const Matrix& sub) {
  const auto& dom = gen.domain();
  const Vector& mu = gen.space().masses();
  Matrix p = Matrix::Zero(ix(gen.size()), ix(gen.size()));
  for (std::size_t i = 0; i < dom.size(); ++i) {
    for (std::size_t j = 0; j < dom.size(); ++j) {
      p(ix(dom[i]), ix(dom[j])) = sub(ix(i), ix(j)) / mu[ix(dom[j])];
    }
  }
  return p;
}

}  // namespace

Matrix density_by_expm(const SpectralGenerator& gen, double t) {
  const Matrix scaled = t * domain_block(gen);
  const Matrix e = scaled.exp();
  return embed(gen, e);
}

Matrix density_dense_spectral(const SpectralGenerator& gen, double t) {
  const SpectralBlock b = decompose(gen.matrix(), gen.space().masses(), gen.domain());
  const Matrix k = b.vectors * (-t * b.eigenvalues).array().exp().matrix().asDiagonal() *
                   b.vectors.transpose();
  const Index m = ix(b.points.size());
  Matrix sub(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) sub(i, j) = k(i, j) * b.sqrt_mass[j] / b.sqrt_mass[i];
  }
  return embed(gen, sub);
}

std::vector<CheckRecord> semigroup_selfcheck(const SpectralGenerator& gen, const JumpKernel& kernel,
                                             const std::vector<double>& times,
                                             unsigned long long seed,
                                             const SelfCheckTolerances& tol) {
  std::vector<CheckRecord> out;
  const Index n = ix(gen.size());
  const Vector& mu = gen.space().masses();
  const Matrix& L = gen.matrix();
  Json base;
  if (gen.rho()) base["rho"] = *gen.rho();
  base["domain_size"] = gen.domain().size();

  {
    double worst = 0.0;
    Index wx = 0, wy = 0;
    const double scale = std::max(1e-300, (mu.asDiagonal() * L).cwiseAbs().maxCoeff());
    for (Index x = 0; x < n; ++x) {
      for (Index y = 0; y < n; ++y) {
        const double gap = std::abs(mu[x] * L(x, y) - mu[y] * L(y, x)) / scale;
        if (gap > worst) {
          worst = gap;
          wx = x;
          wy = y;
        }
      }
    }
    out.push_back(make_check("generator_symmetry", worst, 0.0, tol.symmetry, base,
                             {{"x", wx}, {"y", wy}}));
  }

  for (double t : times) {
    Json params = base;
    params["t"] = t;
    const Matrix p = gen.density(t);
    const double scale = std::max(1e-300, max_abs(p));

    Index sx = 0, sy = 0;
    const double sym = ((p - p.transpose()).cwiseAbs() / scale).maxCoeff(&sx, &sy);
    out.push_back(make_check("symmetry", sym, 0.0, tol.symmetry, params, {{"x", sx}, {"y", sy}}));

    Index px = 0, py = 0;
    const double most_negative = -(p / scale).minCoeff(&px, &py);
    out.push_back(make_check("positivity", most_negative, 0.0, tol.positivity, params,
                             {{"x", px}, {"y", py}}));

    if (gen.full_domain()) {
      Index mx = 0;
      const double mass = ((p * mu).array() - 1.0).abs().maxCoeff(&mx);
      out.push_back(make_check("mass", mass, 0.0, tol.mass, params, {{"x", mx}}));
    } else {
      out.push_back(make_vacuous("mass", "killed semigroup is not conservative", params));
    }

    const Matrix p2 = gen.density(2.0 * t);
    const Matrix composed = p * mu.asDiagonal() * p;
    Index cx = 0, cy = 0;
    const double ck =
        ((p2 - composed).cwiseAbs() / std::max(1e-300, max_abs(p2))).maxCoeff(&cx, &cy);
    out.push_back(make_check("chapman_kolmogorov", ck, 0.0, tol.chapman_kolmogorov, params,
                             {{"x", cx}, {"y", cy}}));

    const Matrix e = density_by_expm(gen, t);
    Index ex = 0, ey = 0;
    const double ee =
        ((p - e).cwiseAbs() / std::max(1e-300, max_abs(e))).maxCoeff(&ex, &ey);
    out.push_back(
        make_check("expm_agreement", ee, 0.0, tol.expm, params, {{"x", ex}, {"y", ey}}));
  }

  Rng rng(seed);
  std::vector<bool> inside(static_cast<std::size_t>(n), false);
  for (std::size_t p : gen.domain()) inside[p] = true;
  double worst = 0.0;
  int worst_draw = 0;
  for (int draw = 0; draw < 5; ++draw) {
    Vector f = rng.normal_vector(n);
    Vector g = rng.normal_vector(n);
    for (Index x = 0; x < n; ++x) {
      if (!inside[static_cast<std::size_t>(x)]) f[x] = g[x] = 0.0;
    }
    const double lhs = -l2_inner(L * f, g, mu);
    const FormValue rhs = energy_terms(kernel, f, g, gen.rho());
    const double scale = std::max({rhs.abs_sum, std::abs(lhs), 1e-300});
    const double gap = std::abs(lhs - rhs.value) / scale;
    if (gap > worst) {
      worst = gap;
      worst_draw = draw;
    }
  }
  Json params = base;
  params["seed"] = seed;
  params["draws"] = 5;
  out.push_back(make_check("form_duality", worst, 0.0, tol.duality, params,
                           {{"draw", worst_draw}}));
  return out;
}

}  // namespace ultraheat
