#include "ultraheat/fast_isotropic.hpp"

#include <cmath>
#include <sstream>

#include "ultraheat/error.hpp"

namespace ultraheat {

FastIsotropicHeatKernel::FastIsotropicHeatKernel(SpacePtr space, std::vector<double> node_rate)
    : space_(std::move(space)), rate_(std::move(node_rate)) {
  if (!space_) throw Error(ErrorCode::InvalidArgument, "fast kernel needs a space");
  const auto& nodes = space_->nodes();
  if (rate_.size() != nodes.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one rate per tree node required");
  }
  lambda_.assign(nodes.size(), 0.0);
  // Preorder numbering puts parents before children, so one forward sweep
  // carries the ancestor sum down the tree.
  std::vector<double> inherited(nodes.size(), 0.0);
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& node = nodes[id];
    if (node.is_leaf()) continue;
    if (!(rate_[id] >= 0.0) || !std::isfinite(rate_[id])) {
      throw Error(ErrorCode::NegativeProfile, "node rate must be finite and >= 0", {id});
    }
    lambda_[id] = 2.0 * rate_[id] * node.volume + inherited[id];
    for (NodeId c : node.children) {
      inherited[c] = inherited[id] + 2.0 * rate_[id] * (node.volume - nodes[c].volume);
    }
  }
}

FastIsotropicHeatKernel FastIsotropicHeatKernel::from_profile(SpacePtr space,
                                                              const Profile& profile) {
  if (!space) throw Error(ErrorCode::InvalidArgument, "fast kernel needs a space");
  std::vector<double> rate(space->nodes().size(), 0.0);
  for (NodeId id = 0; id < rate.size(); ++id) {
    const Node& node = space->node(id);
    if (node.children.size() < 2) continue;
    rate[id] = profile(node.radius);
    if (!(rate[id] >= 0.0) || !std::isfinite(rate[id])) {
      std::ostringstream msg;
      msg << "profile(" << node.radius << ") = " << rate[id];
      throw Error(ErrorCode::NegativeProfile, msg.str());
    }
  }
  return FastIsotropicHeatKernel(std::move(space), std::move(rate));
}

FastIsotropicHeatKernel FastIsotropicHeatKernel::from_kernel(const JumpKernel& kernel,
                                                             double rel_tol) {
  const UltrametricSpace& space = kernel.space();
  const Vector& mu = space.masses();
  const Matrix& w = kernel.weights();
  std::vector<double> rate(space.nodes().size(), 0.0);
  for (NodeId id = 0; id < rate.size(); ++id) {
    const Node& node = space.node(id);
    if (node.children.size() < 2) continue;
    bool first = true;
    double g = 0.0;
    for (std::size_t a = 0; a < node.children.size(); ++a) {
      const Node& ca = space.node(node.children[a]);
      for (std::size_t b = a + 1; b < node.children.size(); ++b) {
        const Node& cb = space.node(node.children[b]);
        for (std::size_t x = ca.begin; x < ca.end; ++x) {
          for (std::size_t y = cb.begin; y < cb.end; ++y) {
            const auto xi = static_cast<Eigen::Index>(x);
            const auto yi = static_cast<Eigen::Index>(y);
            const double v = w(xi, yi) / (mu[xi] * mu[yi]);
            if (first) {
              g = v;
              first = false;
            } else if (std::abs(v - g) > rel_tol * std::max(std::abs(g), std::abs(v))) {
              throw Error(ErrorCode::NotIsotropic,
                          "w/(mu mu) varies across pairs split by node " + std::to_string(id),
                          {x, y});
            }
          }
        }
      }
    }
    rate[id] = g;
  }
  return FastIsotropicHeatKernel(kernel.space_ptr(), std::move(rate));
}

double FastIsotropicHeatKernel::density(double t, std::size_t x, std::size_t y) const {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "time must be >= 0");
  if (x >= space_->size() || y >= space_->size()) {
    throw Error(ErrorCode::UnknownPoint, "query point out of range", {x, y});
  }
  const auto& nodes = space_->nodes();
  // Written with expm1 so that the t -> 0 telescoping cancels exactly:
  // p_t = 1/mu(M) + sum_N e^{-lambda_N t} (sum_i 1_{C_i}(x)1_{C_i}(y)/mu(C_i) - 1/mu(N)).
  // At t = 0 the sum is 1/mu(x) on the diagonal and 0 off it.
  double value = 0.0;
  NodeId below;
  NodeId cur;
  if (x == y) {
    below = space_->leaf(x);
    value = 1.0 / space_->mass(x);
    cur = nodes[below].parent;
  } else {
    cur = space_->lca(x, y);
    value = -std::expm1(-lambda_[cur] * t) / nodes[cur].volume;
    below = cur;
    cur = nodes[cur].parent;
  }
  while (cur != kNoNode) {
    const double weight = 1.0 / nodes[below].volume - 1.0 / nodes[cur].volume;
    value += std::expm1(-lambda_[cur] * t) * weight;
    below = cur;
    cur = nodes[cur].parent;
  }
  return value;
}

std::vector<double> FastIsotropicHeatKernel::density(
    double t, const std::vector<std::pair<std::size_t, std::size_t>>& queries) const {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& [x, y] : queries) out.push_back(density(t, x, y));
  return out;
}

Vector FastIsotropicHeatKernel::diagonal(double t) const {
  Vector d(static_cast<Eigen::Index>(space_->size()));
  for (std::size_t x = 0; x < space_->size(); ++x) d[static_cast<Eigen::Index>(x)] = density(t, x, x);
  return d;
}

std::vector<double> fast_isotropic_heat_kernel(
    SpacePtr space, const Profile& profile, double t,
    const std::vector<std::pair<std::size_t, std::size_t>>& queries) {
  return FastIsotropicHeatKernel::from_profile(std::move(space), profile).density(t, queries);
}

}  // namespace ultraheat
