#include "ultraheat/space.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <tuple>

#include "ultraheat/error.hpp"

namespace ultraheat {

std::vector<std::size_t> Ball::members() const {
  std::vector<std::size_t> out(size());
  std::iota(out.begin(), out.end(), begin);
  return out;
}

Vector Ball::indicator(std::size_t n) const {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = begin; i < end; ++i) v[static_cast<Eigen::Index>(i)] = 1.0;
  return v;
}

void UltrametricSpace::check_point(std::size_t point) const {
  if (point >= size()) {
    throw Error(ErrorCode::UnknownPoint,
                "point index " + std::to_string(point) + " out of range [0, " +
                    std::to_string(size()) + ")");
  }
}

const std::string& UltrametricSpace::id(std::size_t point) const {
  check_point(point);
  return ids_[point];
}

std::size_t UltrametricSpace::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::UnknownPoint, "no point with id '" + id + "'");
  return it->second;
}

double UltrametricSpace::mass(std::size_t point) const {
  check_point(point);
  return masses_[static_cast<Eigen::Index>(point)];
}

NodeId UltrametricSpace::lca(std::size_t x, std::size_t y) const {
  check_point(x);
  check_point(y);
  NodeId a = leaf_of_[x];
  NodeId b = leaf_of_[y];
  while (nodes_[a].depth > nodes_[b].depth) a = nodes_[a].parent;
  while (nodes_[b].depth > nodes_[a].depth) b = nodes_[b].parent;
  while (a != b) {
    a = nodes_[a].parent;
    b = nodes_[b].parent;
  }
  return a;
}

double UltrametricSpace::distance(std::size_t x, std::size_t y) const {
  if (x == y) {
    check_point(x);
    return 0.0;
  }
  return nodes_[lca(x, y)].radius;
}

Matrix UltrametricSpace::distance_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Matrix d = Matrix::Zero(n, n);
  // Every pair split between two distinct children of a node has that node
  // as its lowest common ancestor.
  for (const Node& node : nodes_) {
    for (std::size_t a = 0; a < node.children.size(); ++a) {
      const Node& ca = nodes_[node.children[a]];
      for (std::size_t b = a + 1; b < node.children.size(); ++b) {
        const Node& cb = nodes_[node.children[b]];
        for (std::size_t i = ca.begin; i < ca.end; ++i) {
          for (std::size_t j = cb.begin; j < cb.end; ++j) {
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = node.radius;
            d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = node.radius;
          }
        }
      }
    }
  }
  return d;
}

Ball UltrametricSpace::ball_of(NodeId id) const {
  const Node& n = nodes_.at(id);
  return Ball{id, n.radius, n.begin, n.end, n.volume};
}

Ball UltrametricSpace::ball(std::size_t x, double r) const {
  check_point(x);
  if (!(r >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be >= 0");
  NodeId cur = leaf_of_[x];
  while (nodes_[cur].parent != kNoNode && nodes_[nodes_[cur].parent].radius <= r) {
    cur = nodes_[cur].parent;
  }
  return ball_of(cur);
}

std::vector<Ball> UltrametricSpace::partition(double r) const {
  if (!(r >= 0.0)) throw Error(ErrorCode::InvalidArgument, "partition radius must be >= 0");
  std::vector<Ball> out;
  std::vector<NodeId> stack{root()};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    if (nodes_[cur].radius <= r) {
      out.push_back(ball_of(cur));
      continue;
    }
    for (auto it = nodes_[cur].children.rbegin(); it != nodes_[cur].children.rend(); ++it) {
      stack.push_back(*it);
    }
  }
  return out;
}

std::vector<Ball> UltrametricSpace::balls() const {
  std::vector<Ball> out;
  out.reserve(nodes_.size());
  for (NodeId i = 0; i < nodes_.size(); ++i) out.push_back(ball_of(i));
  return out;
}

UltrametricSpace UltrametricSpace::from_raw(const std::vector<RawNode>& raw, std::size_t raw_root,
                                            const std::vector<std::string>& ids,
                                            const std::vector<double>& masses) {
  if (ids.empty()) throw Error(ErrorCode::EmptySpace, "space has no points");
  if (ids.size() != masses.size()) {
    throw Error(ErrorCode::DimensionMismatch, "ids and masses differ in length");
  }
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) {
      throw Error(ErrorCode::NonPositiveMass,
                  "point '" + ids[i] + "' has mass " + std::to_string(masses[i]), {i});
    }
  }

  UltrametricSpace s;
  std::vector<std::size_t> order;  // raw point index per canonical index
  std::vector<bool> seen(ids.size(), false);

  std::function<NodeId(std::size_t, NodeId, std::size_t)> visit =
      [&](std::size_t r, NodeId parent, std::size_t depth) -> NodeId {
    const RawNode& rn = raw.at(r);
    const NodeId me = s.nodes_.size();
    s.nodes_.push_back(Node{});
    s.nodes_[me].parent = parent;
    s.nodes_[me].depth = depth;
    s.nodes_[me].begin = order.size();
    if (rn.point) {
      if (!rn.children.empty()) {
        throw Error(ErrorCode::InvalidArgument, "leaf node cannot have children");
      }
      const std::size_t p = *rn.point;
      if (p >= ids.size() || seen[p]) {
        throw Error(ErrorCode::InvalidArgument, "point referenced twice or out of range");
      }
      seen[p] = true;
      s.nodes_[me].radius = 0.0;
      s.nodes_[me].volume = masses[p];
      order.push_back(p);
    } else {
      if (rn.children.empty()) throw Error(ErrorCode::EmptySpace, "ball without members");
      const bool root_singleton = parent == kNoNode && rn.children.size() == 1 &&
                                  raw.at(rn.children.front()).point.has_value();
      if (!(rn.radius > 0.0) && !root_singleton) {
        throw Error(ErrorCode::NonDecreasingRadii, "internal ball radius must be > 0");
      }
      if (parent != kNoNode && !(rn.radius <= s.nodes_[parent].radius - kRadiusSeparation)) {
        std::ostringstream msg;
        msg << "child radius " << rn.radius << " not below parent radius "
            << s.nodes_[parent].radius;
        throw Error(ErrorCode::NonDecreasingRadii, msg.str());
      }
      s.nodes_[me].radius = rn.radius;
      double vol = 0.0;
      for (std::size_t c : rn.children) {
        const NodeId child = visit(c, me, depth + 1);
        s.nodes_[me].children.push_back(child);
        vol += s.nodes_[child].volume;
      }
      s.nodes_[me].volume = vol;
    }
    s.nodes_[me].end = order.size();
    return me;
  };
  visit(raw_root, kNoNode, 0);

  if (order.size() != ids.size()) {
    throw Error(ErrorCode::InvalidArgument, "some points are not attached to the tree");
  }

  s.ids_.resize(order.size());
  s.masses_.resize(static_cast<Eigen::Index>(order.size()));
  s.leaf_of_.assign(order.size(), kNoNode);
  for (std::size_t i = 0; i < order.size(); ++i) {
    s.ids_[i] = ids[order[i]];
    s.masses_[static_cast<Eigen::Index>(i)] = masses[order[i]];
    if (!s.index_.emplace(s.ids_[i], i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate point id '" + s.ids_[i] + "'");
    }
  }
  for (NodeId k = 0; k < s.nodes_.size(); ++k) {
    if (s.nodes_[k].is_leaf()) s.leaf_of_[s.nodes_[k].begin] = k;
    if (s.nodes_[k].children.size() >= 2) s.levels_.push_back(s.nodes_[k].radius);
  }
  std::sort(s.levels_.begin(), s.levels_.end());
  s.levels_.erase(std::unique(s.levels_.begin(), s.levels_.end()), s.levels_.end());
  return s;
}

UltrametricSpace build_tree(const SpaceSpec& spec) {
  std::vector<UltrametricSpace::RawNode> raw;
  std::vector<std::string> ids;
  std::vector<double> masses;
  std::function<std::size_t(const SpaceSpec&)> add = [&](const SpaceSpec& s) -> std::size_t {
    const std::size_t me = raw.size();
    raw.push_back({s.radius, {}, std::nullopt});
    std::vector<std::size_t> kids;
    for (const SpaceSpec& c : s.children) kids.push_back(add(c));
    for (const LeafSpec& l : s.leaves) {
      kids.push_back(raw.size());
      raw.push_back({0.0, {}, ids.size()});
      ids.push_back(l.id);
      masses.push_back(l.mass);
    }
    raw[me].children = std::move(kids);
    return me;
  };
  const std::size_t root = add(spec);
  return UltrametricSpace::from_raw(raw, root, ids, masses);
}

namespace {

std::vector<std::size_t> find_violating_triple(const Matrix& d) {
  const Eigen::Index n = d.rows();
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = x + 1; y < n; ++y) {
      for (Eigen::Index z = 0; z < n; ++z) {
        if (z == x || z == y) continue;
        if (d(x, y) > std::max(d(x, z), d(z, y))) {
          return {static_cast<std::size_t>(x), static_cast<std::size_t>(z),
                  static_cast<std::size_t>(y)};
        }
      }
    }
  }
  return {};
}

std::string matrix_shape_problem(const Matrix& d) {
  if (d.rows() != d.cols()) return "distance matrix is not square";
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) return "nonzero diagonal at " + std::to_string(i);
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      if (d(i, j) != d(j, i)) {
        return "asymmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")";
      }
      if (!(d(i, j) > 0.0) || !std::isfinite(d(i, j))) {
        return "off-diagonal distance must be finite and > 0 at (" + std::to_string(i) + "," +
               std::to_string(j) + ")";
      }
    }
  }
  return {};
}

}  // namespace

UltrametricSpace from_distance_matrix(const Matrix& distances, const std::vector<double>& masses,
                                      std::vector<std::string> ids) {
  const auto n = static_cast<std::size_t>(distances.rows());
  if (n == 0) throw Error(ErrorCode::EmptySpace, "empty distance matrix");
  if (std::string problem = matrix_shape_problem(distances); !problem.empty()) {
    throw Error(ErrorCode::InvalidMatrix, problem);
  }
  if (masses.size() != n) throw Error(ErrorCode::DimensionMismatch, "masses length != matrix size");
  if (ids.empty()) {
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  }
  if (ids.size() != n) throw Error(ErrorCode::DimensionMismatch, "ids length != matrix size");

  using Raw = UltrametricSpace::RawNode;
  std::vector<Raw> raw;
  for (std::size_t i = 0; i < n; ++i) raw.push_back({0.0, {}, i});

  std::vector<std::size_t> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    while (uf[a] != a) a = uf[a] = uf[uf[a]];
    return a;
  };
  std::vector<std::size_t> cluster_node(n);
  std::iota(cluster_node.begin(), cluster_node.end(), 0);

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs.emplace_back(distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), i,
                         j);
    }
  }
  std::sort(pairs.begin(), pairs.end());

  for (const auto& [dist, i, j] : pairs) {
    const std::size_t ri = find(i);
    const std::size_t rj = find(j);
    if (ri == rj) continue;
    const std::size_t ni = cluster_node[ri];
    const std::size_t nj = cluster_node[rj];
    const bool i_open = !raw[ni].point && raw[ni].radius == dist;
    const bool j_open = !raw[nj].point && raw[nj].radius == dist;
    std::size_t merged;
    if (i_open && j_open) {
      for (std::size_t c : raw[nj].children) raw[ni].children.push_back(c);
      raw[nj].children.clear();
      merged = ni;
    } else if (i_open) {
      raw[ni].children.push_back(nj);
      merged = ni;
    } else if (j_open) {
      raw[nj].children.push_back(ni);
      merged = nj;
    } else {
      merged = raw.size();
      raw.push_back({dist, {ni, nj}, std::nullopt});
    }
    uf[ri] = rj;
    cluster_node[rj] = merged;
  }
  const std::size_t root = cluster_node[find(0)];

  // Order children by their smallest original point index so the canonical
  // leaf order follows the input order wherever the tree allows it.
  std::vector<std::size_t> min_point(raw.size(), n);
  std::function<std::size_t(std::size_t)> fill = [&](std::size_t r) -> std::size_t {
    if (raw[r].point) return min_point[r] = *raw[r].point;
    std::size_t m = n;
    for (std::size_t c : raw[r].children) m = std::min(m, fill(c));
    std::sort(raw[r].children.begin(), raw[r].children.end(),
              [&](std::size_t a, std::size_t b) { return min_point[a] < min_point[b]; });
    return min_point[r] = m;
  };
  fill(root);

  if (raw[root].point) {
    // Single point: wrap the leaf so the root stays an internal node.
    raw.push_back({0.0, {root}, std::nullopt});
    return UltrametricSpace::from_raw(raw, raw.size() - 1, ids, masses);
  }

  UltrametricSpace space = UltrametricSpace::from_raw(raw, root, ids, masses);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double want = distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (space.distance(space.index_of(ids[i]), space.index_of(ids[j])) != want) {
        std::vector<std::size_t> w = find_violating_triple(distances);
        std::ostringstream msg;
        msg << "strong triangle inequality fails";
        if (w.size() == 3) {
          msg << " for (" << ids[w[0]] << "," << ids[w[1]] << "," << ids[w[2]] << "): d("
              << ids[w[0]] << "," << ids[w[2]] << ")="
              << distances(static_cast<Eigen::Index>(w[0]), static_cast<Eigen::Index>(w[2]))
              << " > max(" << distances(static_cast<Eigen::Index>(w[0]), static_cast<Eigen::Index>(w[1]))
              << ","
              << distances(static_cast<Eigen::Index>(w[1]), static_cast<Eigen::Index>(w[2]))
              << ")";
        }
        throw Error(ErrorCode::NotUltrametric, msg.str(), w);
      }
    }
  }
  return space;
}

SpaceSpec to_spec(const UltrametricSpace& space) {
  std::function<SpaceSpec(NodeId)> emit = [&](NodeId id) {
    const Node& node = space.node(id);
    SpaceSpec out;
    out.radius = node.radius;
    for (NodeId c : node.children) {
      const Node& child = space.node(c);
      if (child.is_leaf()) {
        out.leaves.push_back({space.id(child.begin), space.mass(child.begin)});
      } else {
        out.children.push_back(emit(c));
      }
    }
    return out;
  };
  return emit(space.root());
}

UltrametricReport validate_ultrametric(const Matrix& distances) {
  UltrametricReport report;
  if (std::string problem = matrix_shape_problem(distances); !problem.empty()) {
    report.ok = false;
    report.message = problem;
    return report;
  }
  report.witness = find_violating_triple(distances);
  if (!report.witness.empty()) {
    report.ok = false;
    std::ostringstream msg;
    msg << "d(" << report.witness[0] << "," << report.witness[2] << ") > max(d("
        << report.witness[0] << "," << report.witness[1] << "), d(" << report.witness[1] << ","
        << report.witness[2] << "))";
    report.message = msg.str();
  }
  return report;
}

UltrametricReport validate_ultrametric(const UltrametricSpace& space) {
  UltrametricReport report = validate_ultrametric(space.distance_matrix());
  if (!report.ok) return report;
  const auto& nodes = space.nodes();
  for (NodeId a = 0; a < nodes.size(); ++a) {
    for (NodeId b = a + 1; b < nodes.size(); ++b) {
      const bool disjoint = nodes[a].end <= nodes[b].begin || nodes[b].end <= nodes[a].begin;
      const bool a_in_b = nodes[b].begin <= nodes[a].begin && nodes[a].end <= nodes[b].end;
      const bool b_in_a = nodes[a].begin <= nodes[b].begin && nodes[b].end <= nodes[a].end;
      if (!(disjoint || a_in_b || b_in_a)) {
        report.ok = false;
        report.message = "balls overlap without nesting";
        report.witness = {a, b};
        return report;
      }
    }
  }
  return report;
}

bool equivalent(const UltrametricSpace& a, const UltrametricSpace& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<std::size_t> map(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    try {
      map[i] = b.index_of(a.id(i));
    } catch (const Error&) {
      return false;
    }
    if (std::abs(a.mass(i) - b.mass(map[i])) > tol) return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (std::abs(a.distance(i, j) - b.distance(map[i], map[j])) > tol) return false;
    }
  }
  return true;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonDecreasingRadii: return "NonDecreasingRadii";
    case ErrorCode::NonPositiveMass: return "NonPositiveMass";
    case ErrorCode::EmptySpace: return "EmptySpace";
    case ErrorCode::NotUltrametric: return "NotUltrametric";
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::UnknownPoint: return "UnknownPoint";
    case ErrorCode::NegativeProfile: return "NegativeProfile";
    case ErrorCode::Asymmetric: return "Asymmetric";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OverlappingBalls: return "OverlappingBalls";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::NotIsotropic: return "NotIsotropic";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::GridRefinementFailed: return "GridRefinementFailed";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IntegratorFailure: return "IntegratorFailure";
    case ErrorCode::ConditionFailure: return "ConditionFailure";
    case ErrorCode::UnknownGenerator: return "UnknownGenerator";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

double UltrametricSpace::outer_radius(const Ball& b) const {
  const Node& nd = node(b.node);
  if (nd.parent == kNoNode) return std::numeric_limits<double>::infinity();
  return nodes_[nd.parent].radius;
}

}  // namespace ultraheat
