#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace ultraheat {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Minimal separation between radius labels along a root-to-leaf path.
inline constexpr double kRadiusSeparation = 1e-12;

struct LeafSpec {
  std::string id;
  double mass = 1.0;
};

/// Nested ball description: a ball of `radius` whose members are the listed
/// sub-balls followed by the listed singleton points.
struct SpaceSpec {
  double radius = 0.0;
  std::vector<SpaceSpec> children;
  std::vector<LeafSpec> leaves;
};

/// A tree node. Leaves carry radius 0 and exactly one point. Because points
/// are stored in depth-first leaf order, the members of every node form the
/// contiguous index range [begin, end).
struct Node {
  double radius = 0.0;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::size_t begin = 0;
  std::size_t end = 0;
  double volume = 0.0;
  std::size_t depth = 0;

  bool is_leaf() const { return children.empty(); }
  std::size_t size() const { return end - begin; }
};

/// A closed ball {y : d(x,y) <= r}. In an ultrametric space every such set is
/// a tree node; `radius` is that node's label (0 for singletons).
struct Ball {
  NodeId node = kNoNode;
  double radius = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double volume = 0.0;

  bool contains(std::size_t point) const { return point >= begin && point < end; }
  std::size_t size() const { return end - begin; }
  std::vector<std::size_t> members() const;
  /// 1_B as a vector over all `n` points.
  Vector indicator(std::size_t n) const;

  friend bool operator==(const Ball& a, const Ball& b) {
    return a.begin == b.begin && a.end == b.end;
  }
};

/// Finite ultrametric measure space stored as a rooted ball tree.
/// Immutable after construction.
class UltrametricSpace {
 public:
  std::size_t size() const { return ids_.size(); }
  double diam() const { return nodes_[root()].radius; }

  const std::string& id(std::size_t point) const;
  std::size_t index_of(const std::string& id) const;
  double mass(std::size_t point) const;
  const Vector& masses() const { return masses_; }
  double total_mass() const { return nodes_[root()].volume; }

  /// Radius of the lowest common ancestor; 0 iff x == y.
  double distance(std::size_t x, std::size_t y) const;
  NodeId lca(std::size_t x, std::size_t y) const;
  Matrix distance_matrix() const;

  Ball ball(std::size_t x, double r) const;
  std::vector<Ball> partition(double r) const;
  double volume(std::size_t x, double r) const { return ball(x, r).volume; }

  /// Every tree node as a ball, including singletons.
  std::vector<Ball> balls() const;
  Ball ball_of(NodeId node) const;
  /// B equals ball(x, r) for every r in [radius, outer_radius); infinity for
  /// the root.
  double outer_radius(const Ball& b) const;

  /// Sorted distinct positive distance values (internal node radii).
  const std::vector<double>& levels() const { return levels_; }

  NodeId root() const { return 0; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Node>& nodes() const { return nodes_; }
  NodeId leaf(std::size_t point) const { return leaf_of_.at(point); }

  /// Internal constructor input: a parent-linked tree whose leaves reference
  /// points of the `ids` / `masses` arrays. Used by the builders below.
  struct RawNode {
    double radius = 0.0;
    std::vector<std::size_t> children;
    std::optional<std::size_t> point;
  };
  static UltrametricSpace from_raw(const std::vector<RawNode>& raw, std::size_t raw_root,
                                   const std::vector<std::string>& ids,
                                   const std::vector<double>& masses);

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> leaf_of_;
  std::vector<std::string> ids_;
  Vector masses_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> levels_;

  void check_point(std::size_t point) const;
};

UltrametricSpace build_tree(const SpaceSpec& spec);

/// Builds the ball tree of a symmetric ultrametric matrix by merging clusters
/// at increasing distance thresholds. `ids` defaults to "0", "1", ...
UltrametricSpace from_distance_matrix(const Matrix& distances, const std::vector<double>& masses,
                                      std::vector<std::string> ids = {});

/// Inverse of build_tree (up to point order).
SpaceSpec to_spec(const UltrametricSpace& space);

struct UltrametricReport {
  bool ok = true;
  std::string message;
  /// (x, z, y) with d(x,y) > max(d(x,z), d(z,y)), or two overlapping nodes.
  std::vector<std::size_t> witness;
};

UltrametricReport validate_ultrametric(const UltrametricSpace& space);
/// Checks a raw distance matrix without building a tree.
UltrametricReport validate_ultrametric(const Matrix& distances);

/// Same point set, masses and pairwise distances (identified by id).
bool equivalent(const UltrametricSpace& a, const UltrametricSpace& b, double tol = 0.0);

}  // namespace ultraheat
