#pragma once

// Binary tree of superquadric pairs addressed by (depth, index), depth >= 1
// and 1 <= index <= 2^(depth-1).
//
// Child order: node (d, i) spawns (d+1, 2i-1) from its superquadric B and
// (d+1, 2i) from its superquadric A.

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "sqdecomp/error.hpp"
#include "sqdecomp/geometry.hpp"
#include "sqdecomp/splitter.hpp"
#include "sqdecomp/superquadric.hpp"

namespace sqdecomp {

struct NodeId {
  int depth = 1;
  int index = 1;

  auto operator<=>(const NodeId&) const = default;

  bool valid() const { return depth >= 1 && depth < 31 && index >= 1 && index <= (1 << (depth - 1)); }
  std::string str() const { return "(" + std::to_string(depth) + ", " + std::to_string(index) + ")"; }
};

/// One superquadric of a pair node.
struct SqRef {
  NodeId node;
  Side side = Side::A;

  auto operator<=>(const SqRef&) const = default;
};

inline int nodes_at_level(int depth) { return 1 << (depth - 1); }

namespace detail {
inline void require_non_root(NodeId id) {
  if (!id.valid()) throw InputError("invalid node " + id.str());
  if (id.depth == 1) throw InputError("root node has no parent");
}
}  // namespace detail

inline NodeId parent_node(NodeId id) {
  detail::require_non_root(id);
  return {id.depth - 1, (id.index + 1) / 2};
}

/// The parent superquadric whose share of space node `id` refines.
inline SqRef parent_sq(NodeId id) {
  detail::require_non_root(id);
  return {parent_node(id), id.index % 2 == 0 ? Side::A : Side::B};
}

inline SqRef uncle_sq(NodeId id) {
  const SqRef p = parent_sq(id);
  return {p.node, other(p.side)};
}

inline NodeId child_of(NodeId parent, Side side) {
  return {parent.depth + 1, side == Side::A ? 2 * parent.index : 2 * parent.index - 1};
}

struct SqPairNode {
  NodeId id;
  Superquadric a;
  Superquadric b;
  Labels labels;
  bool degenerate = false;
  double loss = 0.0;

  const Superquadric& get(Side s) const { return s == Side::A ? a : b; }
};

class SqTree {
 public:
  SqTree() = default;
  SqTree(int max_depth, std::vector<Vec3> points) : max_depth_(max_depth), points_(std::move(points)) {
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  }

  int max_depth() const { return max_depth_; }
  const std::vector<Vec3>& points() const { return points_; }
  const std::map<NodeId, SqPairNode>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }

  bool contains(NodeId id) const { return nodes_.count(id) != 0; }

  const SqPairNode& node(NodeId id) const {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) throw InputError("tree has no node " + id.str());
    return it->second;
  }

  const Superquadric& sq(const SqRef& ref) const { return node(ref.node).get(ref.side); }

  /// Inserts or replaces a node. Non-root nodes need their parent present.
  void set_node(SqPairNode n) {
    if (!n.id.valid() || n.id.depth > max_depth_) throw InputError("node " + n.id.str() + " out of range");
    if (n.id.depth > 1 && !contains(parent_node(n.id)))
      throw InputError("node " + n.id.str() + " has no parent in the tree");
    if (!points_.empty() && !n.labels.empty() && n.labels.size() != points_.size())
      throw InputError("node " + n.id.str() + " label count does not match point count");
    nodes_[n.id] = std::move(n);
  }

  /// True when all 2^(d-1) nodes of level d are present.
  bool level_complete(int depth) const {
    if (depth < 1 || depth > max_depth_) return false;
    for (int i = 1; i <= nodes_at_level(depth); ++i)
      if (!contains({depth, i})) return false;
    return true;
  }

  /// Deepest complete level (0 when even the root is missing).
  int fitted_depth() const {
    int d = 0;
    while (d < max_depth_ && level_complete(d + 1)) ++d;
    return d;
  }

  /// Both superquadrics of every node at level d, ordered by index, A first.
  std::vector<Superquadric> all_leaves_at(int depth) const {
    if (!level_complete(depth)) throw InputError("level " + std::to_string(depth) + " is not fitted");
    std::vector<Superquadric> out;
    out.reserve(2 * static_cast<std::size_t>(nodes_at_level(depth)));
    for (int i = 1; i <= nodes_at_level(depth); ++i) {
      const auto& n = node({depth, i});
      out.push_back(n.a);
      out.push_back(n.b);
    }
    return out;
  }

  /// Like all_leaves_at, skipping degenerate nodes.
  std::vector<Superquadric> active_leaves_at(int depth) const {
    if (!level_complete(depth)) throw InputError("level " + std::to_string(depth) + " is not fitted");
    std::vector<Superquadric> out;
    for (int i = 1; i <= nodes_at_level(depth); ++i) {
      const auto& n = node({depth, i});
      if (n.degenerate) continue;
      out.push_back(n.a);
      out.push_back(n.b);
    }
    return out;
  }

 private:
  int max_depth_ = 1;
  std::vector<Vec3> points_;
  std::map<NodeId, SqPairNode> nodes_;
};

/// Labels of node `id` derived from its parent's labels and split.
inline Labels derive_labels(const SqTree& tree, NodeId id, unsigned threads = 1) {
  const SqRef ps = parent_sq(id);
  const auto& parent = tree.node(ps.node);
  const auto assignment = split_pair(parent.a, parent.b, tree.points(), threads);
  return child_labels(parent.labels, assignment, ps.side);
}

/// Number of non-root nodes whose stored labels differ from the labels
/// recomputed top-down from the root.
inline std::size_t audit_labels(const SqTree& tree) {
  std::map<NodeId, Labels> recomputed;
  std::size_t mismatches = 0;
  for (const auto& [id, n] : tree.nodes()) {  // map order is breadth-first
    if (id.depth == 1) {
      recomputed[id] = n.labels;
      continue;
    }
    const SqRef ps = parent_sq(id);
    const auto& parent = tree.node(ps.node);
    const auto assignment = split_pair(parent.a, parent.b, tree.points());
    Labels lab = child_labels(recomputed.at(ps.node), assignment, ps.side);
    if (lab != n.labels) ++mismatches;
    recomputed[id] = std::move(lab);
  }
  return mismatches;
}

}  // namespace sqdecomp
