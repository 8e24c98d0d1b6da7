#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "provdl/instance.hpp"

namespace provdl {

/// A node of a proof-tree fragment. Tuple nodes carry the stored annotation;
/// constraint nodes are leaves for comparisons and negated atoms.
struct ProofNode {
  enum class Kind { Tuple, Constraint };

  Kind kind = Kind::Tuple;
  GroundTuple tuple;
  Annotation annotation;
  /// false for frontier nodes whose subproof was not constructed.
  bool expanded = true;
  std::string text;
  bool holds = true;
  std::vector<ProofNode> children;

  static ProofNode constraint(std::string text, bool holds = true) {
    ProofNode n;
    n.kind = Kind::Constraint;
    n.text = std::move(text);
    n.holds = holds;
    return n;
  }

  bool is_tuple() const noexcept { return kind == Kind::Tuple; }
  friend bool operator==(const ProofNode&, const ProofNode&) = default;
};

inline std::size_t node_count(const ProofNode& n) {
  std::size_t c = 1;
  for (const auto& k : n.children) c += node_count(k);
  return c;
}

/// Height counting tuple edges: input leaves are 0, constraint leaves add
/// nothing, unexpanded nodes report their annotation.
inline Height tree_height(const ProofNode& n) {
  if (!n.is_tuple()) return 0;
  if (!n.expanded) return n.annotation.height;
  if (n.annotation.rule == 0) return 0;
  Height h = 0;
  for (const auto& k : n.children)
    if (k.is_tuple()) h = std::max(h, tree_height(k));
  return h + 1;
}

/// Longest root-to-leaf path in levels, counting every node (the depth a
/// fragment occupies on screen).
inline std::size_t depth_of(const ProofNode& n) {
  std::size_t d = 0;
  for (const auto& k : n.children) d = std::max(d, depth_of(k));
  return d + 1;
}

}  // namespace provdl
