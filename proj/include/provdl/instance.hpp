#pragma once

#include <map>
#include <set>

#include "provdl/ast.hpp"

namespace provdl {

/// Decoded tuple, relation name plus constant terms. Independent of any
/// symbol table, so engine and oracle results compare directly.
using GroundTuple = Atom;
using Instance = std::set<GroundTuple>;
/// An instance together with a height per member.
using ProvenanceInstance = std::map<GroundTuple, Height>;

inline Instance tuples_of(const ProvenanceInstance& p) {
  Instance out;
  for (const auto& [t, h] : p) out.insert(out.end(), t);
  return out;
}

/// (I, h) ⊑ (I', h'): I ⊆ I' and h'(t) <= h(t) on I.
inline bool precedes(const ProvenanceInstance& a, const ProvenanceInstance& b) {
  for (const auto& [t, h] : a) {
    auto it = b.find(t);
    if (it == b.end() || it->second > h) return false;
  }
  return true;
}

}  // namespace provdl
