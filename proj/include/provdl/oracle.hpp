#pragma once

// Reference semantics for testing. Deliberately naive: works on decoded
// terms, re-instantiates every rule each round, and shares no code with the
// engine beyond the AST.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "provdl/ast.hpp"
#include "provdl/instance.hpp"
#include "provdl/proof_tree.hpp"

namespace provdl::oracle {

struct Budget {
  std::size_t max_tuples = 200000;
  std::size_t max_rounds = 100000;
};

using Bindings = std::map<std::string, Term>;
using ByRelation = std::map<std::string, std::vector<GroundTuple>>;
/// Preset heights for input tuples; absent entries default to 0.
using HeightMap = std::map<GroundTuple, Height>;

inline ByRelation group(const Instance& I) {
  ByRelation out;
  for (const auto& t : I) out[t.relation].push_back(t);
  return out;
}

inline std::optional<Term> value_of(const Term& t, const Bindings& b) {
  if (t.is_constant()) return t;
  if (auto it = b.find(t.text); it != b.end()) return it->second;
  return std::nullopt;
}

inline GroundTuple ground(const Atom& a, const Bindings& b) {
  GroundTuple out{a.relation, {}};
  for (const auto& t : a.args) out.args.push_back(*value_of(t, b));
  return out;
}

inline bool constraint_holds(const Constraint& c, const Bindings& b) {
  Term l = *value_of(c.lhs, b), r = *value_of(c.rhs, b);
  switch (c.op) {
    case CmpOp::Eq: return l == r;
    case CmpOp::Ne: return l != r;
    case CmpOp::Lt: return l.number < r.number;
    case CmpOp::Le: return l.number <= r.number;
    case CmpOp::Gt: return l.number > r.number;
    case CmpOp::Ge: return l.number >= r.number;
  }
  return false;
}

inline std::string ground_text(const Constraint& c, const Bindings& b) {
  return to_string(Constraint{c.op, *value_of(c.lhs, b), *value_of(c.rhs, b)});
}

/// Unifies a rule atom with a ground tuple, extending `b`. Bound names are
/// appended to `trail` so the caller can undo them.
inline bool unify(const Atom& pattern, const GroundTuple& t, Bindings& b, std::vector<std::string>& trail) {
  if (pattern.relation != t.relation || pattern.args.size() != t.args.size()) return false;
  std::size_t mark = trail.size();
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    const Term& p = pattern.args[i];
    if (p.is_anonymous()) continue;
    if (p.is_constant()) {
      if (p != t.args[i]) goto fail;
      continue;
    }
    if (auto it = b.find(p.text); it != b.end()) {
      if (it->second != t.args[i]) goto fail;
    } else {
      b.emplace(p.text, t.args[i]);
      trail.push_back(p.text);
    }
  }
  return true;
fail:
  while (trail.size() > mark) {
    b.erase(trail.back());
    trail.pop_back();
  }
  return false;
}

namespace detail {

template <class F>
bool instantiate(const Rule& r, std::size_t j, const ByRelation& pos, const Instance& neg, Bindings& b,
                 std::vector<GroundTuple>& body, F& f) {
  if (j == r.body.size()) {
    for (const auto& c : r.constraints)
      if (!constraint_holds(c, b)) return true;
    for (const auto& n : r.negations)
      if (neg.count(ground(n, b))) return true;
    return f(static_cast<const Bindings&>(b), static_cast<const std::vector<GroundTuple>&>(body));
  }
  auto it = pos.find(r.body[j].relation);
  if (it == pos.end()) return true;
  std::vector<std::string> trail;
  for (const auto& t : it->second) {
    if (!unify(r.body[j], t, b, trail)) continue;
    body.push_back(t);
    bool go_on = instantiate(r, j + 1, pos, neg, b, body, f);
    body.pop_back();
    for (const auto& name : trail) b.erase(name);
    trail.clear();
    if (!go_on) return false;
  }
  return true;
}

}  // namespace detail

/// Calls f(bindings, body tuples) for every valid instantiation of r whose
/// positive atoms lie in `pos`, whose negated atoms are absent from `neg` and
/// whose constraints hold. `start` pre-binds variables. f returns false to stop.
template <class F>
void for_each_instantiation(const Rule& r, const ByRelation& pos, const Instance& neg, F f,
                            Bindings start = {}) {
  std::vector<GroundTuple> body;
  detail::instantiate(r, 0, pos, neg, start, body, f);
}

/// Stratum rank per relation: positive edges keep rank, negative edges raise
/// it. Throws CyclicNegation when no finite ranking exists.
inline std::map<std::string, std::size_t> ranks(const Program& p) {
  std::map<std::string, std::size_t> rank;
  for (const auto& r : p.relations()) rank[r.name] = 0;
  const std::size_t limit = p.relations().size();
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : p.rules()) {
      std::size_t need = rank[r.head.relation];
      for (const auto& a : r.body) need = std::max(need, rank[a.relation]);
      for (const auto& a : r.negations) need = std::max(need, rank[a.relation] + 1);
      if (need > rank[r.head.relation]) {
        if (need > limit) throw CyclicNegation(r.negations.empty() ? r.head.relation : r.negations[0].relation,
                                               r.head.relation);
        rank[r.head.relation] = need;
        changed = true;
      }
    }
  }
  return rank;
}

inline Instance input_instance(const Program& p, const std::vector<Fact>& extra = {}) {
  Instance I(p.facts().begin(), p.facts().end());
  I.insert(extra.begin(), extra.end());
  return I;
}

/// One application of every rule of p to I; negation is read from I.
inline Instance gamma_step(const Program& p, const Instance& I) {
  Instance out = I;
  auto pos = group(I);
  for (const auto& r : p.rules())
    for_each_instantiation(r, pos, I, [&](const Bindings& b, const std::vector<GroundTuple>&) {
      out.insert(ground(r.head, b));
      return true;
    });
  return out;
}

/// Least fixpoint, stratum by stratum.
inline Instance naive_fixpoint(const Program& p, const std::vector<Fact>& extra = {}, const Budget& budget = {}) {
  Instance I = input_instance(p, extra);
  auto rank = ranks(p);
  std::size_t top = 0;
  for (const auto& [name, k] : rank) top = std::max(top, k);
  std::size_t rounds = 0;
  for (std::size_t k = 0; k <= top; ++k) {
    for (;;) {
      if (++rounds > budget.max_rounds) throw ResourceExhausted("oracle round budget exceeded");
      auto pos = group(I);
      Instance next = I;
      for (const auto& r : p.rules()) {
        if (rank[r.head.relation] != k) continue;
        for_each_instantiation(r, pos, I, [&](const Bindings& b, const std::vector<GroundTuple>&) {
          next.insert(ground(r.head, b));
          return true;
        });
      }
      if (next.size() > budget.max_tuples) throw ResourceExhausted("oracle tuple budget exceeded");
      if (next.size() == I.size()) break;
      I = std::move(next);
    }
  }
  return I;
}

/// Minimal proof height of every derivable tuple, by building the levels
/// T^0, T^1, ...: level k holds the inputs with preset height <= k and every
/// head whose positive body lies in level k-1. Negation is checked against
/// the full fixpoint.
inline ProvenanceInstance minimal_heights(const Program& p, const std::vector<Fact>& extra = {},
                                          const HeightMap& preset = {}, const Budget& budget = {}) {
  Instance inputs = input_instance(p, extra);
  for (const auto& [t, h] : preset) inputs.insert(t);
  Instance full = naive_fixpoint(p, {inputs.begin(), inputs.end()}, budget);
  auto input_height = [&](const GroundTuple& t) {
    auto it = preset.find(t);
    return it == preset.end() ? Height{0} : it->second;
  };
  Height last_input = 0;
  for (const auto& t : inputs) last_input = std::max(last_input, input_height(t));

  ProvenanceInstance h;
  Instance level;
  for (Height k = 0;; ++k) {
    if (k > budget.max_rounds) throw ResourceExhausted("oracle round budget exceeded");
    Instance next;
    for (const auto& t : inputs)
      if (input_height(t) <= k) next.insert(t);
    if (k > 0) {
      auto pos = group(level);
      for (const auto& r : p.rules())
        for_each_instantiation(r, pos, full, [&](const Bindings& b, const std::vector<GroundTuple>&) {
          next.insert(ground(r.head, b));
          return true;
        });
    }
    for (const auto& t : next) h.emplace(t, k);
    bool stable = next.size() == level.size();
    level = std::move(next);
    if (stable && k >= last_input) break;
  }
  return h;
}

inline Height minimal_height(const Program& p, const GroundTuple& t, const std::vector<Fact>& extra = {},
                             const HeightMap& preset = {}) {
  auto h = minimal_heights(p, extra, preset);
  if (auto it = h.find(t); it != h.end()) return it->second;
  throw NotDerivable(to_string(t) + " is not derivable");
}

/// Some full proof tree of minimal height for t, given the minimal heights.
inline ProofNode min_proof_tree(const Program& p, const ProvenanceInstance& heights, const Instance& inputs,
                                const HeightMap& preset, const GroundTuple& t) {
  auto it = heights.find(t);
  if (it == heights.end()) throw NotDerivable(to_string(t) + " is not derivable");
  Height h = it->second;
  ProofNode node;
  node.tuple = t;
  if (inputs.count(t)) {
    auto pre = preset.find(t);
    if ((pre == preset.end() ? 0 : pre->second) == h) {
      node.annotation = {0, h};
      return node;
    }
  }
  Instance below_set;
  for (const auto& [u, hu] : heights)
    if (hu < h) below_set.insert(u);
  auto below = group(below_set);
  Instance all = tuples_of(heights);
  for (const auto& r : p.rules()) {
    if (r.head.relation != t.relation) continue;
    Bindings start;
    std::vector<std::string> trail;
    if (!unify(r.head, t, start, trail)) continue;
    bool found = false;
    for_each_instantiation(
        r, below, all,
        [&](const Bindings& b, const std::vector<GroundTuple>& body) {
          node.annotation = {r.id, h};
          for (const auto& u : body) node.children.push_back(min_proof_tree(p, heights, inputs, preset, u));
          for (const auto& n : r.negations) node.children.push_back(ProofNode::constraint("!" + to_string(ground(n, b))));
          for (const auto& c : r.constraints) node.children.push_back(ProofNode::constraint(ground_text(c, b)));
          found = true;
          return false;
        },
        start);
    if (found) return node;
  }
  throw InternalError("no configuration of height below " + std::to_string(h) + " for " + to_string(t));
}

inline ProofNode enumerate_min_proof_tree(const Program& p, const GroundTuple& t, const std::vector<Fact>& extra = {},
                                          const HeightMap& preset = {}) {
  auto heights = minimal_heights(p, extra, preset);
  Instance inputs = input_instance(p, extra);
  for (const auto& [u, h] : preset) inputs.insert(u);
  return min_proof_tree(p, heights, inputs, preset, t);
}

/// One full pass over a final provenance instance: every rule instantiation
/// whose max(body heights) + 1 is below the stored head height. Empty means
/// the stored heights are minimal with respect to single rule applications.
inline std::vector<std::string> minimality_violations(const Program& p, const ProvenanceInstance& stored) {
  std::vector<std::string> out;
  Instance all = tuples_of(stored);
  auto pos = group(all);
  for (const auto& r : p.rules()) {
    for_each_instantiation(r, pos, all, [&](const Bindings& b, const std::vector<GroundTuple>& body) {
      Height h = 0;
      for (const auto& u : body) h = std::max(h, stored.at(u));
      GroundTuple head = ground(r.head, b);
      auto it = stored.find(head);
      if (it == stored.end()) {
        out.push_back("missing head " + to_string(head) + " of rule " + std::to_string(r.id));
      } else if (h + 1 < it->second) {
        out.push_back(to_string(head) + " stored at " + std::to_string(it->second) + " but rule " +
                      std::to_string(r.id) + " derives it at " + std::to_string(h + 1));
      }
      return true;
    });
  }
  return out;
}

}  // namespace provdl::oracle
