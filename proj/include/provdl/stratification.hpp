#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "provdl/ast.hpp"

namespace provdl {

struct PrecedenceEdge {
  RelationId from;  // body relation
  RelationId to;    // head relation
  bool negative = false;

  friend bool operator==(const PrecedenceEdge&, const PrecedenceEdge&) = default;
};

struct PrecedenceGraph {
  std::size_t node_count = 0;
  std::vector<PrecedenceEdge> edges;
  /// Relations that head at least one rule.
  std::vector<bool> has_rules;
};

struct Stratum {
  std::vector<RelationId> relations;
  std::vector<RuleId> rules;

  bool is_input_only() const noexcept { return rules.empty(); }
};

struct Stratification {
  std::vector<Stratum> strata;
  /// stratum index per relation
  std::vector<std::size_t> stratum_of;
};

/// One edge per distinct (body relation, head relation, polarity) triple,
/// ordered by head relation, then body relation, in declaration order.
inline PrecedenceGraph build_precedence_graph(const Program& p) {
  PrecedenceGraph g;
  g.node_count = p.relations().size();
  g.has_rules.assign(g.node_count, false);
  for (const auto& r : p.rules()) {
    RelationId head = p.id_of(r.head.relation);
    g.has_rules[head] = true;
    auto add = [&](const Atom& a, bool negative) {
      PrecedenceEdge e{p.id_of(a.relation), head, negative};
      if (std::find(g.edges.begin(), g.edges.end(), e) == g.edges.end()) g.edges.push_back(e);
    };
    for (const auto& a : r.body) add(a, false);
    for (const auto& a : r.negations) add(a, true);
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const PrecedenceEdge& a, const PrecedenceEdge& b) {
    return std::tie(a.to, a.from, a.negative) < std::tie(b.to, b.from, b.negative);
  });
  return g;
}

/// SCC condensation in topological order. Input-only relations lead; among
/// ready components the one holding the earliest-declared relation goes first.
/// Throws CyclicNegation if a negative edge lies inside a component.
inline Stratification stratify(const PrecedenceGraph& g, const Program& p) {
  const std::size_t n = g.node_count;
  std::vector<std::vector<RelationId>> succ(n);
  for (const auto& e : g.edges) succ[e.from].push_back(e.to);

  // Tarjan, roots visited in declaration order.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<RelationId> stack;
  int counter = 0, ncomp = 0;
  std::function<void(RelationId)> connect = [&](RelationId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (RelationId w : succ[v]) {
      if (index[w] < 0) {
        connect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      RelationId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = ncomp;
      } while (w != v);
      ++ncomp;
    }
  };
  for (RelationId v = 0; v < n; ++v)
    if (index[v] < 0) connect(v);

  for (const auto& e : g.edges)
    if (e.negative && comp[e.from] == comp[e.to])
      throw CyclicNegation(p.relation(e.from).name, p.relation(e.to).name);

  // Kahn over the condensation with a deterministic priority.
  std::vector<std::vector<RelationId>> members(ncomp);
  for (RelationId v = 0; v < n; ++v) members[comp[v]].push_back(v);
  std::vector<std::vector<int>> comp_succ(ncomp);
  std::vector<int> indegree(ncomp, 0);
  for (const auto& e : g.edges) {
    int a = comp[e.from], b = comp[e.to];
    if (a == b) continue;
    if (std::find(comp_succ[a].begin(), comp_succ[a].end(), b) != comp_succ[a].end()) continue;
    comp_succ[a].push_back(b);
    ++indegree[b];
  }
  auto input_only = [&](int c) {
    return std::none_of(members[c].begin(), members[c].end(), [&](RelationId v) { return g.has_rules[v]; });
  };
  auto before = [&](int a, int b) {
    bool ia = input_only(a), ib = input_only(b);
    if (ia != ib) return ia;
    return members[a].front() < members[b].front();
  };

  Stratification s;
  s.stratum_of.assign(n, 0);
  std::vector<int> ready;
  for (int c = 0; c < ncomp; ++c)
    if (indegree[c] == 0) ready.push_back(c);
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end(), before);
    int c = *it;
    ready.erase(it);
    Stratum st;
    st.relations = members[c];
    for (RelationId v : st.relations) s.stratum_of[v] = s.strata.size();
    s.strata.push_back(std::move(st));
    for (int d : comp_succ[c])
      if (--indegree[d] == 0) ready.push_back(d);
  }
  for (const auto& r : p.rules()) s.strata[s.stratum_of[p.id_of(r.head.relation)]].rules.push_back(r.id);
  return s;
}

inline Stratification stratify(const Program& p) { return stratify(build_precedence_graph(p), p); }

/// One stratum per line: relation names separated by spaces.
inline std::string dump_strata(const Stratification& s, const Program& p) {
  std::string out;
  for (const auto& st : s.strata) {
    for (std::size_t i = 0; i < st.relations.size(); ++i) {
      if (i) out += ' ';
      out += p.relation(st.relations[i]).name;
    }
    out += '\n';
  }
  return out;
}

}  // namespace provdl
