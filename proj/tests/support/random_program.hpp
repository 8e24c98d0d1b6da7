#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "provdl/provdl.hpp"

namespace provdl::testing {

struct GenConfig {
  std::size_t max_relations = 6;
  std::size_t max_rules = 10;
  std::size_t max_derived = 500;
  /// One recursive component over the derived relations, no negation of
  /// derived relations.
  bool single_stratum = false;
};

struct GeneratedProgram {
  std::uint64_t seed = 0;
  std::string source;
  Program program;
  std::size_t derived = 0;
  bool single_stratum = false;
};

namespace detail {

struct RelShape {
  std::string name;
  std::vector<AttrType> types;
  bool input = false;
  int level = 0;
};

class Generator {
 public:
  Generator(std::uint64_t seed, const GenConfig& cfg) : rng_(seed), cfg_(cfg) {}

  std::string make() {
    domain_ = pick(3, 5);
    std::size_t inputs = pick(1, 3);
    std::size_t derived_rels = cfg_.single_stratum ? pick(1, 2) : pick(1, cfg_.max_relations - inputs);
    for (std::size_t i = 0; i < inputs + derived_rels; ++i) {
      RelShape r;
      bool input = i < inputs;
      r.name = (input ? "e" : "r") + std::to_string(i);
      r.input = input;
      std::size_t arity = pick(1, 3);
      for (std::size_t a = 0; a < arity; ++a) r.types.push_back(chance(0.2) ? AttrType::Number : AttrType::Symbol);
      r.level = input ? 0 : (cfg_.single_stratum ? 1 : static_cast<int>(pick(1, 3)));
      rels_.push_back(r);
    }
    std::string out;
    for (const auto& r : rels_) {
      out += ".decl " + r.name + "(";
      for (std::size_t a = 0; a < r.types.size(); ++a)
        out += (a ? ", " : "") + std::string("a") + std::to_string(a) + ":" + std::string(to_string(r.types[a]));
      out += ")\n";
      if (r.input) out += ".input " + r.name + "\n";
    }
    for (const auto& r : rels_) {
      if (!r.input) continue;
      std::size_t n = pick(2, 12);
      for (std::size_t k = 0; k < n; ++k) {
        out += r.name + "(";
        for (std::size_t a = 0; a < r.types.size(); ++a) out += (a ? ", " : "") + constant(r.types[a]);
        out += ").\n";
      }
    }
    std::vector<std::size_t> heads;
    for (std::size_t i = 0; i < rels_.size(); ++i)
      if (!rels_[i].input) heads.push_back(i);
    std::size_t extra = cfg_.single_stratum ? heads.size() : 0;
    std::size_t rules = pick(1, cfg_.max_rules - extra);
    for (std::size_t k = 0; k < rules; ++k) {
      std::size_t h = k < heads.size() ? heads[k] : heads[pick(0, heads.size() - 1)];
      out += rule(h) + "\n";
    }
    if (cfg_.single_stratum) {
      // tie the derived relations into one recursive component
      for (std::size_t h : heads) out += recursive_rule(h, heads) + "\n";
    }
    return out;
  }

 private:
  std::size_t pick(std::size_t lo, std::size_t hi) {
    if (hi < lo) hi = lo;
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::string constant(AttrType t) {
    std::size_t v = pick(0, domain_ - 1);
    return t == AttrType::Number ? std::to_string(v) : "\"s" + std::to_string(v) + "\"";
  }

  struct Var {
    std::string name;
    AttrType type;
  };

  std::string atom(std::size_t rel, std::vector<Var>& vars, bool binding, double const_p, double anon_p) {
    const auto& r = rels_[rel];
    std::string s = r.name + "(";
    for (std::size_t a = 0; a < r.types.size(); ++a) {
      if (a) s += ", ";
      AttrType t = r.types[a];
      std::vector<std::size_t> same;
      for (std::size_t v = 0; v < vars.size(); ++v)
        if (vars[v].type == t) same.push_back(v);
      if (chance(const_p)) {
        s += constant(t);
      } else if (binding && chance(anon_p)) {
        s += "_";
      } else if (!same.empty() && (!binding || chance(0.6))) {
        s += vars[same[pick(0, same.size() - 1)]].name;
      } else if (binding) {
        Var v{"V" + std::to_string(vars.size()), t};
        vars.push_back(v);
        s += v.name;
      } else {
        s += constant(t);
      }
    }
    return s + ")";
  }

  std::vector<std::size_t> body_candidates(std::size_t head) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rels_.size(); ++i)
      if (rels_[i].level <= rels_[head].level) out.push_back(i);
    return out;
  }

  std::string rule(std::size_t head) {
    std::vector<Var> vars;
    auto cands = body_candidates(head);
    std::size_t n = pick(1, 3);
    std::vector<std::string> lits;
    for (std::size_t k = 0; k < n; ++k) lits.push_back(atom(cands[pick(0, cands.size() - 1)], vars, true, 0.1, 0.1));
    add_extras(head, vars, lits);
    return atom(head, vars, false, 0.05, 0) + " :- " + join(lits) + ".";
  }

  std::string recursive_rule(std::size_t head, const std::vector<std::size_t>& heads) {
    std::vector<Var> vars;
    std::vector<std::string> lits;
    for (std::size_t h : heads) lits.push_back(atom(h, vars, true, 0.05, 0.05));
    std::vector<std::size_t> inputs;
    for (std::size_t i = 0; i < rels_.size(); ++i)
      if (rels_[i].input) inputs.push_back(i);
    lits.push_back(atom(inputs[pick(0, inputs.size() - 1)], vars, true, 0.05, 0.05));
    add_extras(head, vars, lits);
    return atom(head, vars, false, 0.05, 0) + " :- " + join(lits) + ".";
  }

  void add_extras(std::size_t head, const std::vector<Var>& vars, std::vector<std::string>& lits) {
    if (vars.empty()) return;
    if (chance(0.25)) {
      const Var& a = vars[pick(0, vars.size() - 1)];
      std::vector<const Var*> same;
      for (const auto& v : vars)
        if (v.type == a.type && v.name != a.name) same.push_back(&v);
      std::string rhs = same.empty() || chance(0.3) ? constant(a.type) : same[pick(0, same.size() - 1)]->name;
      std::vector<std::string> ops = {"!=", "="};
      if (a.type == AttrType::Number) ops = {"!=", "=", "<", "<=", ">", ">="};
      lits.push_back(a.name + " " + ops[pick(0, ops.size() - 1)] + " " + rhs);
    }
    if (chance(0.25)) {
      std::vector<std::size_t> lower;
      for (std::size_t i = 0; i < rels_.size(); ++i)
        if (rels_[i].level < rels_[head].level) lower.push_back(i);
      if (!lower.empty()) {
        std::vector<Var> copy = vars;
        lits.push_back("!" + atom(lower[pick(0, lower.size() - 1)], copy, false, 0.2, 0));
      }
    }
  }

  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  }

  std::mt19937_64 rng_;
  GenConfig cfg_;
  std::size_t domain_ = 3;
  std::vector<RelShape> rels_;
};

}  // namespace detail

/// Number of non-input strata.
inline std::size_t rule_strata(const Program& p) {
  auto s = stratify(p);
  return static_cast<std::size_t>(
      std::count_if(s.strata.begin(), s.strata.end(), [](const Stratum& st) { return !st.is_input_only(); }));
}

/// A random stratified program with at least one and at most
/// cfg.max_derived derived tuples, or nullopt if this seed misses.
inline std::optional<GeneratedProgram> try_generate(std::uint64_t seed, const GenConfig& cfg = {}) {
  GeneratedProgram g;
  g.seed = seed;
  g.source = detail::Generator(seed, cfg).make();
  g.program = parse_program(g.source);
  oracle::Budget budget;
  budget.max_tuples = cfg.max_derived + 200;
  Instance full;
  try {
    full = oracle::naive_fixpoint(g.program, {}, budget);
  } catch (const ResourceExhausted&) {
    return std::nullopt;
  }
  g.derived = full.size() - oracle::input_instance(g.program).size();
  if (g.derived == 0 || g.derived > cfg.max_derived) return std::nullopt;
  g.single_stratum = rule_strata(g.program) == 1;
  return g;
}

/// `count` programs from consecutive seeds; every third one is drawn in
/// single-stratum mode.
inline std::vector<GeneratedProgram> corpus(std::size_t count, std::uint64_t first_seed = 1) {
  std::vector<GeneratedProgram> out;
  for (std::uint64_t seed = first_seed; out.size() < count; ++seed) {
    GenConfig cfg;
    cfg.single_stratum = seed % 3 == 0;
    if (auto g = try_generate(seed, cfg)) out.push_back(std::move(*g));
  }
  return out;
}

}  // namespace provdl::testing
