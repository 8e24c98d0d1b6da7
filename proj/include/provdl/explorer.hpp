#pragma once

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "provdl/database.hpp"
#include "provdl/join.hpp"
#include "provdl/proof_tree.hpp"

namespace provdl {

inline constexpr std::size_t kDefaultDepth = 5;
inline constexpr std::size_t kUnboundedDepth = std::numeric_limits<std::size_t>::max();

struct TupleRef {
  RelationId relation = 0;
  Tuple values;
  Annotation annotation;
};

/// One level of a proof: the body configuration that justifies a tuple.
struct Subproof {
  RuleId rule = 0;
  std::vector<TupleRef> children;
  /// Negated atoms, then constraints, ground and holding.
  std::vector<ProofNode> leaves;
};

struct CandidateRule {
  RuleId rule = 0;
  std::string text;
  /// The rule with head variables replaced by the target's constants.
  std::string instantiated;
  std::vector<std::string> free_variables;
};

/// One-level instantiation of a rule for an absent head. Body entries are
/// tuple nodes (positive atoms) or constraint nodes (negations, comparisons),
/// each with `holds` set.
struct FailedSubproof {
  GroundTuple head;
  RuleId rule = 0;
  std::vector<ProofNode> body;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(body.begin(), body.end(), [](const ProofNode& n) { return !n.holds; }));
  }
};

using VariableBindings = std::map<std::string, Term>;

/// Read-only queries over an evaluated provenance database. Construction
/// builds every index the queries need; afterwards all members are const and
/// safe to call concurrently.
class Explorer {
  using Relation = AnnotatedRelation;
  using Entry = Relation::Entry;

 public:
  explicit Explorer(Database& db) : db_(db) {
    for (const auto& rule : db_.rules()) {
      std::vector<bool> bound(rule.slot_count(), false);
      for (const auto& t : rule.head.args)
        if (t.is_variable) bound[t.slot] = true;
      Plan plan;
      plan.join = plan_join(rule, bound);
      for (std::size_t j = 0; j < rule.body.size(); ++j)
        plan.sources.push_back(make_source(db_.relation(rule.body[j].relation), plan.join.steps[j]));
      plan.slot_types.assign(rule.slot_count(), AttrType::Symbol);
      auto note = [&](const CompiledAtom& a) {
        const auto& decl = db_.program().relation(a.relation);
        for (std::size_t i = 0; i < a.args.size(); ++i)
          if (a.args[i].is_variable) plan.slot_types[a.args[i].slot] = decl.attributes[i].type;
      };
      for (const auto& a : rule.body) note(a);
      plans_.push_back(std::move(plan));
    }
  }

  const Database& database() const noexcept { return db_; }

  std::optional<Annotation> annotation_of(const GroundTuple& t) const {
    auto values = db_.lookup(t);
    if (!values) return std::nullopt;
    return db_.relation(t.relation).find(*values);
  }

  bool contains(const GroundTuple& t) const { return annotation_of(t).has_value(); }

  /// First configuration of the tuple's rule whose body tuples all have
  /// smaller stored heights.
  Subproof subproof(const GroundTuple& t) const {
    auto values = db_.lookup(t);
    if (!values || !db_.relation(t.relation).find(*values)) throw UnknownTuple(to_string(t) + " does not exist");
    return subproof(db_.program().id_of(t.relation), *values);
  }

  Subproof subproof(RelationId rel, std::span<const Value> values) const {
    auto ann = db_.relation(rel).find(values);
    if (!ann) throw UnknownTuple(to_string(db_.decode(rel, values)) + " does not exist");
    if (ann->rule == 0) throw IsEdb(to_string(db_.decode(rel, values)) + " is an input tuple");
    const CompiledRule& rule = db_.rule(ann->rule);
    const Plan& plan = plans_[ann->rule - 1];

    std::vector<JoinSource<true>> sources = plan.sources;
    for (auto& s : sources) s.height_below = ann->height;
    auto negated = [this](RelationId id) -> const Relation& { return db_.relation(id); };
    JoinRunner<true> runner(rule, plan.join, sources, negated);
    if (!bind_head(rule, values, runner.slots()))
      throw InternalError("stored tuple " + to_string(db_.decode(rel, values)) + " does not match rule " +
                          std::to_string(rule.id));

    Subproof out;
    out.rule = rule.id;
    bool found = false;
    runner.run([&](std::span<const Value> slots, std::span<const Entry* const> matched) {
      for (std::size_t j = 0; j < matched.size(); ++j)
        out.children.push_back({rule.body[j].relation, matched[j]->first, Relation::annotation(*matched[j])});
      out.leaves = ground_leaves(rule, plan, slots);
      found = true;
      return false;
    });
    if (!found)
      throw InternalError("no subproof below height " + std::to_string(ann->height) + " for " +
                          to_string(db_.decode(rel, values)));
    return out;
  }

  /// Proof-tree fragment rooted at t with `depth` levels expanded. Deeper
  /// derived nodes are left unexpanded with their annotation.
  ProofNode explain(const GroundTuple& t, std::size_t depth = kDefaultDepth) const {
    if (depth == 0) throw Error("depth must be positive");
    auto values = db_.lookup(t);
    std::optional<Annotation> ann;
    if (values) ann = db_.relation(t.relation).find(*values);
    if (!ann) throw UnknownTuple(to_string(t) + " does not exist");
    return build(db_.program().id_of(t.relation), *values, *ann, depth);
  }

  /// Rules that could derive the absent tuple t, with head bindings applied.
  std::vector<CandidateRule> negation_candidates(const GroundTuple& t) const {
    require_absent(t);
    std::vector<CandidateRule> out;
    for (const auto& r : db_.program().rules()) {
      if (r.head.relation != t.relation) continue;
      VariableBindings b;
      if (!unify_head(r, t, b)) continue;
      out.push_back({r.id, to_string(r), to_string(substitute(r, b)), free_variables(r, b)});
    }
    return out;
  }

  /// Body variables of the rule not fixed by unifying its head with t, in
  /// order of first occurrence.
  std::vector<std::string> negation_free_variables(RuleId id, const GroundTuple& t) const {
    const Rule& r = db_.program().rule(id);
    VariableBindings b;
    if (!unify_head(r, t, b))
      throw SemanticError(to_string(t) + " does not match the head of rule " + std::to_string(id));
    return free_variables(r, b);
  }

  /// Converts user text into a constant of the variable's type.
  Term parse_value(RuleId id, const std::string& variable, std::string_view text) const {
    const Rule& r = db_.program().rule(id);
    auto types = db_.program().variable_types(r);
    auto it = types.find(variable);
    if (it == types.end()) throw Error("rule " + std::to_string(id) + " has no variable " + variable);
    if (it->second == AttrType::Number) {
      std::int64_t n = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
      if (ec != std::errc{} || p != text.data() + text.size() || text.empty())
        throw Error("'" + std::string(text) + "' is not a number");
      return Term::num(n);
    }
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
    return Term::symbol(std::string(text));
  }

  /// Instantiates the rule for absent t under the bindings and marks each
  /// body part as holding or failing.
  FailedSubproof evaluate_failed_subproof(RuleId id, const GroundTuple& t, const VariableBindings& given) const {
    require_absent(t);
    const Rule& r = db_.program().rule(id);
    VariableBindings b;
    if (r.head.relation != t.relation || !unify_head(r, t, b))
      throw SemanticError(to_string(t) + " does not match the head of rule " + std::to_string(id));
    auto types = db_.program().variable_types(r);
    for (const auto& v : free_variables(r, b)) {
      auto it = given.find(v);
      if (it == given.end()) throw Error("missing value for variable " + v);
      bool number = it->second.kind == Term::Kind::Number;
      if (!it->second.is_constant() || number != (types.at(v) == AttrType::Number))
        throw Error("value for " + v + " must be a " + std::string(to_string(types.at(v))));
      b[v] = it->second;
    }
    FailedSubproof out;
    out.head = t;
    out.rule = id;
    for (const auto& a : r.body) {
      ProofNode n;
      n.tuple = ground(a, b);
      n.holds = exists(n.tuple);
      out.body.push_back(std::move(n));
    }
    for (const auto& a : r.negations) {
      GroundTuple g = ground(a, b);
      out.body.push_back(ProofNode::constraint("!" + to_string(g), !exists(g)));
    }
    for (const auto& c : r.constraints) {
      Constraint g{c.op, value(c.lhs, b), value(c.rhs, b)};
      out.body.push_back(ProofNode::constraint(to_string(g), holds(g)));
    }
    if (out.failures() == 0)
      throw InternalError("every part of rule " + std::to_string(id) + " holds for absent " + to_string(t));
    return out;
  }

 private:
  struct Plan {
    JoinPlan join;
    std::vector<JoinSource<true>> sources;
    std::vector<AttrType> slot_types;
  };

  ProofNode build(RelationId rel, std::span<const Value> values, Annotation ann, std::size_t depth) const {
    ProofNode node;
    node.tuple = db_.decode(rel, values);
    node.annotation = ann;
    if (ann.rule == 0) return node;
    if (depth == 0) {
      node.expanded = false;
      return node;
    }
    Subproof sp = subproof(rel, values);
    for (const auto& c : sp.children) node.children.push_back(build(c.relation, c.values, c.annotation, depth - 1));
    for (auto& leaf : sp.leaves) node.children.push_back(std::move(leaf));
    return node;
  }

  bool bind_head(const CompiledRule& rule, std::span<const Value> values, std::vector<Value>& slots) const {
    std::vector<bool> set(rule.slot_count(), false);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto& t = rule.head.args[i];
      if (!t.is_variable) {
        if (t.value != values[i]) return false;
      } else if (set[t.slot]) {
        if (slots[t.slot] != values[i]) return false;
      } else {
        set[t.slot] = true;
        slots[t.slot] = values[i];
      }
    }
    return true;
  }

  Term slot_term(const Plan& plan, std::span<const Value> slots, std::size_t slot) const {
    if (plan.slot_types[slot] == AttrType::Number) return Term::num(slots[slot]);
    return Term::symbol(db_.symbols().text(slots[slot]));
  }

  std::vector<ProofNode> ground_leaves(const CompiledRule& rule, const Plan& plan, std::span<const Value> slots) const {
    std::vector<ProofNode> out;
    for (const auto& a : rule.negations)
      out.push_back(ProofNode::constraint("!" + to_string(db_.decode(a.relation, instantiate(a, slots)))));
    const Rule& source = db_.program().rule(rule.id);
    for (std::size_t i = 0; i < rule.constraints.size(); ++i) {
      const auto& c = rule.constraints[i];
      auto term = [&](const CompiledTerm& ct, const Term& original) {
        return ct.is_variable ? slot_term(plan, slots, ct.slot) : original;
      };
      Constraint g{c.op, term(c.lhs, source.constraints[i].lhs), term(c.rhs, source.constraints[i].rhs)};
      out.push_back(ProofNode::constraint(to_string(g)));
    }
    return out;
  }

  /// Membership where `_` positions match anything.
  bool exists(const Atom& pattern) const {
    bool wild = std::any_of(pattern.args.begin(), pattern.args.end(), [](const Term& t) { return t.is_anonymous(); });
    if (!wild) return contains(pattern);
    std::vector<std::optional<Value>> want;
    for (const auto& t : pattern.args) {
      if (t.is_anonymous()) {
        want.emplace_back();
      } else if (t.kind == Term::Kind::Number) {
        want.emplace_back(t.number);
      } else if (auto v = db_.symbols().find(t.text)) {
        want.emplace_back(*v);
      } else {
        return false;
      }
    }
    bool found = false;
    db_.relation(pattern.relation).for_each([&](const Entry& e) {
      bool match = true;
      for (std::size_t i = 0; i < want.size() && match; ++i) match = !want[i] || *want[i] == e.first[i];
      found = found || match;
    });
    return found;
  }

  void require_absent(const GroundTuple& t) const {
    db_.program().id_of(t.relation);
    if (contains(t)) throw TupleExists(to_string(t) + " exists; use explain");
  }

  static bool unify_head(const Rule& r, const GroundTuple& t, VariableBindings& b) {
    if (r.head.args.size() != t.args.size()) return false;
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      const Term& p = r.head.args[i];
      if (p.is_constant()) {
        if (p != t.args[i]) return false;
      } else if (auto it = b.find(p.text); it != b.end()) {
        if (it->second != t.args[i]) return false;
      } else {
        b.emplace(p.text, t.args[i]);
      }
    }
    return true;
  }

  static std::vector<std::string> free_variables(const Rule& r, const VariableBindings& b) {
    std::vector<std::string> out;
    auto visit = [&](const Atom& a) {
      for (const auto& t : a.args)
        if (t.is_variable() && !t.is_anonymous() && !b.count(t.text) &&
            std::find(out.begin(), out.end(), t.text) == out.end())
          out.push_back(t.text);
    };
    for (const auto& a : r.body) visit(a);
    return out;
  }

  static Term value(const Term& t, const VariableBindings& b) {
    if (t.is_variable() && !t.is_anonymous())
      if (auto it = b.find(t.text); it != b.end()) return it->second;
    return t;
  }

  static Atom substitute(const Atom& a, const VariableBindings& b) {
    Atom out{a.relation, {}};
    for (const auto& t : a.args) out.args.push_back(value(t, b));
    return out;
  }

  static Rule substitute(const Rule& r, const VariableBindings& b) {
    Rule out = r;
    out.head = substitute(r.head, b);
    for (auto& a : out.body) a = substitute(a, b);
    for (auto& a : out.negations) a = substitute(a, b);
    for (auto& c : out.constraints) c = {c.op, value(c.lhs, b), value(c.rhs, b)};
    return out;
  }

  /// Ground tuple for an atom; anonymous positions stay `_`.
  static GroundTuple ground(const Atom& a, const VariableBindings& b) { return substitute(a, b); }

  static bool holds(const Constraint& c) {
    if (c.op == CmpOp::Eq) return c.lhs == c.rhs;
    if (c.op == CmpOp::Ne) return c.lhs != c.rhs;
    return compare(c.op, c.lhs.number, c.rhs.number);
  }

  Database& db_;
  std::vector<Plan> plans_;
};

}  // namespace provdl
