#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "provdl/value.hpp"

namespace provdl {

enum class AttrType { Symbol, Number };

inline std::string_view to_string(AttrType t) { return t == AttrType::Symbol ? "symbol" : "number"; }

struct Attribute {
  std::string name;
  AttrType type = AttrType::Symbol;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct RelationDecl {
  std::string name;
  std::vector<Attribute> attributes;
  bool is_input = false;
  bool is_output = false;

  std::size_t arity() const noexcept { return attributes.size(); }
  friend bool operator==(const RelationDecl&, const RelationDecl&) = default;
};

/// A rule argument: a named variable, the anonymous variable `_`, or a constant.
struct Term {
  enum class Kind { Variable, Symbol, Number };

  Kind kind = Kind::Variable;
  std::string text;  // variable name or symbol text
  std::int64_t number = 0;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name), 0}; }
  static Term symbol(std::string text) { return {Kind::Symbol, std::move(text), 0}; }
  static Term num(std::int64_t n) { return {Kind::Number, {}, n}; }

  bool is_variable() const noexcept { return kind == Kind::Variable; }
  bool is_anonymous() const noexcept { return kind == Kind::Variable && text == "_"; }
  bool is_constant() const noexcept { return kind != Kind::Variable; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  std::string relation;
  std::vector<Term> args;

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

inline std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

inline bool is_order_comparison(CmpOp op) noexcept { return op != CmpOp::Eq && op != CmpOp::Ne; }

inline bool compare(CmpOp op, Value lhs, Value rhs) noexcept {
  switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return lhs != rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
  }
  return false;
}

struct Constraint {
  CmpOp op = CmpOp::Eq;
  Term lhs;
  Term rhs;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct Rule {
  RuleId id = 0;
  Atom head;
  std::vector<Atom> body;
  std::vector<Atom> negations;
  std::vector<Constraint> constraints;

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// A ground atom; every argument is a constant.
using Fact = Atom;

// ---------------------------------------------------------------------------
// Printing

inline std::string quote_symbol(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

inline std::string to_string(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Variable: return t.text;
    case Term::Kind::Symbol: return quote_symbol(t.text);
    case Term::Kind::Number: return std::to_string(t.number);
  }
  return {};
}

inline std::string to_string(const Atom& a, std::string_view separator = ", ") {
  std::string out = a.relation + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += separator;
    out += to_string(a.args[i]);
  }
  return out + ")";
}

inline std::string to_string(const Constraint& c) {
  return to_string(c.lhs) + " " + std::string(to_string(c.op)) + " " + to_string(c.rhs);
}

/// Body literals in canonical order: positive atoms, negations, constraints.
inline std::vector<std::string> body_literals(const Rule& r, std::string_view separator = ", ") {
  std::vector<std::string> out;
  for (const auto& a : r.body) out.push_back(to_string(a, separator));
  for (const auto& a : r.negations) out.push_back("!" + to_string(a, separator));
  for (const auto& c : r.constraints) out.push_back(to_string(c));
  return out;
}

inline std::string to_string(const Rule& r) {
  std::string out = to_string(r.head);
  auto lits = body_literals(r);
  if (lits.empty()) return out + ".";
  out += " :- ";
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i) out += ", ";
    out += lits[i];
  }
  return out + ".";
}

// ---------------------------------------------------------------------------

/// A validated Datalog program. Construction goes through add_relation /
/// add_rule / add_fact, which enforce declaration, arity, typing and
/// groundedness, so every stored rule is well formed.
class Program {
 public:
  const std::vector<RelationDecl>& relations() const noexcept { return relations_; }
  const std::vector<Rule>& rules() const noexcept { return rules_; }
  const std::vector<Fact>& facts() const noexcept { return facts_; }

  std::optional<RelationId> find(std::string_view name) const {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
  }

  RelationId id_of(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw SemanticError("undeclared relation '" + std::string(name) + "'");
  }

  const RelationDecl& relation(RelationId id) const { return relations_.at(id); }
  const RelationDecl& relation(std::string_view name) const { return relations_[id_of(name)]; }

  /// Rule by 1-based id.
  const Rule& rule(RuleId id) const {
    if (id == 0 || id > rules_.size()) throw Error("no rule with number " + std::to_string(id));
    return rules_[id - 1];
  }

  RelationId add_relation(RelationDecl decl) {
    if (decl.attributes.empty())
      throw SemanticError("relation '" + decl.name + "' must have at least one attribute");
    if (find(decl.name)) throw SemanticError("duplicate declaration of relation '" + decl.name + "'");
    auto id = static_cast<RelationId>(relations_.size());
    index_.emplace(decl.name, id);
    relations_.push_back(std::move(decl));
    return id;
  }

  RelationDecl& relation_mut(std::string_view name) { return relations_[id_of(name)]; }

  /// Validates and appends a rule, assigning the next rule number.
  RuleId add_rule(Rule rule) {
    check_rule(rule);
    rule.id = static_cast<RuleId>(rules_.size() + 1);
    rules_.push_back(std::move(rule));
    return rules_.back().id;
  }

  void add_fact(Fact fact) {
    check_atom(fact, "fact");
    for (const auto& t : fact.args)
      if (!t.is_constant())
        throw SemanticError("fact " + to_string(fact) + " must be ground, found variable '" + t.text + "'");
    facts_.push_back(std::move(fact));
  }

  friend bool operator==(const Program& a, const Program& b) {
    return a.relations_ == b.relations_ && a.rules_ == b.rules_ && a.facts_ == b.facts_;
  }

  /// Variable types implied by the atoms of a rule; throws on a clash.
  std::map<std::string, AttrType> variable_types(const Rule& rule) const {
    std::map<std::string, AttrType> types;
    auto visit = [&](const Atom& a) {
      const auto& decl = relation(a.relation);
      for (std::size_t i = 0; i < a.args.size(); ++i) {
        const Term& t = a.args[i];
        if (!t.is_variable() || t.is_anonymous()) continue;
        auto want = decl.attributes[i].type;
        auto [it, inserted] = types.emplace(t.text, want);
        if (!inserted && it->second != want)
          throw SemanticError("variable " + t.text + " is used both as " + std::string(to_string(it->second)) +
                              " and as " + std::string(to_string(want)) + " in rule " + to_string(rule));
      }
    };
    visit(rule.head);
    for (const auto& a : rule.body) visit(a);
    for (const auto& a : rule.negations) visit(a);
    return types;
  }

 private:
  void check_atom(const Atom& a, std::string_view where) const {
    auto id = find(a.relation);
    if (!id) throw SemanticError("undeclared relation '" + a.relation + "' in " + std::string(where));
    const auto& decl = relations_[*id];
    if (a.args.size() != decl.arity())
      throw SemanticError("arity mismatch for '" + a.relation + "': declared " + std::to_string(decl.arity()) +
                          ", used with " + std::to_string(a.args.size()) + " in " + std::string(where));
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      const Term& t = a.args[i];
      if (t.is_variable()) continue;
      auto want = decl.attributes[i].type;
      auto got = t.kind == Term::Kind::Symbol ? AttrType::Symbol : AttrType::Number;
      if (want != got)
        throw SemanticError("argument " + std::to_string(i + 1) + " of '" + a.relation + "' expects a " +
                            std::string(to_string(want)) + ", got " + to_string(t) + " in " + std::string(where));
    }
  }

  void check_rule(const Rule& rule) const {
    const std::string text = to_string(rule);
    check_atom(rule.head, "rule " + text);
    for (const auto& a : rule.body) check_atom(a, "rule " + text);
    for (const auto& a : rule.negations) check_atom(a, "rule " + text);

    for (const auto& t : rule.head.args)
      if (t.is_anonymous()) throw SemanticError("anonymous variable in the head of rule " + text);
    for (const auto& a : rule.negations)
      for (const auto& t : a.args)
        if (t.is_anonymous()) throw SemanticError("anonymous variable in a negated atom of rule " + text);

    std::set<std::string> grounded;
    for (const auto& a : rule.body)
      for (const auto& t : a.args)
        if (t.is_variable() && !t.is_anonymous()) grounded.insert(t.text);

    auto require = [&](const Term& t) {
      if (t.is_variable() && !t.is_anonymous() && !grounded.count(t.text))
        throw SemanticError("ungrounded variable " + t.text + " in rule " + text);
    };
    for (const auto& t : rule.head.args) require(t);
    for (const auto& a : rule.negations)
      for (const auto& t : a.args) require(t);
    for (const auto& c : rule.constraints) {
      if (c.lhs.is_anonymous() || c.rhs.is_anonymous())
        throw SemanticError("anonymous variable in a constraint of rule " + text);
      require(c.lhs);
      require(c.rhs);
    }

    auto types = variable_types(rule);
    auto type_of = [&](const Term& t) -> AttrType {
      if (t.kind == Term::Kind::Symbol) return AttrType::Symbol;
      if (t.kind == Term::Kind::Number) return AttrType::Number;
      return types.at(t.text);
    };
    for (const auto& c : rule.constraints) {
      auto lt = type_of(c.lhs);
      auto rt = type_of(c.rhs);
      if (is_order_comparison(c.op) && (lt != AttrType::Number || rt != AttrType::Number))
        throw SemanticError("order comparison " + to_string(c) + " needs numbers in rule " + text);
      if (lt != rt) throw SemanticError("type mismatch in constraint " + to_string(c) + " in rule " + text);
    }
  }

  std::vector<RelationDecl> relations_;
  std::unordered_map<std::string, RelationId> index_;
  std::vector<Rule> rules_;
  std::vector<Fact> facts_;
};

/// Source form of a whole program; parse_program(to_source(p)) == p.
inline std::string to_source(const Program& p) {
  std::ostringstream out;
  for (const auto& r : p.relations()) {
    out << ".decl " << r.name << "(";
    for (std::size_t i = 0; i < r.attributes.size(); ++i) {
      if (i) out << ", ";
      out << r.attributes[i].name << ":" << to_string(r.attributes[i].type);
    }
    out << ")\n";
    if (r.is_input) out << ".input " << r.name << "\n";
    if (r.is_output) out << ".output " << r.name << "\n";
  }
  for (const auto& r : p.rules()) out << to_string(r) << "\n";
  for (const auto& f : p.facts()) out << to_string(f) << ".\n";
  return out.str();
}

}  // namespace provdl
