#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "provdl/ast.hpp"
#include "provdl/instance.hpp"
#include "provdl/relation.hpp"
#include "provdl/stratification.hpp"
#include "provdl/value.hpp"

namespace provdl {

/// Rule argument after compilation: an interned constant or a variable slot.
struct CompiledTerm {
  bool is_variable = false;
  std::size_t slot = 0;
  Value value = 0;
};

struct CompiledAtom {
  RelationId relation = 0;
  std::vector<CompiledTerm> args;
};

struct CompiledConstraint {
  CmpOp op = CmpOp::Eq;
  CompiledTerm lhs;
  CompiledTerm rhs;
};

/// A rule with variables mapped to dense slots. Every `_` gets its own slot.
struct CompiledRule {
  RuleId id = 0;
  CompiledAtom head;
  std::vector<CompiledAtom> body;
  std::vector<CompiledAtom> negations;
  std::vector<CompiledConstraint> constraints;
  std::vector<std::string> slot_names;

  std::size_t slot_count() const noexcept { return slot_names.size(); }
};

inline Value resolve(const CompiledTerm& t, std::span<const Value> slots) noexcept {
  return t.is_variable ? slots[t.slot] : t.value;
}

inline Tuple instantiate(const CompiledAtom& a, std::span<const Value> slots) {
  Tuple out;
  out.reserve(a.args.size());
  for (const auto& t : a.args) out.push_back(resolve(t, slots));
  return out;
}

/// Program, symbol table and one store per relation. Provenance mode
/// (Annotated = true) keeps a (rule, height) annotation per tuple.
template <bool Annotated>
class BasicDatabase {
 public:
  using Relation = BasicRelation<Annotated>;

  explicit BasicDatabase(Program program, std::shared_ptr<SymbolTable> symbols = std::make_shared<SymbolTable>())
      : program_(std::move(program)), symbols_(std::move(symbols)), strata_(stratify(program_)) {
    for (const auto& decl : program_.relations()) relations_.push_back(std::make_unique<Relation>(decl.arity()));
    for (const auto& r : program_.rules()) rules_.push_back(compile(r));
    for (const auto& f : program_.facts()) add_fact(f);
  }

  BasicDatabase(const BasicDatabase&) = delete;
  BasicDatabase& operator=(const BasicDatabase&) = delete;

  const Program& program() const noexcept { return program_; }
  SymbolTable& symbols() const noexcept { return *symbols_; }
  const std::shared_ptr<SymbolTable>& symbol_table() const noexcept { return symbols_; }
  const Stratification& stratification() const noexcept { return strata_; }
  const std::vector<CompiledRule>& rules() const noexcept { return rules_; }
  const CompiledRule& rule(RuleId id) const {
    program_.rule(id);  // range check
    return rules_[id - 1];
  }

  std::size_t relation_count() const noexcept { return relations_.size(); }
  Relation& relation(RelationId id) { return *relations_.at(id); }
  const Relation& relation(RelationId id) const { return *relations_.at(id); }
  Relation& relation(std::string_view name) { return relation(program_.id_of(name)); }
  const Relation& relation(std::string_view name) const { return relation(program_.id_of(name)); }

  std::size_t tuple_count() const {
    std::size_t n = 0;
    for (const auto& r : relations_) n += r->size();
    return n;
  }

  /// Encodes a ground atom, interning new symbols.
  Tuple encode(const Atom& a) {
    RelationId id = program_.id_of(a.relation);
    check_ground(a, id);
    Tuple t;
    for (const auto& term : a.args)
      t.push_back(term.kind == Term::Kind::Number ? term.number : symbols_->intern(term.text));
    return t;
  }

  /// Encodes without interning. nullopt if a symbol was never seen, in which
  /// case no stored tuple can match.
  std::optional<Tuple> lookup(const Atom& a) const {
    RelationId id = program_.id_of(a.relation);
    check_ground(a, id);
    Tuple t;
    for (const auto& term : a.args) {
      if (term.kind == Term::Kind::Number) {
        t.push_back(term.number);
      } else if (auto v = symbols_->find(term.text)) {
        t.push_back(*v);
      } else {
        return std::nullopt;
      }
    }
    return t;
  }

  Term decode(RelationId rel, std::size_t position, Value v) const {
    if (program_.relation(rel).attributes[position].type == AttrType::Number) return Term::num(v);
    return Term::symbol(symbols_->text(v));
  }

  GroundTuple decode(RelationId rel, std::span<const Value> values) const {
    GroundTuple out;
    out.relation = program_.relation(rel).name;
    for (std::size_t i = 0; i < values.size(); ++i) out.args.push_back(decode(rel, i, values[i]));
    return out;
  }

  /// Adds an input tuple with rule 0 and the given height (0 by default).
  void add_fact(const Atom& fact, Height height = 0) {
    Tuple t = encode(fact);
    relation(fact.relation).insert_or_minimize(t, Annotation{0, height}, 0);
  }

  /// Overrides the height of an existing or new input tuple.
  void set_input_height(const Atom& fact, Height height) {
    Tuple t = encode(fact);
    auto& rel = relation(fact.relation);
    if (rel.find(t)) {
      // only ever lowered in place; rebuild to raise
      auto snapshot = rel.snapshot();
      auto fresh = std::make_unique<Relation>(rel.arity());
      for (auto& e : snapshot)
        fresh->insert_or_minimize(e.tuple, e.tuple == t ? Annotation{0, height} : e.annotation, 0);
      relations_[program_.id_of(fact.relation)] = std::move(fresh);
    } else {
      rel.insert_or_minimize(t, Annotation{0, height}, 0);
    }
  }

  ProvenanceInstance export_instance() const {
    ProvenanceInstance out;
    for (RelationId id = 0; id < relations_.size(); ++id)
      relations_[id]->for_each([&](const auto& e) { out.emplace(decode(id, e.first), Relation::annotation(e).height); });
    return out;
  }

  /// FNV-1a over every relation's tuples and annotations, in store order.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
      }
    };
    for (const auto& r : relations_) {
      mix(r->size());
      r->for_each([&](const auto& e) {
        for (Value v : e.first) mix(static_cast<std::uint64_t>(v));
        auto a = Relation::annotation(e);
        mix((std::uint64_t{a.height} << 32) | a.rule);
      });
    }
    return h;
  }

 private:
  void check_ground(const Atom& a, RelationId id) const {
    const auto& decl = program_.relation(id);
    if (a.args.size() != decl.arity())
      throw SemanticError("arity mismatch for '" + a.relation + "': declared " + std::to_string(decl.arity()) +
                          ", given " + std::to_string(a.args.size()));
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      const Term& t = a.args[i];
      if (t.is_variable()) throw SemanticError("tuple " + to_string(a) + " is not ground");
      auto got = t.kind == Term::Kind::Number ? AttrType::Number : AttrType::Symbol;
      if (got != decl.attributes[i].type)
        throw SemanticError("argument " + std::to_string(i + 1) + " of '" + a.relation + "' expects a " +
                            std::string(to_string(decl.attributes[i].type)));
    }
  }

  CompiledRule compile(const Rule& r) {
    CompiledRule out;
    out.id = r.id;
    std::unordered_map<std::string, std::size_t> slots;
    auto term = [&](const Term& t) {
      CompiledTerm c;
      if (t.kind == Term::Kind::Number) {
        c.value = t.number;
      } else if (t.kind == Term::Kind::Symbol) {
        c.value = symbols_->intern(t.text);
      } else {
        c.is_variable = true;
        if (t.is_anonymous()) {
          c.slot = out.slot_names.size();
          out.slot_names.push_back("_");
        } else if (auto it = slots.find(t.text); it != slots.end()) {
          c.slot = it->second;
        } else {
          c.slot = out.slot_names.size();
          slots.emplace(t.text, c.slot);
          out.slot_names.push_back(t.text);
        }
      }
      return c;
    };
    auto atom = [&](const Atom& a) {
      CompiledAtom c;
      c.relation = program_.id_of(a.relation);
      for (const auto& t : a.args) c.args.push_back(term(t));
      return c;
    };
    // body first so slot numbers follow first occurrence in the body
    for (const auto& a : r.body) out.body.push_back(atom(a));
    out.head = atom(r.head);
    for (const auto& a : r.negations) out.negations.push_back(atom(a));
    for (const auto& c : r.constraints) out.constraints.push_back({c.op, term(c.lhs), term(c.rhs)});
    return out;
  }

  Program program_;
  std::shared_ptr<SymbolTable> symbols_;
  Stratification strata_;
  std::vector<std::unique_ptr<Relation>> relations_;
  std::vector<CompiledRule> rules_;
};

using Database = BasicDatabase<true>;
using PlainDatabase = BasicDatabase<false>;

}  // namespace provdl
