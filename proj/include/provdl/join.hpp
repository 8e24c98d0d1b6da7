#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "provdl/database.hpp"

namespace provdl {

/// Static shape of one body atom inside a left-to-right nested-loop join.
struct AtomStep {
  /// Positions already fixed when this atom is reached; they form the index
  /// order prefix.
  std::vector<std::size_t> bound_positions;
  std::vector<CompiledTerm> prefix;
  /// (position, slot) pairs bound by a matching tuple.
  std::vector<std::pair<std::size_t, std::size_t>> binds;
  /// Repeated variables within this atom: (position, slot) to compare.
  std::vector<std::pair<std::size_t, std::size_t>> checks;
  /// Constraint and negation indexes whose variables become bound here.
  std::vector<std::size_t> constraints;
  std::vector<std::size_t> negations;
};

struct JoinPlan {
  std::vector<AtomStep> steps;
  /// Checked before the first atom (all variables bound up front).
  std::vector<std::size_t> constraints;
  std::vector<std::size_t> negations;
};

inline JoinPlan plan_join(const CompiledRule& rule, std::vector<bool> bound) {
  bound.resize(rule.slot_count(), false);
  JoinPlan plan;
  auto ready = [&](const CompiledTerm& t) { return !t.is_variable || bound[t.slot]; };
  std::vector<bool> c_done(rule.constraints.size(), false), n_done(rule.negations.size(), false);
  auto place = [&](std::vector<std::size_t>& cs, std::vector<std::size_t>& ns) {
    for (std::size_t i = 0; i < rule.constraints.size(); ++i) {
      const auto& c = rule.constraints[i];
      if (!c_done[i] && ready(c.lhs) && ready(c.rhs)) {
        c_done[i] = true;
        cs.push_back(i);
      }
    }
    for (std::size_t i = 0; i < rule.negations.size(); ++i) {
      const auto& a = rule.negations[i];
      bool all = std::all_of(a.args.begin(), a.args.end(), ready);
      if (!n_done[i] && all) {
        n_done[i] = true;
        ns.push_back(i);
      }
    }
  };
  place(plan.constraints, plan.negations);
  for (const auto& atom : rule.body) {
    AtomStep step;
    std::vector<bool> seen_here(rule.slot_count(), false);
    for (std::size_t p = 0; p < atom.args.size(); ++p) {
      const auto& t = atom.args[p];
      if (ready(t)) {
        step.bound_positions.push_back(p);
        step.prefix.push_back(t);
      } else if (seen_here[t.slot]) {
        step.checks.emplace_back(p, t.slot);
      } else {
        seen_here[t.slot] = true;
        step.binds.emplace_back(p, t.slot);
      }
    }
    for (const auto& [p, s] : step.binds) bound[s] = true;
    place(step.constraints, step.negations);
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

/// Where one body atom reads from during a join.
template <bool Annotated>
struct JoinSource {
  using Relation = BasicRelation<Annotated>;
  const Relation* relation = nullptr;
  typename Relation::IndexHandle index{};
  /// Only entries with stamp < stamp_below are visible.
  std::uint32_t stamp_below = std::numeric_limits<std::uint32_t>::max();
  /// Only entries with height < height_below are visible.
  Height height_below = std::numeric_limits<Height>::max();
};

/// Picks (building if needed) the index matching a step's bound positions.
template <bool Annotated>
JoinSource<Annotated> make_source(BasicRelation<Annotated>& rel, const AtomStep& step) {
  JoinSource<Annotated> s;
  s.relation = &rel;
  s.index = rel.index(std::span<const std::size_t>(step.bound_positions));
  return s;
}

/// Runs one join plan. A runner owns scratch space, so use one per thread.
template <bool Annotated>
class JoinRunner {
 public:
  using Relation = BasicRelation<Annotated>;
  using Entry = typename Relation::Entry;
  using NegationLookup = std::function<const Relation&(RelationId)>;

  JoinRunner(const CompiledRule& rule, const JoinPlan& plan, std::span<const JoinSource<Annotated>> sources,
             NegationLookup negated)
      : rule_(rule), plan_(plan), sources_(sources), negated_(std::move(negated)) {
    slots_.assign(rule.slot_count(), 0);
    matched_.assign(rule.body.size(), nullptr);
    prefix_.resize(rule.body.size());
    for (std::size_t i = 0; i < rule.body.size(); ++i) prefix_[i].resize(plan.steps[i].prefix.size());
  }

  std::vector<Value>& slots() noexcept { return slots_; }

  /// Full join from the current slot values. `emit` receives the slot values
  /// and the matched entry per body atom and returns false to stop. Returns
  /// false iff stopped.
  template <class Emit>
  bool run(Emit&& emit) {
    if (!pre_checks()) return true;
    return step(0, emit);
  }

  /// Entries the first atom would visit; used to split work across threads.
  std::vector<const Entry*> first_candidates() {
    std::vector<const Entry*> out;
    if (rule_.body.empty() || !pre_checks()) return out;
    fill_prefix(0);
    sources_[0].relation->scan(sources_[0].index, prefix_[0], [&](const Entry& e) {
      out.push_back(&e);
      return true;
    });
    return out;
  }

  /// Continues the join from a first-atom entry produced by first_candidates.
  template <class Emit>
  bool run_from(const Entry& first, Emit&& emit) {
    if (!accept(0, first)) return true;
    return step(1, emit);
  }

 private:
  bool pre_checks() {
    for (std::size_t c : plan_.constraints)
      if (!constraint_holds(c)) return false;
    for (std::size_t n : plan_.negations)
      if (!negation_holds(n)) return false;
    return true;
  }

  void fill_prefix(std::size_t level) {
    const auto& st = plan_.steps[level];
    for (std::size_t k = 0; k < st.prefix.size(); ++k) prefix_[level][k] = resolve(st.prefix[k], slots_);
  }

  template <class Emit>
  bool step(std::size_t level, Emit& emit) {
    if (level == rule_.body.size())
      return emit(std::span<const Value>(slots_), std::span<const Entry* const>(matched_));
    fill_prefix(level);
    const auto& src = sources_[level];
    return src.relation->scan(src.index, prefix_[level], [&](const Entry& e) {
      if (!accept(level, e)) return true;
      return step(level + 1, emit);
    });
  }

  bool accept(std::size_t level, const Entry& e) {
    const auto& src = sources_[level];
    if (Relation::stamp(e) >= src.stamp_below) return false;
    if constexpr (Annotated) {
      if (Relation::annotation(e).height >= src.height_below) return false;
    }
    const auto& st = plan_.steps[level];
    for (const auto& [p, s] : st.binds) slots_[s] = e.first[p];
    for (const auto& [p, s] : st.checks)
      if (e.first[p] != slots_[s]) return false;
    for (std::size_t c : st.constraints)
      if (!constraint_holds(c)) return false;
    for (std::size_t n : st.negations)
      if (!negation_holds(n)) return false;
    matched_[level] = &e;
    return true;
  }

  bool constraint_holds(std::size_t i) const {
    const auto& c = rule_.constraints[i];
    return compare(c.op, resolve(c.lhs, slots_), resolve(c.rhs, slots_));
  }

  bool negation_holds(std::size_t i) {
    const auto& a = rule_.negations[i];
    scratch_.clear();
    for (const auto& t : a.args) scratch_.push_back(resolve(t, slots_));
    return !negated_(a.relation).contains(scratch_);
  }

  const CompiledRule& rule_;
  const JoinPlan& plan_;
  std::span<const JoinSource<Annotated>> sources_;
  NegationLookup negated_;
  std::vector<Value> slots_;
  std::vector<const Entry*> matched_;
  std::vector<std::vector<Value>> prefix_;
  Tuple scratch_;
};

}  // namespace provdl
