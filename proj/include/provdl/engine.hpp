#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "provdl/database.hpp"
#include "provdl/join.hpp"

namespace provdl {

struct EvalStats {
  /// Iterations per evaluated stratum.
  std::vector<std::size_t> iterations;
  /// Head tuples that entered a stable store, new or with a lower height.
  std::uint64_t rule_firings = 0;
  /// Stable-store annotations lowered in place.
  std::uint64_t annotation_updates = 0;
  /// Largest height ever stored, including heights later lowered.
  Height max_height = 0;
  std::size_t tuple_count = 0;
};

/// annotation_updates <= n * max_height with n the total tuple count. Each
/// update lowers one height by at least one and no height starts above
/// max_height.
inline bool update_count_bound_check(const EvalStats& s) {
  return s.annotation_updates <= static_cast<std::uint64_t>(s.tuple_count) * s.max_height;
}

inline bool update_count_bound_check(const EvalStats& s, std::uint64_t n, std::uint64_t max_height) {
  return s.annotation_updates <= n * max_height;
}

struct TraceEvent {
  RelationId relation = 0;
  Tuple tuple;
  Annotation annotation;
  /// true: existing tuple lowered from `previous`; false: first insertion.
  bool updated = false;
  Annotation previous;
};

/// Stable-store changes made by one iteration's merge.
struct IterationTrace {
  std::size_t stratum = 0;
  std::size_t iteration = 0;
  std::vector<TraceEvent> events;
};

struct EvalOptions {
  unsigned jobs = 1;
  std::function<void(const IterationTrace&)> on_iteration;
};

enum class AtomSource { Full, Old, Delta };

/// One semi-naive variant of a rule. Non-recursive rules have a single
/// variant reading full relations, evaluated once per stratum.
struct DeltaVariant {
  RuleId rule = 0;
  std::optional<std::size_t> delta_atom;
  std::vector<AtomSource> sources;
};

/// Variants of `rule` given the relations of its stratum: for every body atom
/// in the stratum, that atom reads the delta, same-stratum atoms to its left
/// read the pre-iteration store, everything else reads the full store.
inline std::vector<DeltaVariant> seminaive_delta_rules(const Rule& rule, const Program& p,
                                                       const Stratification& s) {
  std::size_t head_stratum = s.stratum_of[p.id_of(rule.head.relation)];
  std::vector<std::size_t> recursive;
  for (std::size_t j = 0; j < rule.body.size(); ++j)
    if (s.stratum_of[p.id_of(rule.body[j].relation)] == head_stratum) recursive.push_back(j);
  std::vector<DeltaVariant> out;
  if (recursive.empty()) {
    out.push_back({rule.id, std::nullopt, std::vector<AtomSource>(rule.body.size(), AtomSource::Full)});
    return out;
  }
  for (std::size_t k : recursive) {
    DeltaVariant v{rule.id, k, std::vector<AtomSource>(rule.body.size(), AtomSource::Full)};
    for (std::size_t j : recursive) {
      if (j < k) v.sources[j] = AtomSource::Old;
      if (j == k) v.sources[j] = AtomSource::Delta;
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::string to_string(const DeltaVariant& v, const Program& p) {
  const Rule& r = p.rule(v.rule);
  std::string out = "new_" + to_string(r.head) + " :- ";
  for (std::size_t j = 0; j < r.body.size(); ++j) {
    if (j) out += ", ";
    if (v.sources[j] == AtomSource::Delta) out += "delta_";
    if (v.sources[j] == AtomSource::Old) out += "old_";
    out += to_string(r.body[j]);
  }
  for (const auto& a : r.negations) out += ", !" + to_string(a);
  for (const auto& c : r.constraints) out += ", " + to_string(c);
  return out + ".";
}

/// Textual form of the annotated rules: each head gains the rule number and
/// max(positive body heights) + 1; body atoms expose their heights.
inline std::vector<std::string> instrument_rules(const Program& p) {
  std::vector<std::string> out;
  for (const auto& r : p.rules()) {
    std::string heights, body;
    for (std::size_t j = 0; j < r.body.size(); ++j) {
      std::string h = "@h" + std::to_string(j + 1);
      if (j) {
        heights += ", ";
        body += ", ";
      }
      heights += h;
      std::string a = to_string(r.body[j]);
      a.pop_back();
      body += a + ", _, " + h + ")";
    }
    for (const auto& a : r.negations) body += (body.empty() ? "!" : ", !") + to_string(a);
    for (const auto& c : r.constraints) body += (body.empty() ? "" : ", ") + to_string(c);
    std::string head = to_string(r.head);
    head.pop_back();
    head += ", " + std::to_string(r.id) + ", ";
    head += r.body.empty() ? std::string("1") : "max(" + heights + ") + 1";
    head += ")";
    out.push_back(head + " :- " + body + ".");
  }
  return out;
}

namespace detail {

template <bool Annotated>
class Evaluator {
  using Relation = BasicRelation<Annotated>;
  using Entry = typename Relation::Entry;
  using Runner = JoinRunner<Annotated>;

 public:
  Evaluator(BasicDatabase<Annotated>& db, const EvalOptions& opts) : db_(db), opts_(opts) {
    for (const auto& r : db_.rules()) plans_.push_back(plan_join(r, {}));
  }

  EvalStats run() {
    for (RelationId id = 0; id < db_.relation_count(); ++id) {
      db_.relation(id).for_each([&](const Entry& e) {
        stats_.max_height = std::max(stats_.max_height, Relation::annotation(e).height);
      });
    }
    const auto& strata = db_.stratification().strata;
    for (std::size_t s = 0; s < strata.size(); ++s)
      if (!strata[s].is_input_only()) run_stratum(s);
    stats_.tuple_count = db_.tuple_count();
    return stats_;
  }

 private:
  struct Variant {
    const CompiledRule* rule;
    const JoinPlan* plan;
    DeltaVariant shape;
  };

  void run_stratum(std::size_t s) {
    const Program& p = db_.program();
    const auto& strat = db_.stratification();
    const Stratum& stratum = strat.strata[s];

    std::vector<Variant> once, recursive;
    for (RuleId id : stratum.rules) {
      for (auto& v : seminaive_delta_rules(p.rule(id), p, strat)) {
        Variant var{&db_.rule(id), &plans_[id - 1], std::move(v)};
        (var.shape.delta_atom ? recursive : once).push_back(std::move(var));
      }
    }

    // delta^0: the stratum's own input tuples
    std::vector<std::unique_ptr<Relation>> delta(db_.relation_count());
    for (RelationId id : stratum.relations) {
      delta[id] = std::make_unique<Relation>(db_.relation(id).arity());
      db_.relation(id).for_each(
          [&](const Entry& e) { delta[id]->insert_or_minimize(e.first, Relation::annotation(e), 0); });
    }

    std::uint32_t iteration = 0;
    for (;;) {
      std::vector<std::unique_ptr<Relation>> fresh(db_.relation_count());
      for (RelationId id : stratum.relations) fresh[id] = std::make_unique<Relation>(db_.relation(id).arity());

      if (iteration == 0)
        for (const auto& v : once) run_variant(v, iteration, delta, fresh);
      for (const auto& v : recursive) run_variant(v, iteration, delta, fresh);

      IterationTrace trace{s, iteration, {}};
      bool changed = false;
      std::vector<std::unique_ptr<Relation>> next(db_.relation_count());
      for (RelationId id : stratum.relations) {
        auto& stable = db_.relation(id);
        next[id] = std::make_unique<Relation>(stable.arity());
        fresh[id]->for_each([&](const Entry& e) {
          Annotation a = Relation::annotation(e);
          auto outcome = stable.insert_or_minimize(e.first, a, iteration + 1);
          if (outcome.result == InsertResult::Rejected) return;
          changed = true;
          next[id]->insert_or_minimize(e.first, a, iteration + 1);
          ++stats_.rule_firings;
          if (outcome.result == InsertResult::Updated) ++stats_.annotation_updates;
          stats_.max_height = std::max(stats_.max_height, a.height);
          if (opts_.on_iteration)
            trace.events.push_back(
                {id, e.first, a, outcome.result == InsertResult::Updated, outcome.previous});
        });
      }
      if (opts_.on_iteration) opts_.on_iteration(trace);
      delta = std::move(next);
      ++iteration;
      if (!changed) break;
    }
    stats_.iterations.push_back(iteration);
  }

  void run_variant(const Variant& v, std::uint32_t iteration, std::vector<std::unique_ptr<Relation>>& delta,
                   std::vector<std::unique_ptr<Relation>>& fresh) {
    const CompiledRule& rule = *v.rule;
    std::vector<JoinSource<Annotated>> sources;
    for (std::size_t j = 0; j < rule.body.size(); ++j) {
      RelationId rel = rule.body[j].relation;
      const auto& step = v.plan->steps[j];
      switch (v.shape.sources[j]) {
        case AtomSource::Full: sources.push_back(make_source(db_.relation(rel), step)); break;
        case AtomSource::Old: {
          auto src = make_source(db_.relation(rel), step);
          src.stamp_below = iteration;
          sources.push_back(src);
          break;
        }
        case AtomSource::Delta:
          if (delta[rel]->empty()) return;
          sources.push_back(make_source(*delta[rel], step));
          break;
      }
    }

    const auto& head = rule.head;
    const Relation& stable = db_.relation(head.relation);
    Relation& target = *fresh[head.relation];
    auto emit = [&](std::span<const Value> slots, std::span<const Entry* const> matched) {
      Tuple t = instantiate(head, slots);
      if constexpr (Annotated) {
        Height h = 0;
        for (const Entry* e : matched) h = std::max(h, Relation::annotation(*e).height);
        ++h;
        if (stable.contains_with_height_below(t, h)) return true;
        target.insert_or_minimize(t, Annotation{rule.id, h});
      } else {
        if (stable.contains(t)) return true;
        target.insert_or_minimize(t, Annotation{rule.id, 0});
      }
      return true;
    };
    auto negated = [this](RelationId id) -> const Relation& { return db_.relation(id); };

    if (opts_.jobs <= 1 || rule.body.empty()) {
      Runner runner(rule, *v.plan, sources, negated);
      runner.run(emit);
      return;
    }
    Runner seed(rule, *v.plan, sources, negated);
    auto firsts = seed.first_candidates();
    if (firsts.empty()) return;
    unsigned workers = std::min<std::size_t>(opts_.jobs, firsts.size());
    std::atomic<std::size_t> next{0};
    constexpr std::size_t chunk = 64;
    auto work = [&] {
      Runner runner(rule, *v.plan, sources, negated);
      for (;;) {
        std::size_t begin = next.fetch_add(chunk);
        if (begin >= firsts.size()) return;
        std::size_t end = std::min(firsts.size(), begin + chunk);
        for (std::size_t i = begin; i < end; ++i) runner.run_from(*firsts[i], emit);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
  }

  BasicDatabase<Annotated>& db_;
  const EvalOptions& opts_;
  std::vector<JoinPlan> plans_;
  EvalStats stats_;
};

}  // namespace detail

/// Stratified semi-naive evaluation to fixpoint, in place. In provenance mode
/// every stored tuple ends with the rule and height of a minimal proof tree.
template <bool Annotated>
EvalStats evaluate(BasicDatabase<Annotated>& db, const EvalOptions& opts = {}) {
  return detail::Evaluator<Annotated>(db, opts).run();
}

}  // namespace provdl
