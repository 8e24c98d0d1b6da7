#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "fixtures.hpp"
#include "fragment_check.hpp"
#include "random_program.hpp"

using namespace provdl;
using provdl::testing::tup;

namespace {

struct PointsTo {
  Database db{provdl::testing::points_to()};
  EvalStats stats = evaluate(db);
  Explorer ex{db};
};

// Constants of each type that occur in the program text.
std::map<AttrType, std::vector<Term>> constants(const Program& p) {
  std::map<AttrType, std::set<Term>> seen;
  auto add = [&](const Term& t) {
    if (t.kind == Term::Kind::Symbol) seen[AttrType::Symbol].insert(t);
    if (t.kind == Term::Kind::Number) seen[AttrType::Number].insert(t);
  };
  for (const auto& f : p.facts())
    for (const auto& t : f.args) add(t);
  for (const auto& r : p.rules()) {
    for (const auto& t : r.head.args) add(t);
    for (const auto& a : r.body)
      for (const auto& t : a.args) add(t);
  }
  std::map<AttrType, std::vector<Term>> out;
  for (auto& [k, v] : seen) out[k] = {v.begin(), v.end()};
  if (out[AttrType::Symbol].empty()) out[AttrType::Symbol].push_back(Term::symbol("s0"));
  if (out[AttrType::Number].empty()) out[AttrType::Number].push_back(Term::num(0));
  return out;
}

}  // namespace

TEST(Explorer, SubproofOfDerivedTuple) {
  PointsTo f;
  Subproof sp = f.ex.subproof(tup("vpt", {"b", "l1"}));
  EXPECT_EQ(sp.rule, 2u);
  ASSERT_EQ(sp.children.size(), 2u);
  EXPECT_EQ(f.db.decode(sp.children[0].relation, sp.children[0].values), tup("assign", {"b", "a"}));
  EXPECT_EQ(sp.children[1].annotation, (Annotation{1, 1}));
  EXPECT_TRUE(sp.leaves.empty());
  Subproof alias = f.ex.subproof(tup("alias", {"a", "b"}));
  ASSERT_EQ(alias.leaves.size(), 1u);
  EXPECT_EQ(alias.leaves[0].text, "\"a\" != \"b\"");
  EXPECT_THROW(f.ex.subproof(tup("new", {"a", "l1"})), IsEdb);
  EXPECT_THROW(f.ex.subproof(tup("vpt", {"b", "l4"})), UnknownTuple);
  EXPECT_THROW(f.ex.subproof(tup("vpt", {"zz", "l4"})), UnknownTuple);
}

TEST(Explorer, FullTreeOfAlias) {
  PointsTo f;
  ProofNode t = f.ex.explain(tup("alias", {"a", "b"}), kUnboundedDepth);
  EXPECT_EQ(node_count(t), 8u);
  EXPECT_EQ(tree_height(t), 3u);
  EXPECT_EQ(t, oracle::enumerate_min_proof_tree(f.db.program(), tup("alias", {"a", "b"})));
  EXPECT_TRUE(provdl::testing::FragmentChecker(f.db).check(t).empty());
  EXPECT_EQ(f.ex.explain(tup("alias", {"a", "b"})), t);
}

TEST(Explorer, DepthLimitLeavesFrontierUnexpanded) {
  PointsTo f;
  ProofNode t = f.ex.explain(tup("alias", {"a", "b"}), 1);
  ASSERT_EQ(t.children.size(), 3u);
  EXPECT_FALSE(t.children[0].expanded);
  EXPECT_TRUE(t.children[0].children.empty());
  EXPECT_EQ(t.children[1].annotation, (Annotation{2, 2}));
  EXPECT_EQ(depth_of(t), 2u);
  EXPECT_EQ(tree_height(t), 3u);
  EXPECT_TRUE(provdl::testing::FragmentChecker(f.db).check(t).empty());
  // expanding a frontier node continues the same tree
  EXPECT_EQ(f.ex.explain(t.children[1].tuple, kUnboundedDepth), f.ex.explain(tup("alias", {"a", "b"}), 5).children[1]);
  EXPECT_THROW(f.ex.explain(tup("alias", {"a", "b"}), 0), Error);
  ProofNode edb = f.ex.explain(tup("new", {"a", "l1"}));
  EXPECT_TRUE(edb.children.empty());
  EXPECT_EQ(edb.annotation, (Annotation{0, 0}));
}

TEST(Explorer, NegationCandidatesAndBindings) {
  PointsTo f;
  auto c = f.ex.negation_candidates(tup("vpt", {"b", "l4"}));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1].rule, 2u);
  EXPECT_EQ(c[1].instantiated, "vpt(\"b\", \"l4\") :- assign(\"b\", Var2), vpt(Var2, \"l4\").");
  EXPECT_EQ(c[1].free_variables, (std::vector<std::string>{"Var2"}));
  EXPECT_EQ(c[2].free_variables, (std::vector<std::string>{"Y", "F", "P", "Q"}));
  EXPECT_EQ(f.ex.negation_free_variables(1, tup("vpt", {"b", "l4"})).size(), 0u);
  EXPECT_THROW(f.ex.negation_candidates(tup("vpt", {"b", "l1"})), TupleExists);
  EXPECT_TRUE(f.ex.negation_candidates(tup("alias", {"zz", "zz"})).size() == 1);

  FailedSubproof sp = f.ex.evaluate_failed_subproof(2, tup("vpt", {"b", "l4"}), {{"Var2", Term::symbol("d")}});
  ASSERT_EQ(sp.body.size(), 2u);
  EXPECT_EQ(sp.body[0].tuple, tup("assign", {"b", "d"}));
  EXPECT_FALSE(sp.body[0].holds);
  EXPECT_TRUE(sp.body[1].holds);
  EXPECT_EQ(sp.failures(), 1u);

  EXPECT_THROW(f.ex.evaluate_failed_subproof(2, tup("vpt", {"b", "l4"}), {}), Error);
  EXPECT_THROW(f.ex.evaluate_failed_subproof(2, tup("vpt", {"b", "l4"}), {{"Var2", Term::num(3)}}), Error);
  EXPECT_THROW(f.ex.evaluate_failed_subproof(4, tup("vpt", {"b", "l4"}), {}), SemanticError);
  EXPECT_EQ(f.ex.parse_value(2, "Var2", "\"d\""), Term::symbol("d"));
  EXPECT_THROW(f.ex.parse_value(2, "Nope", "d"), Error);
}

TEST(Explorer, FailedSubproofWithConstraintAndWildcard) {
  Program p = parse_program(R"(
    .decl e(a:symbol, b:symbol)
    .decl n(x:number)
    .decl q(a:symbol, x:number)
    .decl blocked(a:symbol)
    q(A, X) :- e(A, _), n(X), X > 2, !blocked(A).
    e("a", "b"). n(1). n(5). blocked("c").
  )");
  Database db(p);
  evaluate(db);
  Explorer ex(db);
  auto sp = ex.evaluate_failed_subproof(1, {"q", {Term::symbol("a"), Term::num(1)}}, {});
  ASSERT_EQ(sp.body.size(), 4u);
  EXPECT_TRUE(sp.body[0].holds);  // e("a", _)
  EXPECT_TRUE(sp.body[1].holds);
  EXPECT_EQ(sp.body[2].text, "!blocked(\"a\")");
  EXPECT_TRUE(sp.body[2].holds);
  EXPECT_EQ(sp.body[3].text, "1 > 2");
  EXPECT_FALSE(sp.body[3].holds);
  auto c = ex.evaluate_failed_subproof(1, {"q", {Term::symbol("c"), Term::num(7)}}, {});
  EXPECT_EQ(c.failures(), 3u);
  ProofNode t = ex.explain({"q", {Term::symbol("a"), Term::num(5)}});
  ASSERT_EQ(t.children.size(), 4u);
  EXPECT_EQ(t.children[2].text, "!blocked(\"a\")");
  EXPECT_EQ(t.children[3].text, "5 > 2");
  EXPECT_TRUE(provdl::testing::FragmentChecker(db).check(t).empty());
}

TEST(Explorer, FullFragmentsOnRandomPrograms) {
  std::size_t trees = 0;
  for (const auto& g : provdl::testing::corpus(60)) {
    Database db(g.program);
    evaluate(db);
    Explorer ex(db);
    provdl::testing::FragmentChecker check(db);
    for (const auto& [t, h] : db.export_instance()) {
      ProofNode tree = ex.explain(t, kUnboundedDepth);
      ASSERT_EQ(tree_height(tree), h) << to_string(t) << "\n" << g.source;
      auto errors = check.check(tree);
      ASSERT_TRUE(errors.empty()) << errors.front() << "\n" << g.source;
      ++trees;
    }
  }
  EXPECT_GT(trees, 500u);
}

// Marks agree with membership, and an absent head always has a failure.
TEST(Explorer, FailedSubproofMarksMatchMembership) {
  std::mt19937 rng(11);
  std::size_t checked = 0;
  for (const auto& g : provdl::testing::corpus(60)) {
    Database db(g.program);
    evaluate(db);
    Explorer ex(db);
    Instance full = oracle::naive_fixpoint(g.program);
    auto pool = constants(g.program);
    auto pick = [&](AttrType ty) { return pool[ty][rng() % pool[ty].size()]; };
    for (const auto& decl : g.program.relations()) {
      for (int k = 0; k < 6; ++k) {
        GroundTuple t{decl.name, {}};
        for (const auto& a : decl.attributes) t.args.push_back(pick(a.type));
        if (full.count(t)) continue;
        auto types_for = [&](const Rule& r) { return g.program.variable_types(r); };
        for (const auto& c : ex.negation_candidates(t)) {
          const Rule& r = g.program.rule(c.rule);
          auto types = types_for(r);
          VariableBindings b;
          for (const auto& v : c.free_variables) b[v] = pick(types.at(v));
          FailedSubproof sp = ex.evaluate_failed_subproof(c.rule, t, b);
          ASSERT_GE(sp.failures(), 1u) << g.source;
          for (const auto& n : sp.body) {
            if (n.is_tuple()) {
              bool wildcard = std::any_of(n.tuple.args.begin(), n.tuple.args.end(),
                                          [](const Term& x) { return x.is_anonymous(); });
              if (wildcard) {
                bool any = std::any_of(full.begin(), full.end(), [&](const GroundTuple& u) {
                  if (u.relation != n.tuple.relation) return false;
                  for (std::size_t i = 0; i < u.args.size(); ++i)
                    if (!n.tuple.args[i].is_anonymous() && n.tuple.args[i] != u.args[i]) return false;
                  return true;
                });
                EXPECT_EQ(n.holds, any);
              } else {
                EXPECT_EQ(n.holds, full.count(n.tuple) == 1) << to_string(n.tuple);
              }
            } else if (n.text[0] == '!') {
              GroundTuple neg = parse_ground_atom(n.text.substr(1));
              EXPECT_EQ(n.holds, full.count(neg) == 0) << n.text;
            }
          }
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(Explorer, ConcurrentQueriesAgree) {
  Database db(parse_program(R"(
    .decl e(a:number, b:number)
    .decl tc(a:number, b:number)
    tc(X, Y) :- e(X, Y).
    tc(X, Z) :- e(X, Y), tc(Y, Z).
  )"));
  for (int i = 0; i < 60; ++i) db.add_fact({"e", {Term::num(i), Term::num((i * 7 + 3) % 60)}});
  for (int i = 0; i < 60; ++i) db.add_fact({"e", {Term::num(i), Term::num(i + 1)}});
  evaluate(db);
  Explorer ex(db);
  std::vector<GroundTuple> targets;
  for (int i = 0; i < 40; ++i) targets.push_back({"tc", {Term::num(i), Term::num(60)}});
  std::vector<ProofNode> expected;
  for (const auto& t : targets) expected.push_back(ex.explain(t, kUnboundedDepth));
  std::vector<std::thread> pool;
  std::atomic<int> mismatches{0};
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = 0; i < targets.size(); ++i)
        if (!(ex.explain(targets[i], kUnboundedDepth) == expected[i])) ++mismatches;
    });
  for (auto& th : pool) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}
