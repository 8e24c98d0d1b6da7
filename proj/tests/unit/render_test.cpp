#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "random_program.hpp"

using namespace provdl;
using provdl::testing::read_file;
using provdl::testing::tup;

namespace {

struct PointsTo {
  Database db{provdl::testing::points_to()};
  EvalStats stats = evaluate(db);
  Explorer ex{db};

  std::string session(const std::string& input) {
    std::istringstream in(input);
    std::ostringstream out;
    Repl(ex, in, out, true).run();
    return out.str();
  }
};

}  // namespace

TEST(Render, NegationTranscriptIsByteExact) {
  PointsTo f;
  std::string golden = read_file(provdl::testing::data_dir() / "explainnegation_vpt_b_l4.txt");
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(f.session("explainnegation vpt(\"b\", \"l4\")\n2\nd\nquit\n"), golden + "Enter command > quit\n");
}

TEST(Render, FailedSubproofLayout) {
  FailedSubproof sp;
  sp.head = tup("vpt", {"b", "l4"});
  sp.rule = 2;
  ProofNode a;
  a.tuple = tup("assign", {"b", "d"});
  a.holds = false;
  ProofNode v;
  v.tuple = tup("vpt", {"d", "l4"});
  sp.body = {a, v};
  std::string text = render_failed(sp);
  std::string rule_line = text.substr(text.find('\n') + 1);
  rule_line = rule_line.substr(0, rule_line.find('\n'));
  EXPECT_EQ(rule_line.size(), 38u);
  EXPECT_EQ(text.substr(text.rfind("vpt(\"b\"") - 12, 12), std::string(12, ' '));
}

TEST(Render, ExplainTreeGolden) {
  PointsTo f;
  std::string golden = read_file(provdl::testing::data_dir() / "explain_alias_a_b.txt");
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(f.session("explain alias(\"a\", \"b\")\nquit\n"),
            "Enter command > explain alias(\"a\", \"b\")\n" + golden + "Enter command > quit\n");
}

// Every line of a rendered tree pairs a node row with an inference line that
// sits directly under its premises.
TEST(Render, TreeLayoutShape) {
  PointsTo f;
  std::string text = render_tree(f.ex.explain(tup("alias", {"a", "b"}), kUnboundedDepth));
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines.back().find_first_not_of(' '), (lines[lines.size() - 2].size() - 15) / 2);
  EXPECT_NE(lines[lines.size() - 2].find("(R4)"), std::string::npos);
  for (const auto& l : lines) EXPECT_NE(l.back(), ' ');
}

TEST(Render, UnexpandedNodesShowAnnotation) {
  PointsTo f;
  std::string text = render_tree(f.ex.explain(tup("alias", {"a", "b"}), 1));
  EXPECT_NE(text.find("vpt(\"b\", \"l1\") [R2, height 2]"), std::string::npos);
  EXPECT_NE(text.find("(R4)"), std::string::npos);
  EXPECT_EQ(render_tree(f.ex.explain(tup("new", {"a", "l1"}))), "new(\"a\", \"l1\")\n");
}

TEST(Render, JsonRoundTrip) {
  PointsTo f;
  for (std::size_t depth : {std::size_t{1}, std::size_t{2}, kUnboundedDepth}) {
    ProofNode t = f.ex.explain(tup("alias", {"a", "b"}), depth);
    Json j = to_json(t);
    EXPECT_EQ(proof_node_from_json(Json::parse(j.dump())), t);
  }
  Json j = to_json(f.ex.explain(tup("alias", {"a", "b"}), 1));
  EXPECT_EQ(j["tuple"], Json::parse(R"(["alias", "a", "b"])"));
  EXPECT_EQ(j["rule"], 4);
  EXPECT_EQ(j["height"], 3);
  EXPECT_EQ(j["children"][0]["expanded"], false);
  EXPECT_EQ(j["children"][2]["kind"], "constraint");
  GroundTuple mixed{"p", {Term::symbol("x"), Term::num(-4)}};
  EXPECT_EQ(tuple_from_json(tuple_json(mixed)), mixed);
  EXPECT_THROW(tuple_from_json(Json::parse("[1, 2]")), Error);
  EXPECT_THROW(tuple_from_json(Json::parse("{}")), Error);
}

TEST(Render, JsonRoundTripOnRandomPrograms) {
  for (const auto& g : provdl::testing::corpus(20)) {
    Database db(g.program);
    evaluate(db);
    Explorer ex(db);
    for (const auto& [t, h] : db.export_instance()) {
      ProofNode tree = ex.explain(t, 2);
      EXPECT_EQ(proof_node_from_json(Json::parse(to_json(tree).dump())), tree);
    }
  }
}

TEST(Repl, CommandsAndErrors) {
  PointsTo f;
  std::string out = f.session(
      "setdepth 1\n"
      "explain alias(\"a\", \"b\")\n"
      "setdepth zero\n"
      "format json\n"
      "explain vpt(\"a\", \"l1\")\n"
      "format yaml\n"
      "explain vpt(\"b\", \"l4\")\n"
      "explainnegation vpt(\"b\", \"l1\")\n"
      "explainnegation vpt(\"b\", \"l4\")\n"
      "7\n"
      "frobnicate\n"
      "\n"
      "exit\n"
      "explain alias(\"a\", \"b\")\n");
  EXPECT_NE(out.find("[R2, height 2]"), std::string::npos);
  EXPECT_NE(out.find("Error: setdepth expects a positive integer"), std::string::npos);
  EXPECT_NE(out.find("{\"children\":"), std::string::npos);
  EXPECT_NE(out.find("Error: format expects text or json"), std::string::npos);
  EXPECT_NE(out.find("Error: vpt(\"b\", \"l4\") does not exist"), std::string::npos);
  EXPECT_NE(out.find("Error: vpt(\"b\", \"l1\")"), std::string::npos);
  EXPECT_NE(out.find("Error: '7' is not one of the listed rules"), std::string::npos);
  EXPECT_NE(out.find("Error: unknown command 'frobnicate'"), std::string::npos);
  // nothing after exit is executed
  EXPECT_EQ(out.rfind("Enter command > exit\n") + std::string("Enter command > exit\n").size(), out.size());
}

TEST(Repl, JsonFormatMatchesRenderer) {
  PointsTo f;
  std::string out = f.session("format json\nexplain alias(\"a\", \"b\")\n");
  std::string expected = to_json(f.ex.explain(tup("alias", {"a", "b"}))).dump();
  EXPECT_NE(out.find(expected + "\n"), std::string::npos);
  std::string neg = f.session("format json\nexplainnegation vpt(\"b\", \"l4\")\n2\nd\n");
  auto sp = f.ex.evaluate_failed_subproof(2, tup("vpt", {"b", "l4"}), {{"Var2", Term::symbol("d")}});
  EXPECT_NE(neg.find(to_json(sp).dump() + "\n"), std::string::npos);
}

TEST(Repl, RuleListing) {
  Program p = provdl::testing::points_to();
  EXPECT_EQ(rule_listing(p.rule(2)), "2: vpt(Var,Obj) :-\n   assign(Var,Var2),\n   vpt(Var2,Obj).\n");
  EXPECT_EQ(rule_listing(p.rule(4)),
            "4: alias(Var1,Var2) :-\n   vpt(Var1,Obj),\n   vpt(Var2,Obj),\n   Var1 != Var2.\n");
}
