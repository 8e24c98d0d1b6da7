#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "provdl/provdl.hpp"

namespace provdl::testing {

inline std::filesystem::path samples_dir() { return PROVDL_SAMPLES_DIR; }
inline std::filesystem::path data_dir() { return PROVDL_TEST_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Points-to example: 4 rules, 8 facts.
inline Program points_to() { return parse_program_file(samples_dir() / "points_to.dl"); }

inline GroundTuple tup(std::string rel, std::initializer_list<const char*> args) {
  GroundTuple t{std::move(rel), {}};
  for (const char* a : args) t.args.push_back(Term::symbol(a));
  return t;
}

/// Points-to rules with the inequality in the alias rule optional.
inline std::string points_to_rules(bool inequality) {
  std::string s = R"(
.decl new(v:symbol, o:symbol)
.decl assign(a:symbol, b:symbol)
.decl load(a:symbol, b:symbol, f:symbol)
.decl store(a:symbol, f:symbol, b:symbol)
.decl vpt(v:symbol, o:symbol)
.decl alias(a:symbol, b:symbol)
.input new, assign, load, store
.output vpt, alias
vpt(Var, Obj) :- new(Var, Obj).
vpt(Var, Obj) :- assign(Var, Var2), vpt(Var2, Obj).
vpt(Var, Obj) :- load(Var, Y, F), store(P, F, Q), alias(P, Y), vpt(Q, Obj).
)";
  s += inequality ? "alias(Var1, Var2) :- vpt(Var1, Obj), vpt(Var2, Obj), Var1 != Var2.\n"
                  : "alias(Var1, Var2) :- vpt(Var1, Obj), vpt(Var2, Obj).\n";
  s += R"(
new("a", "l1"). assign("b", "a"). new("c", "l3"). new("d", "l4").
store("c", "f", "a"). load("e", "d", "f"). load("b", "c", "f"). assign("a", "b").
)";
  return s;
}

/// Two lower strata compute assign("b","a") at height 6 (a five-step hop
/// chain plus one rule); the points-to stratum on top then first finds
/// vpt(b,l1) at 7 and lowers it to 3 once alias(c,c) appears.
inline std::string staged_points_to() {
  return R"(
.decl link(a:symbol, b:symbol)
.decl hop(a:symbol, b:symbol)
.decl new(v:symbol, o:symbol)
.decl assign(a:symbol, b:symbol)
.decl load(a:symbol, b:symbol, f:symbol)
.decl store(a:symbol, f:symbol, b:symbol)
.decl vpt(v:symbol, o:symbol)
.decl alias(a:symbol, b:symbol)
.input link, new, load, store
hop(X, Y) :- link(X, Y).
hop(X, Z) :- hop(X, Y), link(Y, Z).
assign("b", "a") :- hop("n0", "n5").
vpt(Var, Obj) :- new(Var, Obj).
vpt(Var, Obj) :- assign(Var, Var2), vpt(Var2, Obj).
vpt(Var, Obj) :- load(Var, Y, F), store(P, F, Q), alias(P, Y), vpt(Q, Obj).
alias(Var1, Var2) :- vpt(Var1, Obj), vpt(Var2, Obj).
link("n0", "n1"). link("n1", "n2"). link("n2", "n3"). link("n3", "n4"). link("n4", "n5").
assign("a", "b").
new("a", "l1"). new("c", "l3"). new("d", "l4").
store("c", "f", "a"). load("e", "d", "f"). load("b", "c", "f").
)";
}

}  // namespace provdl::testing
