#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "json.hpp"
#include "provdl/engine.hpp"
#include "provdl/explorer.hpp"
#include "provdl/proof_tree.hpp"

namespace provdl {

using Json = nlohmann::json;

inline const char* const kHoldsMark = "✓";
inline const char* const kFailsMark = "X";

inline std::string node_text(const ProofNode& n) {
  if (!n.is_tuple()) return n.text;
  std::string s = to_string(n.tuple);
  if (!n.expanded) s += " [R" + std::to_string(n.annotation.rule) + ", height " + std::to_string(n.annotation.height) + "]";
  return s;
}

namespace detail {

/// Screen layout: leaves are as wide as their text; an inner node spans its
/// children, each followed by one blank column, or its own text if wider.
/// Rows count upward from the root.
class TreeCanvas {
 public:
  explicit TreeCanvas(const ProofNode& root) { place(root, 0, 0); }

  std::string str() const {
    std::string out;
    for (std::size_t r = rows_.size(); r-- > 0;) {
      std::string line = rows_[r];
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
    }
    return out;
  }

 private:
  static bool is_inner(const ProofNode& n) { return n.is_tuple() && n.expanded && n.annotation.rule != 0; }

  static std::size_t width(const ProofNode& n) {
    std::size_t text = node_text(n).size();
    if (!is_inner(n)) return text;
    std::size_t w = 0;
    for (const auto& k : n.children) w += width(k) + 1;
    std::size_t label = 2 + std::to_string(n.annotation.rule).size() + 1;
    return std::max({w, text, label});
  }

  void write(std::size_t row, std::size_t col, const std::string& s) {
    if (rows_.size() <= row) rows_.resize(row + 1);
    auto& line = rows_[row];
    if (line.size() < col + s.size()) line.resize(col + s.size(), ' ');
    line.replace(col, s.size(), s);
  }

  void place(const ProofNode& n, std::size_t x, std::size_t y) {
    std::string text = node_text(n);
    std::size_t w = width(n);
    write(y, x + (w - text.size()) / 2, text);
    if (!is_inner(n)) return;
    std::string label = "(R" + std::to_string(n.annotation.rule) + ")";
    write(y + 1, x, std::string(w - label.size(), '-') + label);
    for (const auto& k : n.children) {
      place(k, x, y + 2);
      x += width(k) + 1;
    }
  }

  std::vector<std::string> rows_;
};

}  // namespace detail

/// ASCII proof tree, root at the bottom, each inference line ending in its
/// rule label.
inline std::string render_tree(const ProofNode& root) { return detail::TreeCanvas(root).str(); }

/// Marked body on one line, the rule line, then the absent head.
inline std::string render_failed(const FailedSubproof& f) {
  std::string body;
  for (const auto& n : f.body) {
    if (!body.empty()) body += "  ";
    body += (n.is_tuple() ? to_string(n.tuple) : n.text) + " " + (n.holds ? kHoldsMark : kFailsMark);
  }
  std::string head = to_string(f.head, ",");
  std::string label = "(R" + std::to_string(f.rule) + ")";
  std::size_t w = std::max({body.size(), head.size(), label.size()});
  std::string out = body + "\n";
  out += std::string(w - label.size(), '-') + label + "\n";
  out += std::string((w - head.size()) / 2, ' ') + head + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline Json tuple_json(const GroundTuple& t) {
  Json a = Json::array({t.relation});
  for (const auto& term : t.args) {
    if (term.kind == Term::Kind::Number)
      a.push_back(term.number);
    else
      a.push_back(term.text);
  }
  return a;
}

/// `["rel", "sym", 42]` to a ground tuple; strings become symbols.
inline GroundTuple tuple_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_string()) throw Error("tuple must be an array [relation, values...]");
  GroundTuple t{j[0].get<std::string>(), {}};
  for (std::size_t i = 1; i < j.size(); ++i) {
    if (j[i].is_string())
      t.args.push_back(Term::symbol(j[i].get<std::string>()));
    else if (j[i].is_number_integer())
      t.args.push_back(Term::num(j[i].get<std::int64_t>()));
    else
      throw Error("tuple values must be strings or integers");
  }
  return t;
}

inline Json to_json(const ProofNode& n) {
  if (!n.is_tuple()) return Json{{"kind", "constraint"}, {"text", n.text}, {"holds", n.holds}};
  Json j{{"kind", "tuple"},
         {"tuple", tuple_json(n.tuple)},
         {"rule", n.annotation.rule},
         {"height", n.annotation.height},
         {"expanded", n.expanded}};
  Json kids = Json::array();
  for (const auto& k : n.children) kids.push_back(to_json(k));
  j["children"] = std::move(kids);
  return j;
}

inline ProofNode proof_node_from_json(const Json& j) {
  ProofNode n;
  if (j.at("kind") == "constraint") {
    n = ProofNode::constraint(j.at("text").get<std::string>(), j.at("holds").get<bool>());
    return n;
  }
  n.tuple = tuple_from_json(j.at("tuple"));
  n.annotation = {j.at("rule").get<RuleId>(), j.at("height").get<Height>()};
  n.expanded = j.at("expanded").get<bool>();
  for (const auto& k : j.at("children")) n.children.push_back(proof_node_from_json(k));
  return n;
}

inline Json to_json(const FailedSubproof& f) {
  Json body = Json::array();
  for (const auto& n : f.body) {
    if (n.is_tuple())
      body.push_back({{"kind", "tuple"}, {"tuple", tuple_json(n.tuple)}, {"holds", n.holds}});
    else
      body.push_back({{"kind", "constraint"}, {"text", n.text}, {"holds", n.holds}});
  }
  return Json{{"tuple", tuple_json(f.head)}, {"rule", f.rule}, {"body", std::move(body)}};
}

inline Json to_json(const CandidateRule& c) {
  return Json{{"rule", c.rule}, {"text", c.text}, {"instantiated", c.instantiated}, {"free_variables", c.free_variables}};
}

inline Json to_json(const EvalStats& s) {
  return Json{{"iterations", s.iterations},
              {"rule_firings", s.rule_firings},
              {"annotation_updates", s.annotation_updates},
              {"max_height", s.max_height},
              {"tuple_count", s.tuple_count}};
}

}  // namespace provdl
