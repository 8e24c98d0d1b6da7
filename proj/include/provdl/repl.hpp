#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <string>

#include "provdl/explorer.hpp"
#include "provdl/parser.hpp"
#include "provdl/render.hpp"

namespace provdl {

/// Rule listing used when picking a candidate: head, then one body literal
/// per indented line.
inline std::string rule_listing(const Rule& r) {
  std::string out = std::to_string(r.id) + ": " + to_string(r.head, ",");
  auto lits = body_literals(r, ",");
  if (lits.empty()) return out + ".\n";
  out += " :-\n";
  for (std::size_t i = 0; i < lits.size(); ++i) out += "   " + lits[i] + (i + 1 < lits.size() ? ",\n" : ".\n");
  return out;
}

/// Interactive explain loop. With echo on, each line read is written back
/// after its prompt, so a scripted session reads like a terminal transcript.
class Repl {
 public:
  enum class Format { Text, Json };

  Repl(const Explorer& explorer, std::istream& in, std::ostream& out, bool echo)
      : ex_(explorer), in_(in), out_(out), echo_(echo) {}

  std::size_t depth() const noexcept { return depth_; }
  Format format() const noexcept { return format_; }

  /// Runs until quit or end of input.
  void run() {
    std::string line;
    while (read("Enter command > ", line)) {
      if (!execute(line)) return;
    }
  }

  /// One command; further input is read for multi-step commands. Returns
  /// false on quit.
  bool execute(const std::string& line) {
    auto [cmd, arg] = split(line);
    try {
      if (cmd.empty()) return true;
      if (cmd == "quit" || cmd == "exit") return false;
      if (cmd == "explain") {
        ProofNode tree = ex_.explain(parse_ground_atom(arg), depth_);
        out_ << (format_ == Format::Text ? render_tree(tree) : to_json(tree).dump() + "\n");
      } else if (cmd == "explainnegation") {
        explain_negation(parse_ground_atom(arg));
      } else if (cmd == "setdepth") {
        std::size_t d = 0;
        auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), d);
        if (ec != std::errc{} || p != arg.data() + arg.size() || d == 0)
          throw Error("setdepth expects a positive integer");
        depth_ = d;
      } else if (cmd == "format") {
        if (arg == "text")
          format_ = Format::Text;
        else if (arg == "json")
          format_ = Format::Json;
        else
          throw Error("format expects text or json");
      } else {
        throw Error("unknown command '" + cmd + "'");
      }
    } catch (const InternalError&) {
      throw;
    } catch (const Error& e) {
      out_ << "Error: " << e.what() << "\n";
    }
    return true;
  }

 private:
  static std::string trim(const std::string& line) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = line.find_last_not_of(" \t\r");
    return line.substr(b, e - b + 1);
  }

  static std::pair<std::string, std::string> split(const std::string& line) {
    std::string s = trim(line);
    if (s.empty()) return {};
    auto sp = s.find_first_of(" \t");
    if (sp == std::string::npos) return {s, {}};
    return {s.substr(0, sp), s.substr(s.find_first_not_of(" \t", sp))};
  }

  bool read(const std::string& prompt, std::string& line) {
    out_ << prompt << std::flush;
    if (!std::getline(in_, line)) {
      if (echo_) out_ << "\n";
      return false;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (echo_) out_ << line << "\n";
    return true;
  }

  void explain_negation(const GroundTuple& t) {
    auto candidates = ex_.negation_candidates(t);
    if (candidates.empty()) throw Error("no rule can derive " + to_string(t));
    for (const auto& c : candidates) out_ << rule_listing(ex_.database().program().rule(c.rule)) << "\n";

    std::string line;
    if (!read("Pick a rule number: ", line)) return;
    auto [pick, rest] = split(line);
    RuleId rule = 0;
    auto [p, ec] = std::from_chars(pick.data(), pick.data() + pick.size(), rule);
    auto chosen = std::find_if(candidates.begin(), candidates.end(), [&](const CandidateRule& c) { return c.rule == rule; });
    if (ec != std::errc{} || p != pick.data() + pick.size() || chosen == candidates.end())
      throw Error("'" + pick + "' is not one of the listed rules");

    VariableBindings bindings;
    for (const auto& v : chosen->free_variables) {
      if (!read("Pick a value for " + v + ": ", line)) return;
      bindings[v] = ex_.parse_value(rule, v, trim(line));
    }
    FailedSubproof f = ex_.evaluate_failed_subproof(rule, t, bindings);
    out_ << (format_ == Format::Text ? render_failed(f) : to_json(f).dump() + "\n");
  }

  const Explorer& ex_;
  std::istream& in_;
  std::ostream& out_;
  bool echo_;
  std::size_t depth_ = kDefaultDepth;
  Format format_ = Format::Text;
};

}  // namespace provdl
