#pragma once

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "provdl/ast.hpp"

namespace provdl {

namespace detail {

struct Token {
  enum class Kind { Ident, Directive, String, Number, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  std::int64_t number = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> tokenize() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token tok;
      tok.line = line_;
      tok.column = column_;
      if (pos_ >= src_.size()) {
        out.push_back(tok);
        return out;
      }
      char c = src_[pos_];
      if (c == '.' && pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
        advance();
        tok.kind = Token::Kind::Directive;
        tok.text = identifier();
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        tok.kind = Token::Kind::Ident;
        tok.text = identifier();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        tok.kind = Token::Kind::Number;
        tok.text = number_text();
        auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.number);
        if (ec != std::errc{} || ptr != tok.text.data() + tok.text.size())
          throw ParseError(tok.line, tok.column, "number out of range: " + tok.text);
      } else if (c == '"') {
        tok.kind = Token::Kind::String;
        tok.text = string_literal(tok);
      } else {
        tok.kind = Token::Kind::Punct;
        tok.text = punct(tok);
      }
      out.push_back(std::move(tok));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (src_.substr(pos_, 2) == "/*") {
        std::size_t l = line_, col = column_;
        advance();
        advance();
        while (pos_ < src_.size() && src_.substr(pos_, 2) != "*/") advance();
        if (pos_ >= src_.size()) throw ParseError(l, col, "unterminated block comment");
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' || src_[pos_] == '?'))
      advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string number_text() {
    std::size_t start = pos_;
    if (src_[pos_] == '-') advance();
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string string_literal(const Token& tok) {
    advance();
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      char c = src_[pos_];
      if (c == '\n') break;
      if (c == '\\' && pos_ + 1 < src_.size()) {
        advance();
        switch (src_[pos_]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: out += src_[pos_];
        }
      } else {
        out += c;
      }
      advance();
    }
    if (pos_ >= src_.size() || src_[pos_] != '"') throw ParseError(tok.line, tok.column, "unterminated string");
    advance();
    return out;
  }

  std::string punct(const Token& tok) {
    static constexpr std::string_view two[] = {":-", "!=", "<=", ">="};
    for (auto p : two) {
      if (src_.substr(pos_, 2) == p) {
        advance();
        advance();
        return std::string(p);
      }
    }
    char c = src_[pos_];
    if (std::string_view("(),.:!=<>").find(c) == std::string_view::npos)
      throw ParseError(tok.line, tok.column, std::string("unexpected character '") + c + "'");
    advance();
    return std::string(1, c);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(Lexer(src).tokenize()) {}

  Program parse() {
    while (peek().kind != Token::Kind::End) {
      if (peek().kind == Token::Kind::Directive)
        directive();
      else
        clause();
    }
    return build();
  }

  /// A single ground atom such as `alias("a", "b")`; bare identifiers are symbols.
  Fact ground_atom() {
    Atom a = atom(/*ground=*/true);
    if (peek().kind == Token::Kind::Punct && peek().text == ".") next();
    if (peek().kind != Token::Kind::End) fail(peek(), "trailing input after tuple");
    return a;
  }

 private:
  struct PendingClause {
    Token where;
    Atom head;
    bool is_fact = true;
    std::vector<Atom> body;
    std::vector<Atom> negations;
    std::vector<Constraint> constraints;
  };
  struct PendingIo {
    Token where;
    std::string relation;
    bool output;
  };

  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.column, msg);
  }

  bool accept(std::string_view punct) {
    if (peek().kind == Token::Kind::Punct && peek().text == punct) {
      next();
      return true;
    }
    return false;
  }

  void expect(std::string_view punct) {
    if (!accept(punct)) fail(peek(), "expected '" + std::string(punct) + "'" + found());
  }

  std::string found() const {
    const auto& t = peek();
    if (t.kind == Token::Kind::End) return ", found end of input";
    return ", found '" + t.text + "'";
  }

  std::string ident() {
    if (peek().kind != Token::Kind::Ident) fail(peek(), "expected identifier" + found());
    return next().text;
  }

  void directive() {
    Token t = next();
    if (t.text == "decl") {
      RelationDecl decl;
      decl.name = ident();
      expect("(");
      if (!accept(")")) {
        do {
          Attribute attr;
          attr.name = ident();
          expect(":");
          Token ty = peek();
          std::string type = ident();
          if (type == "symbol")
            attr.type = AttrType::Symbol;
          else if (type == "number")
            attr.type = AttrType::Number;
          else
            fail(ty, "unknown attribute type '" + type + "' (expected symbol or number)");
          decl.attributes.push_back(std::move(attr));
        } while (accept(","));
        expect(")");
      }
      decls_.emplace_back(t, std::move(decl));
    } else if (t.text == "input" || t.text == "output") {
      do {
        io_.push_back({peek(), ident(), t.text == "output"});
      } while (accept(","));
    } else {
      fail(t, "unknown directive '." + t.text + "'");
    }
  }

  Term term(bool ground) {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::Ident: {
        std::string name = next().text;
        if (!ground) return Term::variable(std::move(name));
        if (name == "_") fail(t, "anonymous variable in a ground atom");
        return Term::symbol(std::move(name));
      }
      case Token::Kind::String: return Term::symbol(next().text);
      case Token::Kind::Number: return Term::num(next().number);
      default: fail(t, "expected a term" + found());
    }
  }

  Atom atom(bool ground) {
    Atom a;
    a.relation = ident();
    expect("(");
    if (!accept(")")) {
      do {
        a.args.push_back(term(ground));
      } while (accept(","));
      expect(")");
    }
    return a;
  }

  std::optional<CmpOp> comparison() {
    if (peek().kind != Token::Kind::Punct) return std::nullopt;
    const std::string& p = peek().text;
    std::optional<CmpOp> op;
    if (p == "=") op = CmpOp::Eq;
    else if (p == "!=") op = CmpOp::Ne;
    else if (p == "<") op = CmpOp::Lt;
    else if (p == "<=") op = CmpOp::Le;
    else if (p == ">") op = CmpOp::Gt;
    else if (p == ">=") op = CmpOp::Ge;
    if (op) next();
    return op;
  }

  void clause() {
    PendingClause c;
    c.where = peek();
    std::size_t head_start = pos_;
    // Parse the head as non-ground first; a fact re-reads it as ground.
    c.head = atom(false);
    if (accept(":-")) {
      c.is_fact = false;
      do {
        literal(c);
      } while (accept(","));
    } else {
      std::size_t end = pos_;
      pos_ = head_start;
      c.head = atom(true);
      if (pos_ != end) fail(c.where, "internal parser error");
    }
    expect(".");
    clauses_.push_back(std::move(c));
  }

  void literal(PendingClause& c) {
    if (accept("!")) {
      c.negations.push_back(atom(false));
      return;
    }
    if (peek().kind == Token::Kind::Ident && pos_ + 1 < tokens_.size() &&
        tokens_[pos_ + 1].kind == Token::Kind::Punct && tokens_[pos_ + 1].text == "(") {
      c.body.push_back(atom(false));
      return;
    }
    Constraint k;
    k.lhs = term(false);
    Token at = peek();
    auto op = comparison();
    if (!op) fail(at, "expected an atom or a comparison" + found());
    k.op = *op;
    k.rhs = term(false);
    c.constraints.push_back(std::move(k));
  }

  static std::string located(const Token& t, const std::string& msg) {
    return std::to_string(t.line) + ":" + std::to_string(t.column) + ": " + msg;
  }

  Program build() {
    Program p;
    for (auto& [where, decl] : decls_) {
      try {
        p.add_relation(std::move(decl));
      } catch (const SemanticError& e) {
        throw SemanticError(located(where, e.what()));
      }
    }
    for (const auto& io : io_) {
      if (!p.find(io.relation))
        throw SemanticError(located(io.where, "undeclared relation '" + io.relation + "' in directive"));
      auto& decl = p.relation_mut(io.relation);
      (io.output ? decl.is_output : decl.is_input) = true;
    }
    for (auto& c : clauses_) {
      try {
        if (c.is_fact) {
          p.add_fact(std::move(c.head));
        } else if (c.body.empty() && c.negations.empty() && is_ground(c.head) && all_ground(c.constraints)) {
          // `p(1) :- 1 < 2.` is a conditional fact
          if (constant_constraints_hold(c.constraints)) p.add_fact(std::move(c.head));
        } else {
          Rule r;
          r.head = std::move(c.head);
          r.body = std::move(c.body);
          r.negations = std::move(c.negations);
          r.constraints = std::move(c.constraints);
          p.add_rule(std::move(r));
        }
      } catch (const SemanticError& e) {
        throw SemanticError(located(c.where, e.what()));
      }
    }
    return p;
  }

  static bool is_ground(const Atom& a) {
    return std::all_of(a.args.begin(), a.args.end(), [](const Term& t) { return t.is_constant(); });
  }
  static bool all_ground(const std::vector<Constraint>& cs) {
    return std::all_of(cs.begin(), cs.end(),
                       [](const Constraint& c) { return c.lhs.is_constant() && c.rhs.is_constant(); });
  }
  static bool constant_constraints_hold(const std::vector<Constraint>& cs) {
    for (const auto& c : cs) {
      if (c.lhs.kind != c.rhs.kind) throw SemanticError("type mismatch in constraint " + to_string(c));
      if (c.lhs.kind == Term::Kind::Symbol) {
        if (is_order_comparison(c.op)) throw SemanticError("order comparison " + to_string(c) + " needs numbers");
        bool eq = c.lhs.text == c.rhs.text;
        if ((c.op == CmpOp::Eq) != eq) return false;
      } else if (!compare(c.op, c.lhs.number, c.rhs.number)) {
        return false;
      }
    }
    return true;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::pair<Token, RelationDecl>> decls_;
  std::vector<PendingIo> io_;
  std::vector<PendingClause> clauses_;
};

}  // namespace detail

/// Parses Datalog source into a validated Program. Throws ParseError or
/// SemanticError.
inline Program parse_program(std::string_view source) { return detail::Parser(source).parse(); }

inline Program parse_program_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open program file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

/// Parses a tuple literal such as `vpt("b", "l4")`. Symbols may be quoted or
/// bare; numbers are bare. The relation is not checked against a program.
inline Fact parse_ground_atom(std::string_view text) { return detail::Parser(text).ground_atom(); }

/// Reads a tab-separated fact file: no header, one tuple per line.
inline std::vector<Fact> load_fact_file(const std::filesystem::path& path, const RelationDecl& decl) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open fact file " + path.string());
  std::vector<Fact> facts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Fact f;
    f.relation = decl.name;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      std::string field = line.substr(start, tab == std::string::npos ? std::string::npos : tab - start);
      std::size_t column = f.args.size();
      if (column >= decl.arity())
        throw Error(path.string() + ":" + std::to_string(line_no) + ": more than " + std::to_string(decl.arity()) +
                    " columns for relation " + decl.name);
      if (decl.attributes[column].type == AttrType::Number) {
        std::int64_t n = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), n);
        if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
          throw Error(path.string() + ":" + std::to_string(line_no) + ": '" + field + "' is not a number");
        f.args.push_back(Term::num(n));
      } else {
        f.args.push_back(Term::symbol(field));
      }
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.args.size() != decl.arity())
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(decl.arity()) +
                  " columns for relation " + decl.name + ", found " + std::to_string(f.args.size()));
    facts.push_back(std::move(f));
  }
  return facts;
}

}  // namespace provdl
