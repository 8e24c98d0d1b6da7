#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace provdl {

/// Encoded constant. Symbols are interned to dense ids, numbers are stored as-is.
using Value = std::int64_t;
using Tuple = std::vector<Value>;
using RelationId = std::uint32_t;
/// 1-based rule number; 0 marks an input (EDB) tuple.
using RuleId = std::uint32_t;
using Height = std::uint32_t;

/// Proof annotation: the rule that produced a tuple and the height of its
/// minimal proof tree.
struct Annotation {
  RuleId rule = 0;
  Height height = 0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed syntax that violates a static rule: undeclared relation, arity
/// mismatch, ungrounded variable, duplicate declaration, type clash.
class SemanticError : public Error {
 public:
  using Error::Error;
};

class CyclicNegation : public Error {
 public:
  CyclicNegation(std::string negated, std::string head)
      : Error("negation of " + negated + " in the definition of " + head +
              " lies on a recursive cycle"),
        negated_(std::move(negated)),
        head_(std::move(head)) {}

  const std::string& negated() const noexcept { return negated_; }
  const std::string& head() const noexcept { return head_; }

 private:
  std::string negated_;
  std::string head_;
};

class NotDerivable : public Error {
 public:
  using Error::Error;
};
class UnknownTuple : public Error {
 public:
  using Error::Error;
};
class TupleExists : public Error {
 public:
  using Error::Error;
};
class IsEdb : public Error {
 public:
  using Error::Error;
};
class ResourceExhausted : public Error {
 public:
  using Error::Error;
};
/// Broken internal invariant (store corruption, unsound evaluation).
class InternalError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------

/// Bidirectional symbol dictionary. Interning is injective and stable for the
/// lifetime of the table; safe for concurrent use.
class SymbolTable {
 public:
  Value intern(std::string_view text) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = ids_.find(std::string(text)); it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    auto [it, inserted] = ids_.try_emplace(std::string(text), static_cast<Value>(names_.size()));
    if (inserted) names_.push_back(it->first);
    return it->second;
  }

  std::optional<Value> find(std::string_view text) const {
    std::shared_lock lock(mutex_);
    if (auto it = ids_.find(std::string(text)); it != ids_.end()) return it->second;
    return std::nullopt;
  }

  const std::string& text(Value id) const {
    std::shared_lock lock(mutex_);
    if (id < 0 || static_cast<std::size_t>(id) >= names_.size())
      throw InternalError("symbol id " + std::to_string(id) + " is not interned");
    return names_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return names_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Value> ids_;
  // deque: references handed out by text() survive later interning
  std::deque<std::string> names_;
};

}  // namespace provdl
