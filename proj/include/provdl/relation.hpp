#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <vector>

#include "provdl/value.hpp"

namespace provdl {

enum class InsertResult { Inserted, Updated, Rejected };

struct InsertOutcome {
  InsertResult result = InsertResult::Rejected;
  /// Annotation held before the call; meaningful for Updated and Rejected.
  Annotation previous;
};

struct AnnotatedTuple {
  Tuple tuple;
  Annotation annotation;

  friend bool operator==(const AnnotatedTuple&, const AnnotatedTuple&) = default;
};

/// A bound prefix of attribute values under some index order.
struct Prefix {
  std::span<const Value> values;
};

namespace detail {

/// Lexicographic tuple order; a Prefix compares equal to every tuple it
/// starts, so equal_range(prefix) yields exactly the matching run.
struct TupleLess {
  using is_transparent = void;

  bool operator()(const Tuple& a, const Tuple& b) const noexcept { return a < b; }
  bool operator()(const Tuple& a, Prefix p) const noexcept {
    return std::lexicographical_compare(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(p.values.size()),
                                        p.values.begin(), p.values.end());
  }
  bool operator()(Prefix p, const Tuple& a) const noexcept {
    return std::lexicographical_compare(p.values.begin(), p.values.end(), a.begin(),
                                        a.begin() + static_cast<std::ptrdiff_t>(p.values.size()));
  }
};

inline std::uint64_t pack(Annotation a) noexcept { return (std::uint64_t{a.height} << 32) | a.rule; }
inline Annotation unpack(std::uint64_t v) noexcept {
  return {static_cast<RuleId>(v & 0xffffffffu), static_cast<Height>(v >> 32)};
}

template <bool Annotated>
struct Cell;

template <>
struct Cell<true> {
  explicit Cell(Annotation a, std::uint32_t s) : packed(pack(a)), stamp(s) {}
  std::atomic<std::uint64_t> packed;
  std::atomic<std::uint32_t> stamp;
};

template <>
struct Cell<false> {
  explicit Cell(Annotation, std::uint32_t s) : stamp(s) {}
  std::atomic<std::uint32_t> stamp;
};

}  // namespace detail

/// Ordered tuple store for one relation.
///
/// The primary index is keyed by the original attributes only and carries the
/// proof annotation as payload, so an annotation update never moves an entry
/// and at most one annotation exists per original tuple. Secondary indexes
/// hold entry pointers under a permuted attribute order and are built lazily.
///
/// Writes (insert_or_minimize) are safe to call concurrently. Reads are not
/// synchronized against writes: callers keep a relation either read-only or
/// write-only within an evaluation phase.
///
/// With Annotated = false the store is a plain set; annotations read as (0,0).
template <bool Annotated>
class BasicRelation {
  using Map = std::map<Tuple, detail::Cell<Annotated>, detail::TupleLess>;

 public:
  using Entry = typename Map::value_type;

  class Index {
   public:
    explicit Index(std::vector<std::size_t> order) : order_(std::move(order)), entries_(Less{&order_}) {}
    const std::vector<std::size_t>& order() const noexcept { return order_; }

   private:
    friend class BasicRelation;
    struct Less {
      using is_transparent = void;
      const std::vector<std::size_t>* order;

      bool operator()(const Entry* a, const Entry* b) const noexcept {
        for (std::size_t i : *order) {
          if (a->first[i] != b->first[i]) return a->first[i] < b->first[i];
        }
        return false;
      }
      bool operator()(const Entry* a, Prefix p) const noexcept {
        for (std::size_t k = 0; k < p.values.size(); ++k) {
          Value v = a->first[(*order)[k]];
          if (v != p.values[k]) return v < p.values[k];
        }
        return false;
      }
      bool operator()(Prefix p, const Entry* a) const noexcept {
        for (std::size_t k = 0; k < p.values.size(); ++k) {
          Value v = a->first[(*order)[k]];
          if (v != p.values[k]) return p.values[k] < v;
        }
        return false;
      }
    };

    std::vector<std::size_t> order_;
    std::set<const Entry*, Less> entries_;
  };

  /// Handle to an index; null means the primary index.
  struct IndexHandle {
    const Index* index = nullptr;
    bool is_primary() const noexcept { return index == nullptr; }
    friend bool operator==(const IndexHandle&, const IndexHandle&) = default;
  };

  explicit BasicRelation(std::size_t arity) : arity_(arity) {}
  BasicRelation(const BasicRelation&) = delete;
  BasicRelation& operator=(const BasicRelation&) = delete;

  std::size_t arity() const noexcept { return arity_; }
  std::size_t size() const noexcept { return map_.size(); }
  bool empty() const noexcept { return map_.empty(); }

  /// Inserts an absent tuple, or lowers the annotation of a present one whose
  /// stored height is strictly larger. Equal heights keep the stored rule.
  InsertOutcome insert_or_minimize(const Tuple& tuple, Annotation a, std::uint32_t stamp = 0) {
    check_arity(tuple.size());
    {
      std::shared_lock lock(mutex_);
      if (auto it = map_.find(tuple); it != map_.end()) return minimize(it->second, a, stamp);
    }
    std::unique_lock lock(mutex_);
    auto [it, inserted] = map_.try_emplace(tuple, a, stamp);
    if (!inserted) return minimize(it->second, a, stamp);
    for (auto& idx : indexes_) idx->entries_.insert(&*it);
    return {InsertResult::Inserted, a};
  }

  std::optional<Annotation> find(std::span<const Value> tuple) const {
    if (auto it = map_.find(Prefix{tuple}); it != map_.end() && tuple.size() == arity_) return annotation(*it);
    return std::nullopt;
  }

  const Entry* find_entry(std::span<const Value> tuple) const {
    if (tuple.size() != arity_) return nullptr;
    auto it = map_.find(Prefix{tuple});
    return it == map_.end() ? nullptr : &*it;
  }

  bool contains(std::span<const Value> tuple) const { return find_entry(tuple) != nullptr; }

  /// True iff the tuple is stored with height <= bound, i.e. an insert at
  /// height `bound` would change nothing.
  bool contains_with_height_below(std::span<const Value> tuple, Height bound) const {
    const Entry* e = find_entry(tuple);
    return e && annotation(*e).height <= bound;
  }

  static Annotation annotation(const Entry& e) noexcept {
    if constexpr (Annotated) {
      return detail::unpack(e.second.packed.load(std::memory_order_relaxed));
    } else {
      return {};
    }
  }
  static std::uint32_t stamp(const Entry& e) noexcept { return e.second.stamp.load(std::memory_order_relaxed); }

  /// Returns an index whose order starts with `attributes`; the remaining
  /// attributes follow in ascending position. Reuses an identical order; an
  /// empty or identity order is the primary index.
  IndexHandle index(std::span<const std::size_t> attributes) {
    std::vector<std::size_t> order(attributes.begin(), attributes.end());
    for (std::size_t i = 0; i < arity_; ++i)
      if (std::find(order.begin(), order.end(), i) == order.end()) order.push_back(i);
    bool identity = true;
    for (std::size_t i = 0; i < arity_; ++i) identity = identity && order[i] == i;
    if (identity) return {};
    {
      std::shared_lock lock(mutex_);
      for (const auto& idx : indexes_)
        if (idx->order_ == order) return {idx.get()};
    }
    std::unique_lock lock(mutex_);
    for (const auto& idx : indexes_)
      if (idx->order_ == order) return {idx.get()};
    auto idx = std::make_unique<Index>(std::move(order));
    for (const auto& e : map_) idx->entries_.insert(&e);
    indexes_.push_back(std::move(idx));
    return {indexes_.back().get()};
  }

  IndexHandle index(std::initializer_list<std::size_t> attributes) {
    return index(std::span<const std::size_t>(attributes.begin(), attributes.size()));
  }

  std::size_t index_count() const {
    std::shared_lock lock(mutex_);
    return indexes_.size();
  }

  /// Visits entries whose leading attributes under `h` equal `prefix`, in
  /// index order. The visitor returns false to stop early; scan returns false
  /// iff it was stopped.
  template <class Visitor>
  bool scan(IndexHandle h, std::span<const Value> prefix, Visitor&& visit) const {
    if (h.is_primary()) {
      auto [lo, hi] = map_.equal_range(Prefix{prefix});
      for (auto it = lo; it != hi; ++it)
        if (!visit(*it)) return false;
    } else {
      auto [lo, hi] = h.index->entries_.equal_range(Prefix{prefix});
      for (auto it = lo; it != hi; ++it)
        if (!visit(**it)) return false;
    }
    return true;
  }

  std::vector<AnnotatedTuple> scan_prefix(IndexHandle h, std::span<const Value> prefix) const {
    std::vector<AnnotatedTuple> out;
    scan(h, prefix, [&](const Entry& e) {
      out.push_back({e.first, annotation(e)});
      return true;
    });
    return out;
  }

  std::vector<AnnotatedTuple> scan_prefix(std::span<const Value> prefix) const { return scan_prefix({}, prefix); }

  template <class Visitor>
  void for_each(Visitor&& visit) const {
    for (const auto& e : map_) visit(e);
  }

  std::vector<AnnotatedTuple> snapshot() const { return scan_prefix({}, {}); }

 private:
  void check_arity(std::size_t n) const {
    if (n != arity_)
      throw InternalError("arity mismatch: relation has " + std::to_string(arity_) + " attributes, tuple has " +
                          std::to_string(n));
  }

  static InsertOutcome minimize(detail::Cell<Annotated>& cell, Annotation a, std::uint32_t stamp) {
    if constexpr (Annotated) {
      std::uint64_t cur = cell.packed.load(std::memory_order_relaxed);
      for (;;) {
        Annotation old = detail::unpack(cur);
        if (old.height <= a.height) return {InsertResult::Rejected, old};
        if (cell.packed.compare_exchange_weak(cur, detail::pack(a), std::memory_order_acq_rel,
                                              std::memory_order_relaxed)) {
          cell.stamp.store(stamp, std::memory_order_relaxed);
          return {InsertResult::Updated, old};
        }
      }
    } else {
      (void)cell;
      (void)a;
      (void)stamp;
      return {InsertResult::Rejected, {}};
    }
  }

  std::size_t arity_;
  Map map_;
  std::vector<std::unique_ptr<Index>> indexes_;
  mutable std::shared_mutex mutex_;
};

using AnnotatedRelation = BasicRelation<true>;
using PlainRelation = BasicRelation<false>;

}  // namespace provdl
