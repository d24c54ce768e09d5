#ifndef CLS_TERM_HPP
#define CLS_TERM_HPP

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cls/error.hpp"

// Terms of the extended calculus: multisets of sequences and
// looping-containment compartments, with named environmental information on
// loops and multiplicities on identical siblings. Terms are immutable values;
// every constructor produces the canonical form, so structural equality is
// congruence.

namespace cls {

class Term;
struct Loop;

// An information value: integer, real, boolean or enum token.
class Value {
 public:
  Value() : v_(std::int64_t{0}) {}

  static Value integer(std::int64_t v) { return Value(Repr(v)); }
  static Value real(double v) { return Value(Repr(v)); }
  static Value boolean(bool v) { return Value(Repr(v)); }
  static Value token(std::string v) { return Value(Repr(std::move(v))); }

  bool is_integer() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_real() const { return std::holds_alternative<double>(v_); }
  bool is_boolean() const { return std::holds_alternative<bool>(v_); }
  bool is_token() const { return std::holds_alternative<std::string>(v_); }

  std::int64_t as_integer() const;
  // Accepts integer or real storage.
  double as_real() const;
  bool as_boolean() const;
  const std::string& as_token() const;

  friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }

 private:
  using Repr = std::variant<std::int64_t, double, bool, std::string>;
  explicit Value(Repr v) : v_(std::move(v)) {}
  Repr v_;

  friend std::strong_ordering compare(const Value& a, const Value& b);
};

std::strong_ordering compare(const Value& a, const Value& b);

// Named environmental information attached to a loop. Names unique, kept
// sorted; the empty map plays the role of lambda.
class EnvInfo {
 public:
  EnvInfo() = default;
  static EnvInfo make(std::vector<std::pair<std::string, Value>> bindings);

  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }
  const Value* find(const std::string& name) const;
  const Value& at(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }

  // Replaces an existing binding; throws UnknownInfoError if absent.
  EnvInfo with(const std::string& name, Value v) const;
  // Union of two maps with disjoint names.
  EnvInfo merged(const EnvInfo& other) const;
  // All bindings except the listed names.
  EnvInfo without(const std::vector<std::string>& names) const;

  const std::vector<std::pair<std::string, Value>>& bindings() const { return bindings_; }

  friend bool operator==(const EnvInfo& a, const EnvInfo& b) { return a.bindings_ == b.bindings_; }

 private:
  std::vector<std::pair<std::string, Value>> bindings_;  // sorted by name
};

std::strong_ordering compare(const EnvInfo& a, const EnvInfo& b);

// A (possibly empty) sequence of symbols; symbols are nonempty tokens over
// [A-Za-z0-9_].
struct Sequence {
  std::vector<std::string> symbols;

  bool empty() const { return symbols.empty(); }
  friend bool operator==(const Sequence& a, const Sequence& b) = default;
};

std::strong_ordering compare(const Sequence& a, const Sequence& b);

// A sequence or a looping-containment compartment. Loops are shared
// immutable nodes, so copying terms is cheap and unchanged subtrees keep
// their identity across rewrites.
class NonParallel {
 public:
  /*implicit*/ NonParallel(Sequence s) : v_(std::move(s)) {}
  explicit NonParallel(std::shared_ptr<const Loop> l) : v_(std::move(l)) {}

  bool is_loop() const { return v_.index() == 1; }
  bool is_seq() const { return v_.index() == 0; }
  const Sequence& seq() const { return std::get<0>(v_); }
  const Loop& loop() const { return *std::get<1>(v_); }
  const std::shared_ptr<const Loop>& loop_ptr() const { return std::get<1>(v_); }

  friend bool operator==(const NonParallel& a, const NonParallel& b);

 private:
  std::variant<Sequence, std::shared_ptr<const Loop>> v_;
};

std::strong_ordering compare(const NonParallel& a, const NonParallel& b);

struct TermItem {
  NonParallel unit;
  std::uint64_t count = 1;

  friend bool operator==(const TermItem& a, const TermItem& b) {
    return a.count == b.count && a.unit == b.unit;
  }
};

// Canonical multiset of non-parallel components. Invariants: counts >= 1,
// no empty sequences, items sorted by the structural order, equal units
// merged.
class Term {
 public:
  Term() = default;

  // Canonicalizing constructor: merges, sorts and drops eps items.
  static Term make(std::vector<TermItem> items);
  // Fast path for items already in canonical form (sorted, merged, positive
  // counts, no eps); checked in debug builds.
  static Term from_canonical(std::vector<TermItem> items);
  static Term single(NonParallel unit, std::uint64_t count = 1);
  static Term symbol(const std::string& name);
  static Term seq(Sequence s);
  static Term loop(Term part, EnvInfo info, Term content, std::uint64_t count = 1);

  const std::vector<TermItem>& items() const { return items_; }
  bool empty() const { return items_.empty(); }

  // Multiset union with another canonical term.
  Term parallel(const Term& other) const;
  // Multiset difference; throws Error if other is not a sub-multiset.
  Term subtract(const Term& other) const;
  bool contains(const Term& other) const;

  // Sum of counts at this level.
  std::uint64_t total_count() const;

  friend bool operator==(const Term& a, const Term& b);

 private:
  std::vector<TermItem> items_;
};

std::strong_ordering compare(const Term& a, const Term& b);

struct Loop {
  Term part;
  EnvInfo info;
  Term content;

  friend bool operator==(const Loop& a, const Loop& b) {
    return a.part == b.part && a.info == b.info && a.content == b.content;
  }
};

std::strong_ordering compare(const Loop& a, const Loop& b);

// Path of item indices from the root term to a loop node. The empty path is
// the virtual root compartment: empty info, whole term as content.
struct CompartmentAddress {
  std::vector<std::size_t> path;

  bool is_root() const { return path.empty(); }
  CompartmentAddress child(std::size_t i) const;
  CompartmentAddress parent() const;
  std::string str() const;

  friend bool operator==(const CompartmentAddress& a, const CompartmentAddress& b) = default;
  friend auto operator<=>(const CompartmentAddress& a, const CompartmentAddress& b) = default;
};

// Re-derives the canonical form. Terms are canonical by construction, so
// this is idempotent; it exists as the explicit normalization entry point.
Term canonicalize(const Term& t);

// Structural congruence: equality of canonical forms.
bool congruent(const Term& t1, const Term& t2);

using LoopPredicate = std::function<bool(const Loop&)>;

// Total multiplicity of top-level loop items satisfying the filter.
std::uint64_t count_individuals(const Term& t, const LoopPredicate& filter);

// Loops with loop part `a` whose content carries any of the given symbols as
// a top-level item; an empty list accepts every a-loop.
LoopPredicate individuals_with(std::vector<std::string> content_symbols);

struct ResolvedCompartment {
  const EnvInfo& info;
  const Term& content;
};

// Info and content of the addressed compartment; the root address yields
// empty info and the whole term. Throws InvalidAddressError.
ResolvedCompartment resolve(const Term& t, const CompartmentAddress& addr);

// New term with one info binding of the addressed loop replaced. Throws
// InvalidAddressError / UnknownInfoError.
Term update_info(const Term& t, const CompartmentAddress& addr, const std::string& name, Value v);

// New term with the addressed compartment's content replaced wholesale.
Term replace_content(const Term& t, const CompartmentAddress& addr, Term content);

// Addresses of all loops satisfying the predicate, in depth-first order.
std::vector<CompartmentAddress> find_loops(const Term& t, const LoopPredicate& pred);

}  // namespace cls

#endif
