#ifndef CLS_PATTERN_HPP
#define CLS_PATTERN_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cls/term.hpp"

// Extended patterns (term, info and natural-number variables), matching of
// patterns against terms, and substitution of instantiations into patterns.

namespace cls {

struct PatternLoop;

// Exponent on a pattern item: a literal count, a nat-variable (which binds
// the full multiplicity of its group, possibly 0), or `var + delta` which is
// only meaningful on right-hand sides.
struct Exponent {
  enum class Kind { kLiteral, kVar, kVarPlus };
  Kind kind = Kind::kLiteral;
  std::uint64_t literal = 1;
  std::string var;
  std::uint64_t delta = 0;

  static Exponent lit(std::uint64_t n) { return {Kind::kLiteral, n, {}, 0}; }
  static Exponent nat(std::string v) { return {Kind::kVar, 1, std::move(v), 0}; }
  static Exponent nat_plus(std::string v, std::uint64_t d) { return {Kind::kVarPlus, 1, std::move(v), d}; }

  friend bool operator==(const Exponent&, const Exponent&) = default;
};

// Literal bindings that must be present with equal values, plus an optional
// info-variable absorbing the rest; without the variable the info must match
// exactly.
struct InfoPattern {
  EnvInfo literal;
  std::optional<std::string> rest;

  friend bool operator==(const InfoPattern&, const InfoPattern&) = default;
};

struct PatternItem {
  std::variant<Sequence, std::shared_ptr<const PatternLoop>> unit;
  Exponent exp;

  bool is_loop() const { return unit.index() == 1; }
  const Sequence& seq() const { return std::get<0>(unit); }
  const PatternLoop& loop() const { return *std::get<1>(unit); }

  friend bool operator==(const PatternItem& a, const PatternItem& b);
};

// A parallel level of a pattern: items plus at most one term-variable rest,
// which binds the entire unconsumed residue of its level.
struct Pattern {
  std::vector<PatternItem> items;
  std::optional<std::string> rest;

  static Pattern ground(const Term& t);

  friend bool operator==(const Pattern&, const Pattern&) = default;
};

struct PatternLoop {
  Term part;  // loop parts are matched literally
  InfoPattern info;
  Pattern content;

  friend bool operator==(const PatternLoop&, const PatternLoop&) = default;
};

// Binding of term, info and nat variables.
struct Instantiation {
  std::map<std::string, Term> terms;
  std::map<std::string, EnvInfo> infos;
  std::map<std::string, std::uint64_t> nats;

  friend bool operator==(const Instantiation&, const Instantiation&) = default;
};

std::strong_ordering compare(const Instantiation& a, const Instantiation& b);

// Variables of a pattern, by sort.
struct VarSet {
  std::set<std::string> terms, infos, nats;

  bool contains_all(const VarSet& other) const;
};

VarSet variables(const Pattern& p);

// Checks the structural restrictions the matcher relies on: each variable
// name has one sort, at most one rest per level, exponents != 1 only on
// ground items. Throws ModelError.
void validate_left_pattern(const Pattern& p);
void validate_right_pattern(const Pattern& p, const VarSet& left_vars);

// One way a pattern embeds into a term.
//
// `site` is the parallel level holding the consumed items; `locus` is the
// compartment the match belongs to for propensity bookkeeping (for a pattern
// that is a single loop item, the matched loop itself; otherwise the site).
// `weight` is the number of distinct reactant combinations the match stands
// for; `parts` record which subject group each pattern item consumed.
struct Match {
  struct Part {
    std::size_t item_index = 0;   // index into Pattern::items
    std::size_t group_index = 0;  // index into the subject level's items
    NonParallel unit;             // concrete consumed unit
    std::uint64_t count = 0;
    std::uint64_t combos = 1;     // combination factor contributed by this part

    Part(std::size_t item_i, std::size_t group_i, NonParallel u, std::uint64_t c, std::uint64_t w)
        : item_index(item_i), group_index(group_i), unit(std::move(u)), count(c), combos(w) {}
  };

  Instantiation binding;
  CompartmentAddress locus;
  CompartmentAddress site;
  Term consumed;
  std::uint64_t weight = 1;
  std::vector<Part> parts;
  // For single-loop-item patterns: the parts of the loop-content match, so
  // strategies can identify the slot an item of the inner level filled.
  std::vector<Part> inner_parts;
  std::uint64_t version = 0;  // stamped by the engine for staleness checks

  bool has_rest = false;  // pattern had a top-level rest variable
};

// Every distinct match of p anywhere in t (all parallel levels, depth
// first). Deterministic order: by site, then enumeration order.
std::vector<Match> match_all(const Pattern& p, const Term& t);

// Matches of p at one parallel level, given the level's items and its
// address. `exact` requires the whole level to be consumed (loop contents);
// top-level matching is sub-multiset matching.
std::vector<Match> match_level(const Pattern& p, const Term& level, const CompartmentAddress& site,
                               bool exact);

// Matches of a single-loop-item pattern directly against one loop node whose
// group has the given multiplicity. Used by the propensity table.
std::vector<Match> match_loop_node(const Pattern& p, const Loop& node, std::uint64_t group_mult,
                                   const CompartmentAddress& loop_addr);

// Ground term obtained by substituting sigma into p. Throws
// UnboundVariableError if a variable of p is unbound.
Term substitute(const Pattern& p, const Instantiation& sigma);

// Sum of weights of matches at the given compartment (h_j^i).
std::uint64_t weight(const std::vector<Match>& matches, const CompartmentAddress& locus);

// Count-only matching for propensity computation: yields weights, nat
// bindings and consumed parts but skips term/info residue binding. Agrees
// with full matching for patterns whose term and info variables each occur
// once (the matcher cannot see equality constraints it skipped).
struct CountedMatch {
  std::vector<std::pair<std::string, std::uint64_t>> nats;  // sorted by name
  std::uint64_t weight = 1;
  std::vector<Match::Part> parts;
};

std::vector<CountedMatch> count_level(const Pattern& p, const Term& level, bool exact);
std::vector<CountedMatch> count_loop_node(const Pattern& p, const Loop& node,
                                          std::uint64_t group_mult);

// Whether every term and info variable of p occurs exactly once, making
// count-only matching exact.
bool count_safe(const Pattern& p);

}  // namespace cls

#endif
