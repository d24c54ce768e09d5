#ifndef CLS_RULE_HPP
#define CLS_RULE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cls/pattern.hpp"
#include "cls/term.hpp"

// Guarded, rate-bearing rewrite rules and the per-rule-per-compartment
// propensity table with incremental update.

namespace cls {

class Rng;

// State-dependent rate: a named registry function applied to the matched
// ground portion, or a plain constant.
struct RateFn {
  std::string name;  // empty for constants
  std::vector<std::int64_t> args;
  double constant = 0.0;
  bool needs_portion = false;
  std::function<double(const Term& portion)> fn;

  static RateFn k(double value) { return RateFn{{}, {}, value, false, nullptr}; }
  double operator()(const Term& portion) const { return fn ? fn(portion) : constant; }
  double value_without_portion() const { return constant; }
};

struct Guard {
  enum class Kind { kAlways, kNatGreater };
  Kind kind = Kind::kAlways;
  std::string var;
  std::uint64_t threshold = 0;

  static Guard always() { return {}; }
  static Guard nat_greater(std::string v, std::uint64_t t) {
    return Guard{Kind::kNatGreater, std::move(v), t};
  }
  bool passes(const Instantiation& sigma) const;

  friend bool operator==(const Guard&, const Guard&) = default;
};

// Match-selection policies (the fairness strategies applied when a rule has
// several candidate matches).
enum class Strategy {
  kUniform,                  // weighted by combinatorial weight
  kMinBlood,                 // smallest bound nat first (blood sucking)
  kMaxBloodRandomContainer,  // largest bound nat; destination container uniform
};

struct RewriteRule {
  std::string id;
  Guard guard;
  Pattern left;
  Pattern right;
  RateFn rate;
  Strategy strategy = Strategy::kUniform;

  // Derived at construction.
  bool single_loop = false;               // left is one loop item, exponent 1, no rest
  std::string strategy_nat_var;           // the nat variable strategies inspect
  std::optional<std::size_t> choice_item; // left index of the strategy-chosen loop slot
  bool countable = false;                 // propensities computable by count-only matching
  Pattern counting_left;                  // left with the choice slot stripped (else = left)
  Term choice_loop_part;                  // loop part of the choice slot

  static RewriteRule make(std::string id, Guard guard, Pattern left, Pattern right, RateFn rate,
                          Strategy strategy = Strategy::kUniform);
};

// Desugars the constant-rate triple form.
RewriteRule constant_rate_rule(std::string id, Pattern left, double k, Pattern right);

// A loop node of the current state viewed as a compartment, or the virtual
// root. `group_mult` is the multiplicity of its item group.
struct CompartmentRef {
  CompartmentAddress addr;
  std::shared_ptr<const Loop> node;  // null for the virtual root
  std::uint64_t group_mult = 1;
};

std::vector<CompartmentRef> enumerate_compartments(const Term& t);

// Per-rule, per-compartment propensities a_j^i, with totals recomputed by
// fresh summation (rules outer, compartments inner, matching Eq. 3's
// bracket). Values for compartments whose subtree is unchanged are carried
// across updates by node identity; matches are re-derived on demand.
class PropensityTable {
 public:
  PropensityTable() = default;

  static PropensityTable build(const Term& state, const std::vector<RewriteRule>& rules);

  // Table for the new state; entries of unchanged compartments are carried
  // over, compartments listed in `changed` are always recomputed.
  PropensityTable updated(const Term& new_state, const std::vector<CompartmentAddress>& changed,
                          const std::vector<RewriteRule>& rules) const;

  double total() const { return a0_; }
  double rule_total(std::size_t rule_idx) const { return rule_totals_[rule_idx]; }
  const std::vector<CompartmentRef>& compartments() const { return comps_; }
  std::size_t rule_count() const { return n_rules_; }
  double cell(std::size_t rule_idx, std::size_t comp_idx) const;

  // First (rule, compartment) whose running sum reaches the threshold, in
  // the fixed iteration order.
  std::pair<std::size_t, std::size_t> pick(double threshold) const;

  // Guard-passing matches of one cell, re-derived from the stored state.
  std::vector<Match> matches_for(std::size_t rule_idx, std::size_t comp_idx,
                                 const std::vector<RewriteRule>& rules) const;

  const Term& state() const { return state_; }
  std::uint64_t version() const { return version_; }
  void stamp(std::uint64_t version) { version_ = version; }

  friend bool operator==(const PropensityTable& a, const PropensityTable& b);

  // Test support: a table with the given propensity matrix (rules x
  // compartments) and synthetic compartment addresses.
  static PropensityTable from_matrix(const std::vector<std::vector<double>>& a);

 private:
  struct Cell {
    std::uint32_t rule = 0;
    double a = 0.0;
  };

  void recompute_totals();

  Term state_;
  std::vector<CompartmentRef> comps_;
  std::vector<std::vector<Cell>> cells_;  // per compartment, sparse by rule
  std::vector<double> rule_totals_;
  double a0_ = 0.0;
  std::size_t n_rules_ = 0;
  std::uint64_t version_ = 0;
};

// Guard-passing matches of a rule attributed to one compartment.
std::vector<Match> compartment_matches(const RewriteRule& rule, const Term& state,
                                       const CompartmentRef& comp);

// Propensity of one rule in one compartment of the state.
double propensity(const RewriteRule& rule, const Term& state, const CompartmentAddress& addr);
double propensity(const RewriteRule& rule, const Term& state, const CompartmentRef& comp);

// Applies the rule at the match: consumed items replaced by the substituted
// right pattern at the match site. Throws StaleMatchError if the match does
// not fit the state.
Term execute(const RewriteRule& rule, const Match& m, const Term& state);

// Match selection per the rule's strategy.
const Match& choose_match(const RewriteRule& rule, const std::vector<Match>& matches, Rng& rng);

}  // namespace cls

#endif
