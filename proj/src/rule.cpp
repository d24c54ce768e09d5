#include "cls/rule.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "cls/rng.hpp"

namespace cls {

bool Guard::passes(const Instantiation& sigma) const {
  switch (kind) {
    case Kind::kAlways:
      return true;
    case Kind::kNatGreater: {
      auto it = sigma.nats.find(var);
      if (it == sigma.nats.end()) throw ModelError("guard variable not bound: " + var);
      return it->second > threshold;
    }
  }
  return true;
}

namespace {

bool pattern_is_single_loop(const Pattern& p) {
  return p.items.size() == 1 && !p.rest && p.items[0].is_loop() &&
         p.items[0].exp == Exponent::lit(1);
}

bool loop_item_fully_variable(const PatternItem& it) {
  if (!it.is_loop()) return false;
  const PatternLoop& pl = it.loop();
  return pl.info.literal.empty() && pl.info.rest && pl.content.items.empty() && pl.content.rest;
}

double rate_value(const RewriteRule& rule, const Match& m) {
  if (!rule.rate.fn) return rule.rate.constant;
  if (!rule.rate.needs_portion) return rule.rate.fn(Term{});
  return rule.rate.fn(substitute(rule.left, m.binding));
}

// The parts vector holding the strategy's choice slot: for single-loop-item
// rules the choice lives one level down, in the loop-content match.
const std::vector<Match::Part>& strategy_parts(const RewriteRule& rule, const Match& m) {
  return rule.single_loop ? m.inner_parts : m.parts;
}

const Match::Part& choice_part(const RewriteRule& rule, const Match& m) {
  for (const auto& p : strategy_parts(rule, m)) {
    if (p.item_index == *rule.choice_item) return p;
  }
  throw ModelError("match lacks the strategy choice item");
}

// Key identifying the reactant portion of a match with the strategy-chosen
// slot removed.
using ReactantKey = std::pair<Term, std::vector<std::pair<std::string, std::uint64_t>>>;

struct ReactantKeyLess {
  bool operator()(const ReactantKey& a, const ReactantKey& b) const {
    if (auto c = compare(a.first, b.first); c != 0) return c < 0;
    return a.second < b.second;
  }
};

ReactantKey reactant_key(const RewriteRule& rule, const Match& m) {
  std::vector<TermItem> items;
  for (const auto& p : strategy_parts(rule, m)) {
    if (p.item_index != *rule.choice_item) items.push_back(TermItem{p.unit, p.count});
  }
  std::vector<std::pair<std::string, std::uint64_t>> nats(m.binding.nats.begin(),
                                                          m.binding.nats.end());
  return {Term::make(std::move(items)), std::move(nats)};
}

}  // namespace

RewriteRule RewriteRule::make(std::string id, Guard guard, Pattern left, Pattern right, RateFn rate,
                              Strategy strategy) {
  validate_left_pattern(left);
  VarSet lv = variables(left);
  validate_right_pattern(right, lv);
  if (guard.kind == Guard::Kind::kNatGreater && !lv.nats.count(guard.var))
    throw ModelError("rule " + id + ": guard variable not bound by left pattern");

  RewriteRule r;
  r.id = std::move(id);
  r.guard = std::move(guard);
  r.left = std::move(left);
  r.right = std::move(right);
  r.rate = std::move(rate);
  r.strategy = strategy;
  r.single_loop = pattern_is_single_loop(r.left);

  if (strategy != Strategy::kUniform) {
    if (lv.nats.size() != 1)
      throw ModelError("rule " + r.id + ": blood strategy needs exactly one nat variable");
    r.strategy_nat_var = *lv.nats.begin();
  }
  r.counting_left = r.left;
  if (strategy == Strategy::kMaxBloodRandomContainer) {
    const Pattern& lhs = r.single_loop ? r.left.items[0].loop().content : r.left;
    for (std::size_t i = 0; i < lhs.items.size(); ++i) {
      if (loop_item_fully_variable(lhs.items[i])) {
        if (r.choice_item) throw ModelError("rule " + r.id + ": ambiguous container slot");
        r.choice_item = i;
      }
    }
    if (!r.choice_item) throw ModelError("rule " + r.id + ": no container slot for the strategy");
    r.choice_loop_part = lhs.items[*r.choice_item].loop().part;
    // For counting, the chosen slot is not a reactant: strip it so weights
    // count eligible individuals once, not per container.
    Pattern stripped = r.single_loop ? r.left.items[0].loop().content : r.left;
    stripped.items.erase(stripped.items.begin() + static_cast<std::ptrdiff_t>(*r.choice_item));
    if (r.single_loop) {
      const PatternLoop& outer = r.left.items[0].loop();
      r.counting_left.items[0].unit = std::make_shared<const PatternLoop>(
          PatternLoop{outer.part, outer.info, std::move(stripped)});
    } else {
      r.counting_left = std::move(stripped);
    }
  }
  r.countable = count_safe(r.counting_left);
  return r;
}

RewriteRule constant_rate_rule(std::string id, Pattern left, double k, Pattern right) {
  if (!(k >= 0) || !std::isfinite(k)) throw ModelError("negative or non-finite rate constant");
  return RewriteRule::make(std::move(id), Guard::always(), std::move(left), std::move(right),
                           RateFn::k(k));
}

namespace {

void enumerate_rec(const Term& t, CompartmentAddress& here, std::vector<CompartmentRef>& out) {
  for (std::size_t i = 0; i < t.items().size(); ++i) {
    const auto& it = t.items()[i];
    if (!it.unit.is_loop()) continue;
    here.path.push_back(i);
    out.push_back(CompartmentRef{here, it.unit.loop_ptr(), it.count});
    enumerate_rec(it.unit.loop().content, here, out);
    here.path.pop_back();
  }
}

}  // namespace

std::vector<CompartmentRef> enumerate_compartments(const Term& t) {
  std::vector<CompartmentRef> out;
  out.push_back(CompartmentRef{CompartmentAddress{}, nullptr, 1});
  CompartmentAddress here;
  enumerate_rec(t, here, out);
  return out;
}

std::vector<Match> compartment_matches(const RewriteRule& rule, const Term& state,
                                       const CompartmentRef& comp) {
  std::vector<Match> ms;
  if (rule.single_loop) {
    if (!comp.node) return ms;
    ms = match_loop_node(rule.left, *comp.node, comp.group_mult, comp.addr);
  } else {
    const Term& level = comp.node ? comp.node->content : state;
    // Matches inside the compartment's own parallel level; for the model's
    // rules the chosen slot for the nested loop pattern is at this level.
    ms = match_level(rule.left, level, comp.addr, /*exact=*/false);
  }
  if (rule.guard.kind != Guard::Kind::kAlways) {
    std::erase_if(ms, [&](const Match& m) { return !rule.guard.passes(m.binding); });
  }
  return ms;
}

namespace {

bool level_has_loop_with_part(const Term& level, const Term& part) {
  for (const auto& it : level.items()) {
    if (it.unit.is_loop() && it.unit.loop().part == part) return true;
  }
  return false;
}

// Full-matching propensity; ground truth for rules count-only matching
// cannot handle.
double full_propensity(const RewriteRule& rule, const Term& state, const CompartmentRef& comp) {
  auto ms = compartment_matches(rule, state, comp);
  if (ms.empty()) return 0.0;
  if (rule.strategy == Strategy::kMaxBloodRandomContainer) {
    // The container slot is a strategy choice, not a reactant: each eligible
    // individual counts once however many containers it could target.
    std::map<ReactantKey, double, ReactantKeyLess> groups;
    for (const auto& m : ms) {
      const auto& cp = choice_part(rule, m);
      double w = static_cast<double>(m.weight / cp.combos);
      groups.emplace(reactant_key(rule, m), w * rate_value(rule, m));
    }
    double a = 0.0;
    for (const auto& [k, v] : groups) a += v;
    return a;
  }
  double a = 0.0;
  for (const auto& m : ms) a += static_cast<double>(m.weight) * rate_value(rule, m);
  return a;
}

double cell_propensity(const RewriteRule& rule, const Term& state, const CompartmentRef& comp) {
  if (!rule.countable) return full_propensity(rule, state, comp);

  std::vector<CountedMatch> ms;
  if (rule.single_loop) {
    if (!comp.node) return 0.0;
    if (rule.choice_item &&
        !level_has_loop_with_part(comp.node->content, rule.choice_loop_part))
      return 0.0;  // oviposition without any target container
    ms = count_loop_node(rule.counting_left, *comp.node, comp.group_mult);
  } else {
    if (rule.choice_item) {
      const Term& level = comp.node ? comp.node->content : state;
      if (!level_has_loop_with_part(level, rule.choice_loop_part)) return 0.0;
    }
    ms = count_level(rule.counting_left, comp.node ? comp.node->content : state,
                     /*exact=*/false);
  }
  if (ms.empty()) return 0.0;

  std::uint64_t total = 0;
  for (const auto& m : ms) {
    if (rule.guard.kind == Guard::Kind::kNatGreater) {
      auto it = std::lower_bound(m.nats.begin(), m.nats.end(), rule.guard.var,
                                 [](const auto& p, const std::string& v) { return p.first < v; });
      if (it == m.nats.end() || it->first != rule.guard.var)
        throw ModelError("guard variable not bound: " + rule.guard.var);
      if (!(it->second > rule.guard.threshold)) continue;
    }
    total += m.weight;
  }
  if (total == 0) return 0.0;

  double r;
  if (!rule.rate.fn) {
    r = rule.rate.constant;
  } else if (!rule.rate.needs_portion) {
    r = rule.rate.fn(Term{});
  } else if (rule.single_loop) {
    // The matched portion of a single-loop rule is the compartment itself.
    r = rule.rate.fn(Term::single(NonParallel(comp.node), 1));
  } else {
    return full_propensity(rule, state, comp);
  }
  return static_cast<double>(total) * r;
}

CompartmentRef comp_at(const Term& state, const CompartmentAddress& addr) {
  if (addr.is_root()) return CompartmentRef{addr, nullptr, 1};
  auto parent = resolve(state, addr.parent());
  std::size_t idx = addr.path.back();
  if (idx >= parent.content.items().size() || !parent.content.items()[idx].unit.is_loop())
    throw InvalidAddressError("invalid compartment address " + addr.str());
  return CompartmentRef{addr, parent.content.items()[idx].unit.loop_ptr(),
                        parent.content.items()[idx].count};
}

}  // namespace

double propensity(const RewriteRule& rule, const Term& state, const CompartmentRef& comp) {
  return cell_propensity(rule, state, comp);
}

double propensity(const RewriteRule& rule, const Term& state, const CompartmentAddress& addr) {
  return cell_propensity(rule, state, comp_at(state, addr));
}

PropensityTable PropensityTable::build(const Term& state, const std::vector<RewriteRule>& rules) {
  return PropensityTable().updated(state, {}, rules);
}

namespace {

// The table only lists compartments some rule can have a nonzero cell at:
// when every rule is a single-loop pattern, that is loops whose part one of
// the rules carries (plus the virtual root). With any generic rule, every
// loop qualifies.
struct CompartmentFilter {
  bool all = false;
  std::vector<const Term*> parts;

  explicit CompartmentFilter(const std::vector<RewriteRule>& rules) {
    for (const auto& r : rules) {
      if (!r.single_loop) {
        all = true;
        return;
      }
      const Term& part = r.left.items[0].loop().part;
      bool seen = false;
      for (const Term* p : parts) {
        if (*p == part) {
          seen = true;
          break;
        }
      }
      if (!seen) parts.push_back(&part);
    }
  }

  bool keep(const Loop& l) const {
    if (all) return true;
    for (const Term* p : parts) {
      if (*p == l.part) return true;
    }
    return false;
  }
};

void enumerate_filtered(const Term& t, const CompartmentFilter& filter, CompartmentAddress& here,
                        std::vector<CompartmentRef>& out) {
  for (std::size_t i = 0; i < t.items().size(); ++i) {
    const auto& it = t.items()[i];
    if (!it.unit.is_loop()) continue;
    here.path.push_back(i);
    if (filter.keep(it.unit.loop()))
      out.push_back(CompartmentRef{here, it.unit.loop_ptr(), it.count});
    enumerate_filtered(it.unit.loop().content, filter, here, out);
    here.path.pop_back();
  }
}

}  // namespace

PropensityTable PropensityTable::updated(const Term& new_state,
                                         const std::vector<CompartmentAddress>& changed,
                                         const std::vector<RewriteRule>& rules) const {
  PropensityTable t;
  t.state_ = new_state;
  t.n_rules_ = rules.size();
  {
    CompartmentFilter filter(rules);
    t.comps_.push_back(CompartmentRef{CompartmentAddress{}, nullptr, 1});
    CompartmentAddress here;
    enumerate_filtered(new_state, filter, here, t.comps_);
  }
  t.cells_.resize(t.comps_.size());

  std::unordered_map<const Loop*, std::size_t> old_index;
  old_index.reserve(comps_.size());
  for (std::size_t i = 0; i < comps_.size(); ++i) {
    if (comps_[i].node) old_index.emplace(comps_[i].node.get(), i);
  }

  for (std::size_t c = 0; c < t.comps_.size(); ++c) {
    const CompartmentRef& comp = t.comps_[c];
    bool forced = std::find(changed.begin(), changed.end(), comp.addr) != changed.end();
    if (comp.node && !forced) {
      auto it = old_index.find(comp.node.get());
      if (it != old_index.end() && comps_[it->second].group_mult == comp.group_mult) {
        t.cells_[c] = cells_[it->second];
        continue;
      }
    }
    for (std::size_t j = 0; j < rules.size(); ++j) {
      double a = cell_propensity(rules[j], new_state, comp);
      if (a != 0.0) t.cells_[c].push_back(Cell{static_cast<std::uint32_t>(j), a});
    }
  }
  t.recompute_totals();
  return t;
}

void PropensityTable::recompute_totals() {
  rule_totals_.assign(n_rules_, 0.0);
  a0_ = 0.0;
  for (std::size_t j = 0; j < n_rules_; ++j) {
    double s = 0.0;
    for (std::size_t c = 0; c < comps_.size(); ++c) s += cell(j, c);
    rule_totals_[j] = s;
    a0_ += s;
  }
}

double PropensityTable::cell(std::size_t rule_idx, std::size_t comp_idx) const {
  for (const Cell& cl : cells_[comp_idx]) {
    if (cl.rule == rule_idx) return cl.a;
  }
  return 0.0;
}

std::pair<std::size_t, std::size_t> PropensityTable::pick(double threshold) const {
  double acc = 0.0;
  std::size_t last_j = 0, last_c = 0;
  bool any = false;
  for (std::size_t j = 0; j < n_rules_; ++j) {
    for (std::size_t c = 0; c < comps_.size(); ++c) {
      double a = cell(j, c);
      if (a <= 0.0) continue;
      acc += a;
      last_j = j;
      last_c = c;
      any = true;
      if (acc >= threshold) return {j, c};
    }
  }
  if (!any) throw Error("pick on an empty propensity table");
  return {last_j, last_c};  // numerical slack at threshold ~ a0
}

std::vector<Match> PropensityTable::matches_for(std::size_t rule_idx, std::size_t comp_idx,
                                                const std::vector<RewriteRule>& rules) const {
  auto ms = compartment_matches(rules[rule_idx], state_, comps_[comp_idx]);
  for (auto& m : ms) m.version = version_;
  return ms;
}

bool operator==(const PropensityTable& a, const PropensityTable& b) {
  if (a.n_rules_ != b.n_rules_ || a.comps_.size() != b.comps_.size()) return false;
  for (std::size_t c = 0; c < a.comps_.size(); ++c) {
    if (a.comps_[c].addr != b.comps_[c].addr || a.comps_[c].group_mult != b.comps_[c].group_mult)
      return false;
    for (std::size_t j = 0; j < a.n_rules_; ++j) {
      if (a.cell(j, c) != b.cell(j, c)) return false;
    }
  }
  return a.rule_totals_ == b.rule_totals_ && a.a0_ == b.a0_;
}

PropensityTable PropensityTable::from_matrix(const std::vector<std::vector<double>>& a) {
  PropensityTable t;
  t.n_rules_ = a.size();
  std::size_t n_comps = a.empty() ? 0 : a[0].size();
  for (std::size_t c = 0; c < n_comps; ++c) {
    t.comps_.push_back(CompartmentRef{CompartmentAddress{{c}}, nullptr, 1});
  }
  t.cells_.resize(n_comps);
  for (std::size_t j = 0; j < a.size(); ++j) {
    for (std::size_t c = 0; c < n_comps; ++c) {
      if (a[j][c] != 0.0) t.cells_[c].push_back(Cell{static_cast<std::uint32_t>(j), a[j][c]});
    }
  }
  t.recompute_totals();
  return t;
}

Term execute(const RewriteRule& rule, const Match& m, const Term& state) {
  ResolvedCompartment site = [&] {
    try {
      return resolve(state, m.site);
    } catch (const InvalidAddressError&) {
      throw StaleMatchError("match site no longer resolves");
    }
  }();
  if (!site.content.contains(m.consumed)) throw StaleMatchError("consumed items not present");
  Term rhs = substitute(rule.right, m.binding);
  Term new_level = m.has_rest ? std::move(rhs) : site.content.subtract(m.consumed).parallel(rhs);
  return replace_content(state, m.site, std::move(new_level));
}

namespace {

const Match& weighted_pick(const std::vector<const Match*>& ms,
                           const std::vector<std::uint64_t>& ws, Rng& rng) {
  std::uint64_t total = 0;
  for (auto w : ws) total += w;
  std::uint64_t r = rng.below(total);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (r < ws[i]) return *ms[i];
    r -= ws[i];
  }
  return *ms.back();
}

std::uint64_t nat_of(const Match& m, const std::string& var) {
  auto it = m.binding.nats.find(var);
  if (it == m.binding.nats.end()) throw ModelError("strategy variable not bound: " + var);
  return it->second;
}

}  // namespace

const Match& choose_match(const RewriteRule& rule, const std::vector<Match>& matches, Rng& rng) {
  if (matches.empty()) throw Error("choose_match on empty candidate set");
  if (matches.size() == 1) return matches.front();

  std::vector<const Match*> cand;
  std::vector<std::uint64_t> ws;

  switch (rule.strategy) {
    case Strategy::kUniform: {
      for (const auto& m : matches) {
        cand.push_back(&m);
        ws.push_back(m.weight);
      }
      break;
    }
    case Strategy::kMinBlood: {
      std::uint64_t best = UINT64_MAX;
      for (const auto& m : matches) best = std::min(best, nat_of(m, rule.strategy_nat_var));
      for (const auto& m : matches) {
        if (nat_of(m, rule.strategy_nat_var) == best) {
          cand.push_back(&m);
          ws.push_back(m.weight);
        }
      }
      break;
    }
    case Strategy::kMaxBloodRandomContainer: {
      // Destination container first, uniformly at random; then the adult
      // with the largest blood count among matches targeting it.
      std::vector<std::pair<Term, std::uint64_t>> containers;
      for (const auto& m : matches) {
        const auto& cp = choice_part(rule, m);
        Term key = Term::single(cp.unit, 1);
        bool seen = false;
        for (const auto& [k, w] : containers) {
          if (k == key) {
            seen = true;
            break;
          }
        }
        if (!seen) containers.emplace_back(std::move(key), cp.combos);
      }
      std::uint64_t total = 0;
      for (const auto& [k, w] : containers) total += w;
      std::uint64_t r = rng.below(total);
      const Term* chosen = nullptr;
      for (const auto& [k, w] : containers) {
        if (r < w) {
          chosen = &k;
          break;
        }
        r -= w;
      }
      std::uint64_t best = 0;
      for (const auto& m : matches) {
        if (!(Term::single(choice_part(rule, m).unit, 1) == *chosen)) continue;
        best = std::max(best, nat_of(m, rule.strategy_nat_var));
      }
      for (const auto& m : matches) {
        const auto& cp = choice_part(rule, m);
        if (!(Term::single(cp.unit, 1) == *chosen)) continue;
        if (nat_of(m, rule.strategy_nat_var) != best) continue;
        cand.push_back(&m);
        ws.push_back(m.weight / cp.combos);
      }
      break;
    }
  }
  return weighted_pick(cand, ws, rng);
}

}  // namespace cls
