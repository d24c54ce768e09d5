#ifndef CLS_TESTS_BRUTEFORCE_HPP
#define CLS_TESTS_BRUTEFORCE_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cls/dsl.hpp"
#include "cls/pattern.hpp"
#include "cls/term.hpp"

// Independent match-counting oracle: multiplicities are unrolled into
// distinct individual copies, every assignment of pattern slots to copies is
// enumerated (including nested choices inside loops), and assignments are
// deduplicated by (consumed individual identities, binding). The count of
// distinct assignments per locus is the reference value for h_j^i.
//
// This deliberately shares no code with the engine's matcher beyond the term
// types themselves.

namespace cls_tests {
namespace brute {

using namespace cls;

struct Indiv {
  std::vector<int> id;  // unique path: (group, copy) pairs flattened
  NonParallel unit = NonParallel(Sequence{});
  std::vector<Indiv> content;  // expanded loop content
  std::size_t group = 0;       // group index within its level
};

inline std::vector<Indiv> expand_level(const Term& t, const std::vector<int>& prefix) {
  std::vector<Indiv> out;
  for (std::size_t g = 0; g < t.items().size(); ++g) {
    const auto& item = t.items()[g];
    for (std::uint64_t k = 0; k < item.count; ++k) {
      Indiv ind;
      ind.id = prefix;
      ind.id.push_back(static_cast<int>(g));
      ind.id.push_back(static_cast<int>(k));
      ind.unit = item.unit;
      ind.group = g;
      if (item.unit.is_loop()) ind.content = expand_level(item.unit.loop().content, ind.id);
      out.push_back(std::move(ind));
    }
  }
  return out;
}

inline std::string sigma_key(const Instantiation& s) {
  std::string out;
  for (const auto& [k, v] : s.terms) out += "$" + k + "=" + dsl::serialize(v) + ";";
  for (const auto& [k, v] : s.infos) out += "@" + k + "=" + dsl::serialize(v) + ";";
  for (const auto& [k, v] : s.nats) out += "#" + k + "=" + std::to_string(v) + ";";
  return out;
}

struct Assignment {
  std::vector<std::vector<int>> consumed;  // ids, including nested designations
  Instantiation sigma;
  std::size_t top_group = 0;  // group of the consumed top item (single-loop patterns)
};

inline bool pattern_item_ground(const PatternItem& it);

inline bool pattern_ground(const Pattern& p) {
  if (p.rest) return false;
  for (const auto& it : p.items) {
    if (it.exp.kind != Exponent::Kind::kLiteral) return false;
    if (!pattern_item_ground(it)) return false;
  }
  return true;
}

inline bool pattern_item_ground(const PatternItem& it) {
  if (!it.is_loop()) return true;
  return !it.loop().info.rest && pattern_ground(it.loop().content);
}

inline bool info_matches(const InfoPattern& ip, const EnvInfo& subject, Instantiation& sigma) {
  std::vector<std::string> names;
  for (const auto& [name, value] : ip.literal.bindings()) {
    const Value* v = subject.find(name);
    if (!v || !(*v == value)) return false;
    names.push_back(name);
  }
  if (!ip.rest) return subject.size() == ip.literal.size();
  EnvInfo rest = subject.without(names);
  auto it = sigma.infos.find(*ip.rest);
  if (it != sigma.infos.end()) return it->second == rest;
  sigma.infos.emplace(*ip.rest, std::move(rest));
  return true;
}

inline Term term_of(const std::vector<Indiv>& level, const std::vector<bool>& used, bool unused_only) {
  std::vector<TermItem> items;
  for (std::size_t i = 0; i < level.size(); ++i) {
    if (used[i] == unused_only) continue;
    items.push_back(TermItem{level[i].unit, 1});
  }
  return Term::make(std::move(items));
}

inline NonParallel ground_unit_of(const PatternItem& it) {
  if (!it.is_loop()) return NonParallel(it.seq());
  const PatternLoop& pl = it.loop();
  return NonParallel(std::make_shared<const Loop>(
      Loop{pl.part, pl.info.literal, substitute(pl.content, Instantiation{})}));
}

// Enumerates assignments of p's items against the level; calls sink for
// every complete assignment.
inline void assign(const Pattern& p, std::size_t item_idx, const std::vector<Indiv>& level,
                   std::vector<bool>& used, Assignment cur, bool exact,
                   const std::function<void(const Assignment&)>& sink) {
  if (item_idx == p.items.size()) {
    if (p.rest) {
      Term residue = term_of(level, used, /*unused_only=*/true);
      auto it = cur.sigma.terms.find(*p.rest);
      if (it != cur.sigma.terms.end()) {
        if (!(it->second == residue)) return;
      } else {
        cur.sigma.terms.emplace(*p.rest, std::move(residue));
      }
    } else if (exact) {
      for (std::size_t i = 0; i < level.size(); ++i) {
        if (!used[i]) return;
      }
    }
    sink(cur);
    return;
  }

  const PatternItem& item = p.items[item_idx];

  if (pattern_item_ground(item)) {
    NonParallel unit = ground_unit_of(item);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (!used[i] && level[i].unit == unit) candidates.push_back(i);
    }
    if (item.exp.kind == Exponent::Kind::kVar) {
      Assignment next = cur;
      auto it = next.sigma.nats.find(item.exp.var);
      if (it != next.sigma.nats.end()) {
        if (it->second != candidates.size()) return;
      } else {
        next.sigma.nats.emplace(item.exp.var, candidates.size());
      }
      for (std::size_t i : candidates) {
        used[i] = true;
        next.consumed.push_back(level[i].id);
      }
      if (!candidates.empty()) next.top_group = level[candidates[0]].group;
      assign(p, item_idx + 1, level, used, next, exact, sink);
      for (std::size_t i : candidates) used[i] = false;
      return;
    }
    // literal k: every subset of size k
    std::uint64_t k = item.exp.literal;
    if (candidates.size() < k) return;
    std::vector<std::size_t> pick(k);
    std::function<void(std::size_t, std::uint64_t)> subsets = [&](std::size_t from,
                                                                  std::uint64_t left) {
      if (left == 0) {
        Assignment next = cur;
        for (std::size_t j = 0; j < k; ++j) {
          used[pick[j]] = true;
          next.consumed.push_back(level[pick[j]].id);
        }
        next.top_group = level[pick[0]].group;
        assign(p, item_idx + 1, level, used, next, exact, sink);
        for (std::size_t j = 0; j < k; ++j) used[pick[j]] = false;
        return;
      }
      for (std::size_t i = from; i + left <= candidates.size() + 0; ++i) {
        if (i >= candidates.size()) break;
        pick[k - left] = candidates[i];
        subsets(i + 1, left - 1);
      }
    };
    subsets(0, k);
    return;
  }

  // Variable-bearing loop pattern, exponent 1.
  const PatternLoop& pl = item.loop();
  for (std::size_t i = 0; i < level.size(); ++i) {
    if (used[i] || !level[i].unit.is_loop()) continue;
    const Loop& node = level[i].unit.loop();
    if (!(node.part == pl.part)) continue;
    Instantiation with_info = cur.sigma;
    if (!info_matches(pl.info, node.info, with_info)) continue;
    std::vector<bool> inner_used(level[i].content.size(), false);
    Assignment inner_start;
    inner_start.sigma = with_info;
    used[i] = true;
    assign(pl.content, 0, level[i].content, inner_used, inner_start, /*exact=*/true,
           [&](const Assignment& inner) {
             Assignment next = cur;
             next.sigma = inner.sigma;
             next.consumed.push_back(level[i].id);
             for (const auto& id : inner.consumed) next.consumed.push_back(id);
             next.top_group = level[i].group;
             assign(p, item_idx + 1, level, used, next, exact, sink);
           });
    used[i] = false;
  }
}

// Distinct assignments per locus over the whole term.
inline std::map<CompartmentAddress, std::uint64_t> weights_by_locus(const Pattern& p,
                                                                    const Term& t) {
  bool descend = p.items.size() == 1 && !p.rest && p.items[0].is_loop() &&
                 p.items[0].exp == Exponent::lit(1);
  std::map<CompartmentAddress, std::uint64_t> out;

  std::function<void(const Term&, CompartmentAddress)> walk = [&](const Term& level,
                                                                  CompartmentAddress here) {
    auto individuals = expand_level(level, {});
    std::vector<bool> used(individuals.size(), false);
    std::map<std::size_t, std::set<std::pair<std::vector<std::vector<int>>, std::string>>> seen;
    assign(p, 0, individuals, used, Assignment{}, /*exact=*/false, [&](const Assignment& a) {
      auto ids = a.consumed;
      std::sort(ids.begin(), ids.end());
      seen[descend ? a.top_group : 0].insert({std::move(ids), sigma_key(a.sigma)});
    });
    for (const auto& [group, keys] : seen) {
      CompartmentAddress locus = descend ? here.child(group) : here;
      out[locus] += keys.size();
    }
    for (std::size_t i = 0; i < level.items().size(); ++i) {
      if (level.items()[i].unit.is_loop()) {
        walk(level.items()[i].unit.loop().content, here.child(i));
      }
    }
  };
  walk(t, CompartmentAddress{});
  return out;
}

}  // namespace brute
}  // namespace cls_tests

#endif
