#include "cls/pattern.hpp"

#include <algorithm>

namespace cls {

bool operator==(const PatternItem& a, const PatternItem& b) {
  if (!(a.exp == b.exp) || a.unit.index() != b.unit.index()) return false;
  if (!a.is_loop()) return a.seq() == b.seq();
  return std::get<1>(a.unit) == std::get<1>(b.unit) || a.loop() == b.loop();
}

std::strong_ordering compare(const Instantiation& a, const Instantiation& b) {
  if (auto c = a.nats <=> b.nats; c != 0) return c;
  {
    auto ai = a.terms.begin();
    auto bi = b.terms.begin();
    for (; ai != a.terms.end() && bi != b.terms.end(); ++ai, ++bi) {
      if (auto c = ai->first <=> bi->first; c != 0) return c;
      if (auto c = compare(ai->second, bi->second); c != 0) return c;
    }
    if (auto c = a.terms.size() <=> b.terms.size(); c != 0) return c;
  }
  {
    auto ai = a.infos.begin();
    auto bi = b.infos.begin();
    for (; ai != a.infos.end() && bi != b.infos.end(); ++ai, ++bi) {
      if (auto c = ai->first <=> bi->first; c != 0) return c;
      if (auto c = compare(ai->second, bi->second); c != 0) return c;
    }
    return a.infos.size() <=> b.infos.size();
  }
}

Pattern Pattern::ground(const Term& t) {
  Pattern p;
  for (const auto& it : t.items()) {
    if (it.unit.is_seq()) {
      p.items.push_back(PatternItem{it.unit.seq(), Exponent::lit(it.count)});
    } else {
      const Loop& l = it.unit.loop();
      auto pl = std::make_shared<const PatternLoop>(
          PatternLoop{l.part, InfoPattern{l.info, std::nullopt}, Pattern::ground(l.content)});
      p.items.push_back(PatternItem{std::move(pl), Exponent::lit(it.count)});
    }
  }
  return p;
}

bool VarSet::contains_all(const VarSet& other) const {
  return std::includes(terms.begin(), terms.end(), other.terms.begin(), other.terms.end()) &&
         std::includes(infos.begin(), infos.end(), other.infos.begin(), other.infos.end()) &&
         std::includes(nats.begin(), nats.end(), other.nats.begin(), other.nats.end());
}

namespace {

void collect_vars(const Pattern& p, VarSet& out) {
  if (p.rest) out.terms.insert(*p.rest);
  for (const auto& it : p.items) {
    if (it.exp.kind != Exponent::Kind::kLiteral) out.nats.insert(it.exp.var);
    if (it.is_loop()) {
      const PatternLoop& pl = it.loop();
      if (pl.info.rest) out.infos.insert(*pl.info.rest);
      collect_vars(pl.content, out);
    }
  }
}

bool is_ground(const Pattern& p);

bool is_ground(const PatternLoop& pl) {
  return !pl.info.rest && is_ground(pl.content);
}

bool is_ground(const Pattern& p) {
  if (p.rest) return false;
  for (const auto& it : p.items) {
    if (it.exp.kind != Exponent::Kind::kLiteral) return false;
    if (it.is_loop() && !is_ground(it.loop())) return false;
  }
  return true;
}

NonParallel ground_unit(const PatternItem& it) {
  if (!it.is_loop()) return NonParallel(it.seq());
  const PatternLoop& pl = it.loop();
  Term content = substitute(pl.content, Instantiation{});
  return NonParallel(std::make_shared<const Loop>(Loop{pl.part, pl.info.literal, std::move(content)}));
}

void check_sorts_disjoint(const VarSet& v) {
  for (const auto& n : v.terms) {
    if (v.infos.count(n) || v.nats.count(n))
      throw ModelError("variable used with two sorts: " + n);
  }
  for (const auto& n : v.infos) {
    if (v.nats.count(n)) throw ModelError("variable used with two sorts: " + n);
  }
}

void validate_left_rec(const Pattern& p) {
  for (std::size_t i = 0; i < p.items.size(); ++i) {
    const auto& it = p.items[i];
    switch (it.exp.kind) {
      case Exponent::Kind::kLiteral:
        if (it.exp.literal == 0) throw ModelError("zero exponent in left pattern");
        break;
      case Exponent::Kind::kVar:
        break;
      case Exponent::Kind::kVarPlus:
        throw ModelError("arithmetic exponent not allowed in left pattern");
    }
    bool ground_item = !it.is_loop() || is_ground(it.loop());
    if (!ground_item && !(it.exp.kind == Exponent::Kind::kLiteral && it.exp.literal == 1))
      throw ModelError("variable-bearing loop pattern must have exponent 1");
    for (std::size_t j = i + 1; j < p.items.size(); ++j) {
      const auto& other = p.items[j];
      if (it.unit.index() != other.unit.index()) continue;
      bool same = it.is_loop() ? it.loop() == other.loop() : it.seq() == other.seq();
      if (same) throw ModelError("duplicate pattern item at one parallel level");
    }
    if (it.is_loop()) validate_left_rec(it.loop().content);
  }
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // exact: r*(n-k+i) divisible by i in this order
  }
  return r;
}

// -- the matcher --------------------------------------------------------

struct Branch {
  Instantiation sigma;
  std::uint64_t weight = 1;
  std::vector<Match::Part> parts;
};

bool bind_nat(Instantiation& s, const std::string& v, std::uint64_t n) {
  auto [it, fresh] = s.nats.emplace(v, n);
  return fresh || it->second == n;
}

bool bind_term(Instantiation& s, const std::string& v, Term t) {
  auto it = s.terms.find(v);
  if (it != s.terms.end()) return it->second == t;
  s.terms.emplace(v, std::move(t));
  return true;
}

bool bind_info(Instantiation& s, const std::string& v, EnvInfo i) {
  auto it = s.infos.find(v);
  if (it != s.infos.end()) return it->second == i;
  s.infos.emplace(v, std::move(i));
  return true;
}

// Literal bindings must be present with equal values; the rest variable
// binds the remainder, and without one the info must match exactly.
bool match_info(const InfoPattern& ip, const EnvInfo& subject, Instantiation& sigma) {
  std::vector<std::string> names;
  for (const auto& [name, value] : ip.literal.bindings()) {
    const Value* v = subject.find(name);
    if (!v || !(*v == value)) return false;
    names.push_back(name);
  }
  if (ip.rest) return bind_info(sigma, *ip.rest, subject.without(names));
  return subject.size() == ip.literal.size();
}

void match_items(const Pattern& p, const Term& level, bool exact, std::size_t from,
                 std::vector<std::uint64_t>& remaining, const Branch& cur,
                 std::vector<Branch>& out);

// All extensions matching `inner` exactly against `content`.
std::vector<Branch> match_content(const Pattern& inner, const Term& content,
                                  const Instantiation& sigma) {
  std::vector<std::uint64_t> remaining;
  remaining.reserve(content.items().size());
  for (const auto& g : content.items()) remaining.push_back(g.count);
  Branch start;
  start.sigma = sigma;
  std::vector<Branch> done;
  match_items(inner, content, /*exact=*/true, 0, remaining, start, done);
  return done;
}

std::ptrdiff_t find_group(const Term& level, const NonParallel& unit) {
  for (std::size_t i = 0; i < level.items().size(); ++i) {
    if (level.items()[i].unit == unit) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

void match_items(const Pattern& p, const Term& level, bool exact, std::size_t from,
                 std::vector<std::uint64_t>& remaining, const Branch& cur,
                 std::vector<Branch>& out) {
  if (from == p.items.size()) {
    Branch done = cur;
    if (p.rest || exact) {
      std::vector<TermItem> residue;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        if (remaining[i] > 0) residue.push_back(TermItem{level.items()[i].unit, remaining[i]});
      }
      if (p.rest) {
        // Partial consumption keeps the level's canonical order, so the
        // residue is canonical as built.
        if (!bind_term(done.sigma, *p.rest, Term::from_canonical(std::move(residue)))) return;
      } else if (!residue.empty()) {
        return;
      }
    }
    out.push_back(std::move(done));
    return;
  }

  const PatternItem& item = p.items[from];
  bool ground_item = !item.is_loop() || is_ground(item.loop());

  if (ground_item) {
    NonParallel unit = ground_unit(item);
    std::ptrdiff_t g = find_group(level, unit);
    std::uint64_t avail = g >= 0 ? remaining[static_cast<std::size_t>(g)] : 0;
    std::uint64_t take = 0;
    Branch next = cur;
    if (item.exp.kind == Exponent::Kind::kVar) {
      // A nat-variable exponent absorbs the group's full multiplicity,
      // possibly zero when the group is absent.
      take = avail;
      if (!bind_nat(next.sigma, item.exp.var, take)) return;
    } else {
      take = item.exp.literal;
      if (take > avail) return;
      next.weight *= binomial(avail, take);
    }
    if (take > 0) {
      remaining[static_cast<std::size_t>(g)] -= take;
      next.parts.emplace_back(from, static_cast<std::size_t>(g), unit, take,
                              item.exp.kind == Exponent::Kind::kVar ? 1 : binomial(avail, take));
      match_items(p, level, exact, from + 1, remaining, next, out);
      remaining[static_cast<std::size_t>(g)] += take;
    } else {
      match_items(p, level, exact, from + 1, remaining, next, out);
    }
    return;
  }

  // Variable-bearing loop pattern, exponent 1: try every loop group with an
  // equal loop part, then every way its content matches.
  const PatternLoop& pl = item.loop();
  for (std::size_t g = 0; g < level.items().size(); ++g) {
    if (remaining[g] == 0) continue;
    const auto& group = level.items()[g];
    if (!group.unit.is_loop()) continue;
    const Loop& node = group.unit.loop();
    if (!(node.part == pl.part)) continue;
    Instantiation with_info = cur.sigma;
    if (!match_info(pl.info, node.info, with_info)) continue;
    std::uint64_t avail = remaining[g];
    for (auto& inner : match_content(pl.content, node.content, with_info)) {
      Branch next;
      next.sigma = std::move(inner.sigma);
      next.weight = cur.weight * avail * inner.weight;
      next.parts = cur.parts;
      next.parts.emplace_back(from, g, group.unit, 1, avail * inner.weight);
      remaining[g] -= 1;
      match_items(p, level, exact, from + 1, remaining, next, out);
      remaining[g] += 1;
    }
  }
}

bool is_single_loop_pattern(const Pattern& p) {
  return p.items.size() == 1 && !p.rest && p.items[0].is_loop() &&
         p.items[0].exp == Exponent::lit(1);
}

std::vector<Match> finalize(const Pattern& p, std::vector<Branch>&& branches,
                            const CompartmentAddress& site) {
  std::vector<Match> out;
  out.reserve(branches.size());
  bool descend = is_single_loop_pattern(p);
  for (auto& b : branches) {
    Match m;
    std::vector<TermItem> consumed;
    consumed.reserve(b.parts.size());
    for (const auto& part : b.parts) consumed.push_back(TermItem{part.unit, part.count});
    m.consumed = Term::make(std::move(consumed));
    m.binding = std::move(b.sigma);
    m.weight = b.weight;
    m.site = site;
    m.locus = descend ? site.child(b.parts[0].group_index) : site;
    m.parts = std::move(b.parts);
    m.has_rest = p.rest.has_value();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

VarSet variables(const Pattern& p) {
  VarSet v;
  collect_vars(p, v);
  return v;
}

void validate_left_pattern(const Pattern& p) {
  check_sorts_disjoint(variables(p));
  validate_left_rec(p);
}

void validate_right_pattern(const Pattern& p, const VarSet& left_vars) {
  VarSet v = variables(p);
  check_sorts_disjoint(v);
  if (!left_vars.contains_all(v))
    throw ModelError("right pattern uses a variable not bound on the left");
  for (const auto& it : p.items) {
    if (it.exp.kind == Exponent::Kind::kLiteral && it.exp.literal == 0)
      throw ModelError("zero exponent in right pattern");
  }
}

std::vector<Match> match_level(const Pattern& p, const Term& level, const CompartmentAddress& site,
                               bool exact) {
  std::vector<std::uint64_t> remaining;
  remaining.reserve(level.items().size());
  for (const auto& g : level.items()) remaining.push_back(g.count);
  std::vector<Branch> branches;
  match_items(p, level, exact, 0, remaining, Branch{}, branches);
  return finalize(p, std::move(branches), site);
}

namespace {

void match_all_rec(const Pattern& p, const Term& level, CompartmentAddress& here,
                   std::vector<Match>& out) {
  auto ms = match_level(p, level, here, /*exact=*/false);
  out.insert(out.end(), std::make_move_iterator(ms.begin()), std::make_move_iterator(ms.end()));
  for (std::size_t i = 0; i < level.items().size(); ++i) {
    const auto& it = level.items()[i];
    if (!it.unit.is_loop()) continue;
    here.path.push_back(i);
    match_all_rec(p, it.unit.loop().content, here, out);
    here.path.pop_back();
  }
}

}  // namespace

std::vector<Match> match_all(const Pattern& p, const Term& t) {
  std::vector<Match> out;
  CompartmentAddress root;
  match_all_rec(p, t, root, out);
  return out;
}

std::vector<Match> match_loop_node(const Pattern& p, const Loop& node, std::uint64_t group_mult,
                                   const CompartmentAddress& loop_addr) {
  if (!is_single_loop_pattern(p)) throw ModelError("pattern is not a single loop item");
  const PatternLoop& pl = p.items[0].loop();
  std::vector<Match> out;
  if (!(node.part == pl.part)) return out;
  Instantiation sigma;
  if (!match_info(pl.info, node.info, sigma)) return out;
  NonParallel unit(std::make_shared<const Loop>(node));
  std::size_t group_index = loop_addr.path.empty() ? 0 : loop_addr.path.back();
  for (auto& inner : match_content(pl.content, node.content, sigma)) {
    Match m;
    m.binding = std::move(inner.sigma);
    m.weight = group_mult * inner.weight;
    m.site = loop_addr.parent();
    m.locus = loop_addr;
    m.consumed = Term::single(unit, 1);
    m.parts.emplace_back(0, group_index, unit, 1, m.weight);
    m.inner_parts = std::move(inner.parts);
    m.has_rest = false;
    out.push_back(std::move(m));
  }
  return out;
}

Term substitute(const Pattern& p, const Instantiation& sigma) {
  std::vector<TermItem> items;
  for (const auto& it : p.items) {
    std::uint64_t n = 0;
    switch (it.exp.kind) {
      case Exponent::Kind::kLiteral:
        n = it.exp.literal;
        break;
      case Exponent::Kind::kVar:
      case Exponent::Kind::kVarPlus: {
        auto b = sigma.nats.find(it.exp.var);
        if (b == sigma.nats.end()) throw UnboundVariableError("unbound nat variable: " + it.exp.var);
        n = b->second + it.exp.delta;
        break;
      }
    }
    if (n == 0) continue;
    if (!it.is_loop()) {
      items.push_back(TermItem{it.seq(), n});
      continue;
    }
    const PatternLoop& pl = it.loop();
    EnvInfo info = pl.info.literal;
    if (pl.info.rest) {
      auto b = sigma.infos.find(*pl.info.rest);
      if (b == sigma.infos.end()) throw UnboundVariableError("unbound info variable: " + *pl.info.rest);
      info = info.merged(b->second);
    }
    Term content = substitute(pl.content, sigma);
    items.push_back(TermItem{
        NonParallel(std::make_shared<const Loop>(Loop{pl.part, std::move(info), std::move(content)})), n});
  }
  Term t = Term::make(std::move(items));
  if (p.rest) {
    auto b = sigma.terms.find(*p.rest);
    if (b == sigma.terms.end()) throw UnboundVariableError("unbound term variable: " + *p.rest);
    t = t.parallel(b->second);
  }
  return t;
}

std::uint64_t weight(const std::vector<Match>& matches, const CompartmentAddress& locus) {
  std::uint64_t w = 0;
  for (const auto& m : matches) {
    if (m.locus == locus) w += m.weight;
  }
  return w;
}

// -- count-only matching -------------------------------------------------

namespace {

// Ground units of a pattern's items, computed once per counting call so the
// hot recursion does not rebuild them per branch.
struct CompiledItems {
  std::vector<std::optional<NonParallel>> ground;

  explicit CompiledItems(const Pattern& p) {
    ground.reserve(p.items.size());
    for (const auto& it : p.items) {
      bool g = !it.is_loop() || is_ground(it.loop());
      ground.push_back(g ? std::optional<NonParallel>(ground_unit(it)) : std::nullopt);
    }
  }
};

bool bind_nat_counted(std::vector<std::pair<std::string, std::uint64_t>>& nats,
                      const std::string& var, std::uint64_t n) {
  auto it = std::lower_bound(nats.begin(), nats.end(), var,
                             [](const auto& p, const std::string& v) { return p.first < v; });
  if (it != nats.end() && it->first == var) return it->second == n;
  nats.insert(it, {var, n});
  return true;
}

// Literal-only info check; rest variables are not bound in count mode.
bool info_literal_ok(const InfoPattern& ip, const EnvInfo& subject) {
  for (const auto& [name, value] : ip.literal.bindings()) {
    const Value* v = subject.find(name);
    if (!v || !(*v == value)) return false;
  }
  if (!ip.rest) return subject.size() == ip.literal.size();
  return true;
}

void count_items(const Pattern& p, const CompiledItems& compiled, const Term& level, bool exact,
                 std::size_t from, std::vector<std::uint64_t>& remaining, const CountedMatch& cur,
                 std::vector<CountedMatch>& out) {
  if (from == p.items.size()) {
    if (exact && !p.rest) {
      for (std::uint64_t r : remaining) {
        if (r > 0) return;
      }
    }
    out.push_back(cur);
    return;
  }

  const PatternItem& item = p.items[from];

  if (compiled.ground[from]) {
    const NonParallel& unit = *compiled.ground[from];
    std::ptrdiff_t g = find_group(level, unit);
    std::uint64_t avail = g >= 0 ? remaining[static_cast<std::size_t>(g)] : 0;
    CountedMatch next = cur;
    std::uint64_t take;
    std::uint64_t combos = 1;
    if (item.exp.kind == Exponent::Kind::kVar) {
      take = avail;
      if (!bind_nat_counted(next.nats, item.exp.var, take)) return;
    } else {
      take = item.exp.literal;
      if (take > avail) return;
      combos = binomial(avail, take);
      next.weight *= combos;
    }
    if (take > 0) {
      remaining[static_cast<std::size_t>(g)] -= take;
      next.parts.emplace_back(from, static_cast<std::size_t>(g), unit, take, combos);
      count_items(p, compiled, level, exact, from + 1, remaining, next, out);
      remaining[static_cast<std::size_t>(g)] += take;
    } else {
      count_items(p, compiled, level, exact, from + 1, remaining, next, out);
    }
    return;
  }

  const PatternLoop& pl = item.loop();
  CompiledItems inner_compiled(pl.content);
  for (std::size_t g = 0; g < level.items().size(); ++g) {
    if (remaining[g] == 0) continue;
    const auto& group = level.items()[g];
    if (!group.unit.is_loop()) continue;
    const Loop& node = group.unit.loop();
    if (!(node.part == pl.part)) continue;
    if (!info_literal_ok(pl.info, node.info)) continue;

    std::vector<std::uint64_t> inner_remaining;
    inner_remaining.reserve(node.content.items().size());
    for (const auto& ig : node.content.items()) inner_remaining.push_back(ig.count);
    CountedMatch inner_start;
    inner_start.nats = cur.nats;
    std::vector<CountedMatch> inner;
    count_items(pl.content, inner_compiled, node.content, /*exact=*/true, 0, inner_remaining,
                inner_start, inner);

    std::uint64_t avail = remaining[g];
    for (auto& im : inner) {
      CountedMatch next;
      next.nats = std::move(im.nats);
      next.weight = cur.weight * avail * im.weight;
      next.parts = cur.parts;
      next.parts.emplace_back(from, g, group.unit, 1, avail * im.weight);
      remaining[g] -= 1;
      count_items(p, compiled, level, exact, from + 1, remaining, next, out);
      remaining[g] += 1;
    }
  }
}

}  // namespace

std::vector<CountedMatch> count_level(const Pattern& p, const Term& level, bool exact) {
  CompiledItems compiled(p);
  std::vector<std::uint64_t> remaining;
  remaining.reserve(level.items().size());
  for (const auto& g : level.items()) remaining.push_back(g.count);
  std::vector<CountedMatch> out;
  count_items(p, compiled, level, exact, 0, remaining, CountedMatch{}, out);
  return out;
}

std::vector<CountedMatch> count_loop_node(const Pattern& p, const Loop& node,
                                          std::uint64_t group_mult) {
  if (!is_single_loop_pattern(p)) throw ModelError("pattern is not a single loop item");
  const PatternLoop& pl = p.items[0].loop();
  std::vector<CountedMatch> out;
  if (!(node.part == pl.part)) return out;
  if (!info_literal_ok(pl.info, node.info)) return out;
  out = count_level(pl.content, node.content, /*exact=*/true);
  for (auto& m : out) m.weight *= group_mult;
  return out;
}

namespace {

void var_occurrences(const Pattern& p, std::map<std::string, int>& terms,
                     std::map<std::string, int>& infos) {
  if (p.rest) terms[*p.rest] += 1;
  for (const auto& it : p.items) {
    if (!it.is_loop()) continue;
    const PatternLoop& pl = it.loop();
    if (pl.info.rest) infos[*pl.info.rest] += 1;
    var_occurrences(pl.content, terms, infos);
  }
}

}  // namespace

bool count_safe(const Pattern& p) {
  std::map<std::string, int> terms, infos;
  var_occurrences(p, terms, infos);
  for (const auto& [v, n] : terms) {
    if (n > 1) return false;
  }
  for (const auto& [v, n] : infos) {
    if (n > 1) return false;
  }
  return true;
}

}  // namespace cls
