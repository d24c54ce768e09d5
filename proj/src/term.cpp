#include "cls/term.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>

namespace cls {

namespace {

// Total order on doubles (libstdc++ 11 lacks std::strong_order for
// floating point). Finite values order numerically; ties and non-finite
// values fall back to the bit pattern.
std::strong_ordering strong_order_double(double a, double b) {
  if (a < b) return std::strong_ordering::less;
  if (a > b) return std::strong_ordering::greater;
  return std::bit_cast<std::uint64_t>(a) <=> std::bit_cast<std::uint64_t>(b);
}

}  // namespace

std::int64_t Value::as_integer() const {
  if (!is_integer()) throw Error("value is not an integer");
  return std::get<std::int64_t>(v_);
}

double Value::as_real() const {
  if (is_integer()) return static_cast<double>(std::get<std::int64_t>(v_));
  if (!is_real()) throw Error("value is not numeric");
  return std::get<double>(v_);
}

bool Value::as_boolean() const {
  if (!is_boolean()) throw Error("value is not a boolean");
  return std::get<bool>(v_);
}

const std::string& Value::as_token() const {
  if (!is_token()) throw Error("value is not a token");
  return std::get<std::string>(v_);
}

std::strong_ordering compare(const Value& a, const Value& b) {
  if (auto c = a.v_.index() <=> b.v_.index(); c != 0) return c;
  switch (a.v_.index()) {
    case 0:
      return std::get<std::int64_t>(a.v_) <=> std::get<std::int64_t>(b.v_);
    case 1:
      return strong_order_double(std::get<double>(a.v_), std::get<double>(b.v_));
    case 2:
      return std::get<bool>(a.v_) <=> std::get<bool>(b.v_);
    default:
      return std::get<std::string>(a.v_) <=> std::get<std::string>(b.v_);
  }
}

EnvInfo EnvInfo::make(std::vector<std::pair<std::string, Value>> bindings) {
  std::sort(bindings.begin(), bindings.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < bindings.size(); ++i) {
    if (bindings[i - 1].first == bindings[i].first)
      throw Error("duplicate info name: " + bindings[i].first);
  }
  EnvInfo info;
  info.bindings_ = std::move(bindings);
  return info;
}

const Value* EnvInfo::find(const std::string& name) const {
  auto it = std::lower_bound(bindings_.begin(), bindings_.end(), name,
                             [](const auto& p, const std::string& n) { return p.first < n; });
  if (it == bindings_.end() || it->first != name) return nullptr;
  return &it->second;
}

const Value& EnvInfo::at(const std::string& name) const {
  const Value* v = find(name);
  if (!v) throw UnknownInfoError("unknown info name: " + name);
  return *v;
}

EnvInfo EnvInfo::with(const std::string& name, Value v) const {
  if (!has(name)) throw UnknownInfoError("unknown info name: " + name);
  EnvInfo out = *this;
  for (auto& b : out.bindings_) {
    if (b.first == name) {
      b.second = std::move(v);
      break;
    }
  }
  return out;
}

EnvInfo EnvInfo::merged(const EnvInfo& other) const {
  std::vector<std::pair<std::string, Value>> all = bindings_;
  all.insert(all.end(), other.bindings_.begin(), other.bindings_.end());
  return make(std::move(all));  // make() rejects name clashes
}

EnvInfo EnvInfo::without(const std::vector<std::string>& names) const {
  EnvInfo out;
  for (const auto& b : bindings_) {
    if (std::find(names.begin(), names.end(), b.first) == names.end())
      out.bindings_.push_back(b);
  }
  return out;
}

std::strong_ordering compare(const EnvInfo& a, const EnvInfo& b) {
  const auto& x = a.bindings();
  const auto& y = b.bindings();
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (auto c = x[i].first <=> y[i].first; c != 0) return c;
    if (auto c = compare(x[i].second, y[i].second); c != 0) return c;
  }
  return x.size() <=> y.size();
}

std::strong_ordering compare(const Sequence& a, const Sequence& b) {
  return a.symbols <=> b.symbols;
}

bool operator==(const NonParallel& a, const NonParallel& b) {
  if (a.v_.index() != b.v_.index()) return false;
  if (a.is_seq()) return a.seq() == b.seq();
  return std::get<1>(a.v_) == std::get<1>(b.v_) || a.loop() == b.loop();
}

std::strong_ordering compare(const NonParallel& a, const NonParallel& b) {
  // Sequences order before loops.
  if (a.is_seq() != b.is_seq()) return a.is_seq() ? std::strong_ordering::less : std::strong_ordering::greater;
  if (a.is_seq()) return compare(a.seq(), b.seq());
  if (a.loop_ptr() == b.loop_ptr()) return std::strong_ordering::equal;
  return compare(a.loop(), b.loop());
}

std::strong_ordering compare(const Loop& a, const Loop& b) {
  if (auto c = compare(a.part, b.part); c != 0) return c;
  if (auto c = compare(a.info, b.info); c != 0) return c;
  return compare(a.content, b.content);
}

Term Term::make(std::vector<TermItem> items) {
  std::erase_if(items, [](const TermItem& it) {
    return it.count == 0 || (it.unit.is_seq() && it.unit.seq().empty());
  });
  std::sort(items.begin(), items.end(),
            [](const TermItem& a, const TermItem& b) { return compare(a.unit, b.unit) < 0; });
  Term t;
  for (auto& it : items) {
    if (!t.items_.empty() && t.items_.back().unit == it.unit) {
      if (t.items_.back().count > UINT64_MAX - it.count) throw Error("multiplicity overflow");
      t.items_.back().count += it.count;
    } else {
      t.items_.push_back(std::move(it));
    }
  }
  return t;
}

Term Term::from_canonical(std::vector<TermItem> items) {
#ifndef NDEBUG
  for (std::size_t i = 0; i < items.size(); ++i) {
    assert(items[i].count > 0);
    assert(!(items[i].unit.is_seq() && items[i].unit.seq().empty()));
    if (i) assert(compare(items[i - 1].unit, items[i].unit) < 0);
  }
#endif
  Term t;
  t.items_ = std::move(items);
  return t;
}

Term Term::single(NonParallel unit, std::uint64_t count) {
  return make({TermItem{std::move(unit), count}});
}

Term Term::symbol(const std::string& name) {
  return single(Sequence{{name}});
}

Term Term::seq(Sequence s) {
  return single(NonParallel(std::move(s)));
}

Term Term::loop(Term part, EnvInfo info, Term content, std::uint64_t count) {
  auto node = std::make_shared<const Loop>(Loop{std::move(part), std::move(info), std::move(content)});
  return single(NonParallel(std::move(node)), count);
}

Term Term::parallel(const Term& other) const {
  // Both sides are canonical: a linear merge keeps the order.
  std::vector<TermItem> out;
  out.reserve(items_.size() + other.items_.size());
  std::size_t i = 0, j = 0;
  while (i < items_.size() && j < other.items_.size()) {
    auto c = compare(items_[i].unit, other.items_[j].unit);
    if (c < 0) {
      out.push_back(items_[i++]);
    } else if (c > 0) {
      out.push_back(other.items_[j++]);
    } else {
      if (items_[i].count > UINT64_MAX - other.items_[j].count)
        throw Error("multiplicity overflow");
      out.push_back(TermItem{items_[i].unit, items_[i].count + other.items_[j].count});
      ++i;
      ++j;
    }
  }
  for (; i < items_.size(); ++i) out.push_back(items_[i]);
  for (; j < other.items_.size(); ++j) out.push_back(other.items_[j]);
  Term t;
  t.items_ = std::move(out);
  return t;
}

Term Term::subtract(const Term& other) const {
  std::vector<TermItem> out;
  std::size_t i = 0;
  for (const auto& o : other.items_) {
    for (;;) {
      if (i == items_.size()) throw Error("subtract: not a sub-multiset");
      auto c = compare(items_[i].unit, o.unit);
      if (c < 0) {
        out.push_back(items_[i++]);
      } else if (c == 0) {
        if (items_[i].count < o.count) throw Error("subtract: not a sub-multiset");
        if (items_[i].count > o.count)
          out.push_back(TermItem{items_[i].unit, items_[i].count - o.count});
        ++i;
        break;
      } else {
        throw Error("subtract: not a sub-multiset");
      }
    }
  }
  for (; i < items_.size(); ++i) out.push_back(items_[i]);
  Term t;
  t.items_ = std::move(out);  // still sorted and merged
  return t;
}

bool Term::contains(const Term& other) const {
  std::size_t i = 0;
  for (const auto& o : other.items_) {
    while (i < items_.size() && compare(items_[i].unit, o.unit) < 0) ++i;
    if (i == items_.size() || !(items_[i].unit == o.unit) || items_[i].count < o.count)
      return false;
    ++i;
  }
  return true;
}

std::uint64_t Term::total_count() const {
  std::uint64_t n = 0;
  for (const auto& it : items_) n += it.count;
  return n;
}

bool operator==(const Term& a, const Term& b) {
  return a.items_ == b.items_;
}

std::strong_ordering compare(const Term& a, const Term& b) {
  const auto& x = a.items();
  const auto& y = b.items();
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (auto c = compare(x[i].unit, y[i].unit); c != 0) return c;
    if (auto c = x[i].count <=> y[i].count; c != 0) return c;
  }
  return x.size() <=> y.size();
}

CompartmentAddress CompartmentAddress::child(std::size_t i) const {
  CompartmentAddress a = *this;
  a.path.push_back(i);
  return a;
}

CompartmentAddress CompartmentAddress::parent() const {
  if (path.empty()) throw InvalidAddressError("root address has no parent");
  CompartmentAddress a = *this;
  a.path.pop_back();
  return a;
}

std::string CompartmentAddress::str() const {
  std::string s = "/";
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += '/';
    s += std::to_string(path[i]);
  }
  return s;
}

Term canonicalize(const Term& t) {
  return Term::make(t.items());
}

bool congruent(const Term& t1, const Term& t2) {
  return canonicalize(t1) == canonicalize(t2);
}

std::uint64_t count_individuals(const Term& t, const LoopPredicate& filter) {
  std::uint64_t n = 0;
  for (const auto& it : t.items()) {
    if (it.unit.is_loop() && (!filter || filter(it.unit.loop()))) n += it.count;
  }
  return n;
}

LoopPredicate individuals_with(std::vector<std::string> content_symbols) {
  static const Term a_part = Term::symbol("a");
  return [syms = std::move(content_symbols)](const Loop& l) {
    if (!(l.part == a_part)) return false;
    if (syms.empty()) return true;
    for (const auto& it : l.content.items()) {
      if (it.unit.is_seq() && it.unit.seq().symbols.size() == 1 &&
          std::find(syms.begin(), syms.end(), it.unit.seq().symbols[0]) != syms.end())
        return true;
    }
    return false;
  };
}

namespace {

const Loop* walk(const Term& t, const CompartmentAddress& addr) {
  const Term* cur = &t;
  const Loop* node = nullptr;
  for (std::size_t idx : addr.path) {
    if (idx >= cur->items().size() || !cur->items()[idx].unit.is_loop())
      throw InvalidAddressError("invalid compartment address " + addr.str());
    node = &cur->items()[idx].unit.loop();
    cur = &node->content;
  }
  return node;
}

// Rebuilds the spine from root to the addressed loop, applying `edit` to the
// addressed loop node. Multiplicity groups are split: the edited copy is
// peeled off a group with count > 1.
Term rebuild(const Term& t, const CompartmentAddress& addr, std::size_t depth,
             const std::function<Loop(const Loop&)>& edit) {
  if (depth == addr.path.size()) throw InvalidAddressError("rebuild reached root");
  std::size_t idx = addr.path[depth];
  if (idx >= t.items().size() || !t.items()[idx].unit.is_loop())
    throw InvalidAddressError("invalid compartment address " + addr.str());
  const Loop& node = t.items()[idx].unit.loop();

  Loop changed = depth + 1 == addr.path.size()
                     ? edit(node)
                     : Loop{node.part, node.info, rebuild(node.content, addr, depth + 1, edit)};

  std::vector<TermItem> items = t.items();
  if (items[idx].count > 1) {
    items[idx].count -= 1;
  } else {
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  // Insert the edited loop at its sorted position, merging with an equal
  // group if one exists.
  NonParallel unit(std::make_shared<const Loop>(std::move(changed)));
  auto pos = std::lower_bound(items.begin(), items.end(), unit,
                              [](const TermItem& a, const NonParallel& u) {
                                return compare(a.unit, u) < 0;
                              });
  if (pos != items.end() && pos->unit == unit) {
    pos->count += 1;
  } else {
    items.insert(pos, TermItem{std::move(unit), 1});
  }
  return Term::from_canonical(std::move(items));
}

}  // namespace

ResolvedCompartment resolve(const Term& t, const CompartmentAddress& addr) {
  static const EnvInfo empty_info;
  const Loop* node = walk(t, addr);
  if (!node) return ResolvedCompartment{empty_info, t};
  return ResolvedCompartment{node->info, node->content};
}

Term update_info(const Term& t, const CompartmentAddress& addr, const std::string& name, Value v) {
  if (addr.is_root()) throw UnknownInfoError("root compartment carries no info");
  return rebuild(t, addr, 0, [&](const Loop& l) {
    return Loop{l.part, l.info.with(name, std::move(v)), l.content};
  });
}

Term replace_content(const Term& t, const CompartmentAddress& addr, Term content) {
  if (addr.is_root()) return content;
  return rebuild(t, addr, 0, [&](const Loop& l) {
    return Loop{l.part, l.info, std::move(content)};
  });
}

namespace {

void find_loops_rec(const Term& t, const LoopPredicate& pred, CompartmentAddress& here,
                    std::vector<CompartmentAddress>& out) {
  for (std::size_t i = 0; i < t.items().size(); ++i) {
    const auto& it = t.items()[i];
    if (!it.unit.is_loop()) continue;
    here.path.push_back(i);
    if (!pred || pred(it.unit.loop())) out.push_back(here);
    find_loops_rec(it.unit.loop().content, pred, here, out);
    here.path.pop_back();
  }
}

}  // namespace

std::vector<CompartmentAddress> find_loops(const Term& t, const LoopPredicate& pred) {
  std::vector<CompartmentAddress> out;
  CompartmentAddress here;
  find_loops_rec(t, pred, here, out);
  return out;
}

}  // namespace cls
