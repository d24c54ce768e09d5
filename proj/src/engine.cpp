#include "cls/engine.hpp"

#include <algorithm>
#include <cmath>

namespace cls {

int standard_event_priority(const std::string& name) {
  if (name == "Temp") return 0;
  if (name == "Light") return 1;
  if (name == "Rain") return 2;
  if (name == "Desic") return 3;
  return 4;
}

namespace {

bool event_before(const ExternalEvent& a, const ExternalEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  return a.priority < b.priority;
}

}  // namespace

EventList::EventList(std::vector<ExternalEvent> events) : events_(std::move(events)) {
  std::stable_sort(events_.begin(), events_.end(), event_before);
}

const ExternalEvent& EventList::front() const {
  if (empty()) throw Error("front of empty event list");
  return events_[pos_];
}

ExternalEvent EventList::pop_front() {
  if (empty()) throw Error("pop from empty event list");
  return events_[pos_++];
}

void EventList::schedule(ExternalEvent e) {
  auto it = std::upper_bound(events_.begin() + static_cast<std::ptrdiff_t>(pos_), events_.end(), e,
                             event_before);
  events_.insert(it, std::move(e));
}

void EventList::cancel(const std::function<bool(const ExternalEvent&)>& pred) {
  events_.erase(std::remove_if(events_.begin() + static_cast<std::ptrdiff_t>(pos_), events_.end(),
                               pred),
                events_.end());
}

std::vector<ExternalEvent> EventList::pending() const {
  return std::vector<ExternalEvent>(events_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                    events_.end());
}

void validate(const Ecosystem& eco) {
  std::vector<std::string> ids;
  for (const auto& r : eco.rules) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ModelError("duplicate rule id");
  for (const auto& e : eco.events.pending()) {
    if (e.time < 0) throw ModelError("event with negative time: " + e.name);
  }
}

SimState::SimState(const Ecosystem& eco, std::uint64_t seed)
    : term(canonicalize(eco.initial)),
      events(eco.events),
      rng(seed),
      table(PropensityTable::build(term, eco.rules)) {}

double sample_tau(double a0, double r1) {
  if (!(a0 > 0)) throw Error("sample_tau requires a0 > 0");
  return std::log(1.0 / r1) / a0;
}

double sample_tau(double a0, Rng& rng) {
  return sample_tau(a0, rng.unit_positive());
}

std::pair<std::size_t, std::size_t> select_rule_and_compartment(const PropensityTable& table,
                                                                Rng& rng) {
  double a0 = table.total();
  if (!(a0 > 0)) throw Error("selection requires a0 > 0");
  return table.pick(rng.unit_positive() * a0);
}

namespace {

std::vector<CompartmentAddress> ancestor_chain(const CompartmentAddress& addr) {
  std::vector<CompartmentAddress> out;
  CompartmentAddress a;
  out.push_back(a);
  for (std::size_t idx : addr.path) {
    a = a.child(idx);
    out.push_back(a);
  }
  return out;
}

}  // namespace

StepOutcome step(SimState& state, const std::vector<RewriteRule>& rules, double maxtime,
                 const EventHandler& handler) {
  double a0 = state.table.total();
  bool has_event = !state.events.empty();

  if (a0 <= 0 && !has_event) {
    StepOutcome out;
    out.kind = StepOutcome::Kind::kTerminated;
    out.reason = StepOutcome::Reason::kExtinction;
    return out;
  }

  double tau = a0 > 0 ? sample_tau(a0, state.rng) : kInfiniteTime;
  double t_next = state.clock + tau;
  double t_event = has_event ? state.events.front().time : kInfiniteTime;

  if (t_event < t_next) {
    if (t_event > maxtime) {
      state.clock = maxtime;
      StepOutcome out;
      out.kind = StepOutcome::Kind::kTerminated;
      out.reason = StepOutcome::Reason::kMaxTime;
      return out;
    }
    ExternalEvent e = state.events.pop_front();
    state.clock = e.time;
    auto [term, events, changed] = handler(e, state.term, state.events);
    state.term = std::move(term);
    state.events = std::move(events);
    state.version += 1;
    state.table = state.table.updated(state.term, changed, rules);
    state.table.stamp(state.version);
    StepOutcome out;
    out.kind = StepOutcome::Kind::kEventHandled;
    out.event = std::move(e);
    return out;
  }

  if (t_next > maxtime) {
    state.clock = maxtime;
    StepOutcome out;
    out.kind = StepOutcome::Kind::kTerminated;
    out.reason = StepOutcome::Reason::kMaxTime;
    return out;
  }

  state.clock = t_next;
  auto [mu, theta] = select_rule_and_compartment(state.table, state.rng);
  auto matches = state.table.matches_for(mu, theta, rules);
  if (matches.empty()) throw Error("selected cell has no matches");
  const Match& m = choose_match(rules[mu], matches, state.rng);
  if (m.version != state.version) throw StaleMatchError("match from a stale table");
  state.term = execute(rules[mu], m, state.term);
  state.version += 1;
  state.table = state.table.updated(state.term, ancestor_chain(m.locus), rules);
  state.table.stamp(state.version);

  StepOutcome out;
  out.kind = StepOutcome::Kind::kReactionFired;
  out.rule_id = rules[mu].id;
  out.locus = m.locus;
  return out;
}

RunResult run(const Ecosystem& eco, std::uint64_t seed, double maxtime, double sample_interval,
              const EventHandler& handler, const Sampler& sampler, const StepCallback& on_step) {
  if (maxtime < 0) throw Error("maxtime must be nonnegative");
  if (!(sample_interval > 0)) throw Error("sample interval must be positive");

  SimState state(eco, seed);
  RunResult res;
  std::uint64_t next_sample = 0;

  for (;;) {
    Term before = state.term;
    StepOutcome out = step(state, eco.rules, maxtime, handler);
    if (on_step) on_step(out, state);
    if (out.terminated()) {
      if (sampler) {
        for (; static_cast<double>(next_sample) * sample_interval <= maxtime; ++next_sample) {
          sampler(static_cast<double>(next_sample) * sample_interval, state.term);
        }
      }
      res.end = out.reason;
      res.end_time = state.clock;
      return res;
    }
    if (out.kind == StepOutcome::Kind::kReactionFired) {
      res.reactions += 1;
    } else {
      res.events_handled += 1;
    }
    if (sampler) {
      // The state holds its value up to (not including) the transition time.
      for (; static_cast<double>(next_sample) * sample_interval < state.clock; ++next_sample) {
        sampler(static_cast<double>(next_sample) * sample_interval, before);
      }
    }
  }
}

}  // namespace cls
