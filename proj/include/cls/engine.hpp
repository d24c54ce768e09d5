#ifndef CLS_ENGINE_HPP
#define CLS_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "cls/rng.hpp"
#include "cls/rule.hpp"
#include "cls/term.hpp"

// The simulation algorithms: the Direct Method, its multi-compartment
// selection, and the external-event extension with a sorted event list.

namespace cls {

// A scheduled external event (name, value, time). Time is in days; the
// integer part is the day, the fraction the time of day. Priority breaks
// ties at equal times (lower fires first), insertion order after that.
struct ExternalEvent {
  std::string name;
  Value value;
  double time = 0.0;
  int priority = 0;

  friend bool operator==(const ExternalEvent&, const ExternalEvent&) = default;
};

// Standard tie priorities for the model's event kinds: Temp before Light
// before Rain before Desic; unknown names last.
int standard_event_priority(const std::string& name);

class EventList {
 public:
  EventList() = default;
  explicit EventList(std::vector<ExternalEvent> events);

  bool empty() const { return pos_ == events_.size(); }
  std::size_t size() const { return events_.size() - pos_; }
  const ExternalEvent& front() const;
  ExternalEvent pop_front();

  // Inserts keeping (time, priority, insertion order).
  void schedule(ExternalEvent e);
  // Removes all pending events satisfying the predicate.
  void cancel(const std::function<bool(const ExternalEvent&)>& pred);

  std::vector<ExternalEvent> pending() const;

  friend bool operator==(const EventList& a, const EventList& b) {
    return a.pending() == b.pending();
  }

 private:
  std::vector<ExternalEvent> events_;  // sorted; [pos_, end) pending
  std::size_t pos_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<std::uint64_t> seqs_;
};

struct Ecosystem {
  Term initial;
  std::vector<RewriteRule> rules;
  EventList events;
};

void validate(const Ecosystem& eco);

// Handles one external event: (event, term, pending events) -> (new term,
// new events, changed compartments).
using EventHandler =
    std::function<std::tuple<Term, EventList, std::vector<CompartmentAddress>>(
        const ExternalEvent&, const Term&, const EventList&)>;

struct StepOutcome {
  enum class Kind { kReactionFired, kEventHandled, kTerminated };
  enum class Reason { kMaxTime, kExtinction };

  Kind kind = Kind::kTerminated;
  Reason reason = Reason::kMaxTime;
  std::string rule_id;        // kReactionFired
  CompartmentAddress locus;   // kReactionFired
  ExternalEvent event;        // kEventHandled

  bool terminated() const { return kind == Kind::kTerminated; }
};

struct SimState {
  Term term;
  double clock = 0.0;
  EventList events;
  Rng rng;
  PropensityTable table;
  std::uint64_t version = 0;

  SimState(const Ecosystem& eco, std::uint64_t seed);
};

// tau = (1/a0) ln(1/r1); r1 in (0,1]. Throws on a0 <= 0.
double sample_tau(double a0, double r1);
double sample_tau(double a0, Rng& rng);

// (mu, theta) with probability a_j^i / a0, via the double cumulative sum
// over rules (outer) and compartments (inner). Throws on a0 <= 0.
std::pair<std::size_t, std::size_t> select_rule_and_compartment(const PropensityTable& table,
                                                                Rng& rng);

// One iteration: the earlier of the next reaction and the first pending
// event, terminating at maxtime or on extinction (a0 = 0, no events). At a
// tie the reaction fires. An event beyond maxtime terminates the run.
StepOutcome step(SimState& state, const std::vector<RewriteRule>& rules, double maxtime,
                 const EventHandler& handler);

using Sampler = std::function<void(double time, const Term& term)>;
using StepCallback = std::function<void(const StepOutcome&, const SimState&)>;

struct RunResult {
  StepOutcome::Reason end = StepOutcome::Reason::kMaxTime;
  double end_time = 0.0;
  std::uint64_t reactions = 0;
  std::uint64_t events_handled = 0;
};

// Runs until termination, invoking the sampler at every multiple of
// sample_interval with the state as of that instant (piecewise-constant,
// right-continuous).
RunResult run(const Ecosystem& eco, std::uint64_t seed, double maxtime, double sample_interval,
              const EventHandler& handler, const Sampler& sampler,
              const StepCallback& on_step = {});

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

}  // namespace cls

#endif
