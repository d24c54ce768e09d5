#ifndef CLS_AEDES_HPP
#define CLS_AEDES_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cls/engine.hpp"
#include "cls/registry.hpp"
#include "cls/rule.hpp"
#include "cls/term.hpp"

// The Aedes albopictus population model: 29 rewrite rules over a
// temperature- and water-driven container ecosystem, the four external event
// kinds and their handler, and the match-selection strategies.

namespace cls {
namespace aedes {

enum class Volume { kEmpty, kHalfFull, kFull };

Volume volume_from_token(const std::string& token);
const std::string& volume_token(Volume v);

// Stage parameters. Indexing follows the life cycle: stages 1..6 are egg,
// instars 1-4 and pupa; stages 7..14 the eight gonotrophic cycles. `dur` is
// indexed by rule: dur[7] is the blood-meal interval, dur[8..15] the cycle
// durations. These values are model configuration, not biology shipped by
// the engine.
struct StageTables {
  std::array<double, 7> dd{};     // dd[1..6], degree-days per immature stage
  std::array<double, 15> bdr{};   // bdr[1..14], baseline death rate in [0,1)
  std::array<double, 16> dur{};   // dur[7..15], days
  std::uint64_t blood_threshold = 2;
  double mtd_celsius = 8.8;

  void validate() const;
};

struct ContainerSpec {
  std::int64_t ind = 1;
  double dtime = 1.0;
  std::uint64_t phi1 = 100, phi2 = 250, phi3 = 300;
  Volume initial_vol = Volume::kHalfFull;
  std::optional<double> initial_temp;  // offset above MTD; defaults to day 0

  void validate() const;
};

struct RainEvent {
  double time = 0.0;
  std::string level;  // "light" or "heavy"
};

struct ClimateSchedule {
  std::vector<double> temp_offset;  // one entry per day, clamped at 0
  std::vector<RainEvent> rains;
  double sunrise = 0.25;
  double sunset = 0.75;

  std::size_t days() const { return temp_offset.size(); }
};

struct InitialPopulation {
  std::uint64_t adults = 4;
  int adult_cycle = 1;
  std::uint64_t eggs = 6, instar1 = 2, instar2 = 1, instar3 = 1, instar4 = 0, pupae = 0;
};

// Development phase of one mosquito and its term encoding.
struct MosquitoPhase {
  enum class Kind { kEgg, kLarva, kPupa, kAdult };
  Kind kind = Kind::kEgg;
  int instar = 0;               // 1..4 for larvae
  int cycle = 0;                // 1..8 for adults
  std::uint64_t blood = 0;      // adults only

  static MosquitoPhase egg() { return {}; }
  static MosquitoPhase larva(int instar);
  static MosquitoPhase pupa();
  static MosquitoPhase adult(int cycle, std::uint64_t blood = 0);

  Term content() const;
  // The a-loop for this phase.
  Term individual(std::uint64_t count = 1) const;
  static std::optional<MosquitoPhase> from_content(const Term& content);

  friend bool operator==(const MosquitoPhase&, const MosquitoPhase&) = default;
};

// Death rate at immature stage j in a container with n immature occupants.
// Empty or overcrowded containers kill; crowded scales the baseline by 1.2,
// sparse by 0.8; half-full doubles n.
double death_rate(int stage, std::uint64_t n, Volume v, std::uint64_t phi1, std::uint64_t phi2,
                  std::uint64_t phi3, const StageTables& tables);

// Rate of rule i in [1,6] (stage transitions) or [16,21] (immature deaths),
// reading V_Temp, Vol and the thresholds from the container info.
double immature_rate(int rule_index, const EnvInfo& container_info, std::uint64_t n,
                     const StageTables& tables);

// Rate of rule 7 (blood sucking), [8,15] (oviposition) or [22,29] (adult
// deaths).
double adult_rate(int rule_index, const StageTables& tables);

// Eggs laid at gonotrophic cycle j (already halved for the female-only
// population).
std::uint64_t eggs_laid(int cycle);

// Registry with `immature(i)`, `adult(i)` and the `eggs(j)` exponent.
RateRegistry make_registry(const StageTables& tables);

// The 29 rules, strategies attached.
std::vector<RewriteRule> build_rules(const StageTables& tables);

// Attaches the standard strategies by rule id (R7 min-blood; R8..R15
// max-blood with random container).
void apply_standard_strategies(std::vector<RewriteRule>& rules);

Term build_initial_term(const std::vector<ContainerSpec>& specs, const StageTables& tables,
                        const ClimateSchedule& climate, const InitialPopulation& pop);

// Term, rules and the initial event list: daily Temp at midnight, Light at
// the configured fractions, prescheduled rains, one Desic per container at
// t0 + DTime.
Ecosystem build_ecosystem(const std::vector<ContainerSpec>& specs, const StageTables& tables,
                          const ClimateSchedule& climate, const InitialPopulation& pop);

// Event handler for Light / Temp / Desic / Rain per the model's semantics.
std::tuple<Term, EventList, std::vector<CompartmentAddress>> handle_event(
    const ExternalEvent& e, const Term& term, const EventList& events);

EventHandler make_handler();

// Address of the environment loop / of the container with the given index.
CompartmentAddress env_address(const Term& state);
CompartmentAddress container_address(const Term& state, std::int64_t ind);

struct PopulationCounts {
  std::uint64_t eggs = 0;
  std::array<std::uint64_t, 5> larva{};  // larva[1..4]
  std::uint64_t pupae = 0;
  std::array<std::uint64_t, 9> adults{};  // adults[1..8]
  std::uint64_t adults_total = 0;
  std::uint64_t immature_total = 0;
  std::vector<int> volumes;  // 0 empty, 1 half_full, 2 full; by container order
  double temp_offset = 0.0;
  bool daylight = false;
};

PopulationCounts tally(const Term& state, const std::vector<std::int64_t>& container_inds);

}  // namespace aedes
}  // namespace cls

#endif
