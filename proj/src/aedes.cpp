#include "cls/aedes.hpp"

#include <algorithm>
#include <cmath>

#include "cls/dsl.hpp"

namespace cls {
namespace aedes {

namespace {

const std::string kVolEmpty = "empty";
const std::string kVolHalf = "half_full";
const std::string kVolFull = "full";

const std::vector<std::string> kImmatureSymbols = {"Egg", "Larva", "Pupa"};

}  // namespace

Volume volume_from_token(const std::string& token) {
  if (token == kVolEmpty) return Volume::kEmpty;
  if (token == kVolHalf || token == "half-full") return Volume::kHalfFull;
  if (token == kVolFull) return Volume::kFull;
  throw ModelError("unknown volume level: " + token);
}

const std::string& volume_token(Volume v) {
  switch (v) {
    case Volume::kEmpty: return kVolEmpty;
    case Volume::kHalfFull: return kVolHalf;
    case Volume::kFull: return kVolFull;
  }
  throw ModelError("bad volume");
}

void StageTables::validate() const {
  for (int j = 1; j <= 6; ++j) {
    if (!(dd[j] > 0)) throw ModelError("degree-days must be positive (stage " + std::to_string(j) + ")");
  }
  for (int j = 1; j <= 14; ++j) {
    if (!(bdr[j] >= 0 && bdr[j] < 1))
      throw ModelError("baseline death rate must lie in [0,1) (stage " + std::to_string(j) + ")");
  }
  for (int i = 7; i <= 15; ++i) {
    if (!(dur[i] > 0)) throw ModelError("duration must be positive (d(" + std::to_string(i) + "))");
  }
  if (blood_threshold == 0) throw ModelError("blood threshold must be positive");
}

void ContainerSpec::validate() const {
  if (ind < 1) throw ModelError("container index must be >= 1");
  if (!(dtime > 0)) throw ModelError("desiccation time must be positive");
  if (!(phi1 < phi2 && phi2 < phi3)) throw ModelError("density thresholds must be ordered");
}

MosquitoPhase MosquitoPhase::larva(int instar) {
  MosquitoPhase p;
  p.kind = Kind::kLarva;
  p.instar = instar;
  return p;
}

MosquitoPhase MosquitoPhase::pupa() {
  MosquitoPhase p;
  p.kind = Kind::kPupa;
  return p;
}

MosquitoPhase MosquitoPhase::adult(int cycle, std::uint64_t blood) {
  MosquitoPhase p;
  p.kind = Kind::kAdult;
  p.cycle = cycle;
  p.blood = blood;
  return p;
}

Term MosquitoPhase::content() const {
  std::vector<TermItem> items;
  switch (kind) {
    case Kind::kEgg:
      items.push_back(TermItem{Sequence{{"Egg"}}, 1});
      break;
    case Kind::kLarva:
      if (instar < 1 || instar > 4) throw ModelError("instar out of range");
      items.push_back(TermItem{Sequence{{"Larva"}}, 1});
      items.push_back(TermItem{Sequence{{std::to_string(instar)}}, 1});
      break;
    case Kind::kPupa:
      items.push_back(TermItem{Sequence{{"Pupa"}}, 1});
      break;
    case Kind::kAdult:
      if (cycle < 1 || cycle > 8) throw ModelError("gonotrophic cycle out of range");
      items.push_back(TermItem{Sequence{{"Adult"}}, 1});
      items.push_back(TermItem{Sequence{{std::to_string(cycle)}}, 1});
      if (blood > 0) items.push_back(TermItem{Sequence{{"Blood"}}, blood});
      break;
  }
  return Term::make(std::move(items));
}

Term MosquitoPhase::individual(std::uint64_t count) const {
  return Term::loop(Term::symbol("a"), EnvInfo{}, content(), count);
}

std::optional<MosquitoPhase> MosquitoPhase::from_content(const Term& content) {
  MosquitoPhase p;
  bool has_kind = false;
  int number = -1;
  for (const auto& it : content.items()) {
    if (!it.unit.is_seq() || it.unit.seq().symbols.size() != 1) return std::nullopt;
    const std::string& s = it.unit.seq().symbols[0];
    if (s == "Egg" || s == "Larva" || s == "Pupa" || s == "Adult") {
      if (has_kind || it.count != 1) return std::nullopt;
      has_kind = true;
      p.kind = s == "Egg" ? Kind::kEgg
               : s == "Larva" ? Kind::kLarva
               : s == "Pupa" ? Kind::kPupa
                             : Kind::kAdult;
    } else if (s == "Blood") {
      p.blood = it.count;
    } else if (s.size() == 1 && s[0] >= '1' && s[0] <= '8') {
      if (number >= 0 || it.count != 1) return std::nullopt;
      number = s[0] - '0';
    } else {
      return std::nullopt;
    }
  }
  if (!has_kind) return std::nullopt;
  if (p.kind == Kind::kLarva) {
    if (number < 1 || number > 4) return std::nullopt;
    p.instar = number;
  } else if (p.kind == Kind::kAdult) {
    if (number < 1 || number > 8) return std::nullopt;
    p.cycle = number;
  } else if (number >= 0 || p.blood > 0) {
    return std::nullopt;
  }
  return p;
}

double death_rate(int stage, std::uint64_t n, Volume v, std::uint64_t phi1, std::uint64_t phi2,
                  std::uint64_t phi3, const StageTables& tables) {
  if (stage < 1 || stage > 14) throw ModelError("stage out of range in DR");
  switch (v) {
    case Volume::kEmpty:
      return 1.0;
    case Volume::kHalfFull:
      return death_rate(stage, 2 * n, Volume::kFull, phi1, phi2, phi3, tables);
    case Volume::kFull:
      if (n >= phi3) return 1.0;
      if (n >= phi2) return 1.2 * tables.bdr[stage];
      if (n >= phi1) return tables.bdr[stage];
      return 0.8 * tables.bdr[stage];
  }
  throw ModelError("bad volume in DR");
}

namespace {

std::uint64_t info_nat(const EnvInfo& info, const std::string& name) {
  std::int64_t v = info.at(name).as_integer();
  if (v < 0) throw ModelError("info field " + name + " must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

double immature_rate(int rule_index, const EnvInfo& info, std::uint64_t n,
                     const StageTables& tables) {
  bool transition = rule_index >= 1 && rule_index <= 6;
  if (!transition && !(rule_index >= 16 && rule_index <= 21))
    throw ModelError("immature rate index out of range: " + std::to_string(rule_index));
  int stage = transition ? rule_index : rule_index - 15;
  double v_temp = info.at("Temp").as_real();
  Volume vol = volume_from_token(info.at("Vol").as_token());
  double dr = death_rate(stage, n, vol, info_nat(info, "p1"), info_nat(info, "p2"),
                         info_nat(info, "p3"), tables);
  double factor = transition ? 1.0 - dr : dr;
  return v_temp * factor / tables.dd[stage];
}

double adult_rate(int rule_index, const StageTables& tables) {
  if (rule_index == 7) return 1.0 / tables.dur[7];
  if (rule_index >= 8 && rule_index <= 15) {
    // Oviposition at stage i-1 (stages 7..14 of the tables).
    return (1.0 - tables.bdr[rule_index - 1]) / tables.dur[rule_index];
  }
  if (rule_index >= 22 && rule_index <= 29) {
    // Death at stage i-15, sharing that stage's duration d(i-14).
    return tables.bdr[rule_index - 15] / tables.dur[rule_index - 14];
  }
  throw ModelError("adult rate index out of range: " + std::to_string(rule_index));
}

std::uint64_t eggs_laid(int cycle) {
  static constexpr std::uint64_t kTable[9] = {0, 40, 37, 35, 32, 30, 27, 25, 22};
  if (cycle < 1 || cycle > 8) throw ModelError("gonotrophic cycle out of range in eggs()");
  return kTable[cycle];
}

namespace {

// n for the density classes counts every immature occupant of the container,
// eggs through pupae, including the reacting individual.
std::uint64_t immature_occupants(const Term& container_content) {
  return count_individuals(container_content, individuals_with(kImmatureSymbols));
}

const Loop& portion_loop(const Term& portion) {
  for (const auto& it : portion.items()) {
    if (it.unit.is_loop()) return it.unit.loop();
  }
  throw ModelError("rate portion holds no compartment");
}

}  // namespace

RateRegistry make_registry(const StageTables& tables) {
  tables.validate();
  RateRegistry reg;
  reg.add_rate("immature", [tables](const std::vector<std::int64_t>& args) {
    if (args.size() != 1) throw ModelError("immature() takes one argument");
    int i = static_cast<int>(args[0]);
    immature_rate(i, EnvInfo::make({{"Temp", Value::real(1)},
                                    {"Vol", Value::token(kVolFull)},
                                    {"p1", Value::integer(1)},
                                    {"p2", Value::integer(2)},
                                    {"p3", Value::integer(3)}}),
                  0, tables);  // rejects bad indices up front
    RateFn f;
    f.needs_portion = true;
    f.fn = [tables, i](const Term& portion) {
      const Loop& c = portion_loop(portion);
      return immature_rate(i, c.info, immature_occupants(c.content), tables);
    };
    return f;
  });
  reg.add_rate("adult", [tables](const std::vector<std::int64_t>& args) {
    if (args.size() != 1) throw ModelError("adult() takes one argument");
    double value = adult_rate(static_cast<int>(args[0]), tables);
    RateFn f;
    f.needs_portion = false;
    f.fn = [value](const Term&) { return value; };
    return f;
  });
  reg.add_exponent("eggs", [](std::int64_t j) { return eggs_laid(static_cast<int>(j)); });
  return reg;
}

void apply_standard_strategies(std::vector<RewriteRule>& rules) {
  for (auto& r : rules) {
    Strategy s = Strategy::kUniform;
    if (r.id == "R7") {
      s = Strategy::kMinBlood;
    } else if (r.id.size() >= 2 && r.id[0] == 'R') {
      int n = std::atoi(r.id.c_str() + 1);
      if (n >= 8 && n <= 15) s = Strategy::kMaxBloodRandomContainer;
    }
    if (s != Strategy::kUniform) {
      r = RewriteRule::make(r.id, r.guard, r.left, r.right, r.rate, s);
    }
  }
}

std::vector<RewriteRule> build_rules(const StageTables& tables) {
  RateRegistry reg = make_registry(tables);
  std::vector<std::string> lines;

  auto stage_content = [](int i) -> std::string {
    static const char* kStage[7] = {"",        "Egg",       "Larva | 1", "Larva | 2",
                                    "Larva | 3", "Larva | 4", "Pupa"};
    return kStage[i];
  };

  // R1..R5: hatch and stage transitions inside a container.
  for (int i = 1; i <= 5; ++i) {
    lines.push_back("rule R" + std::to_string(i) + " {C}<@x>[$Y | {a}<>[" + stage_content(i) +
                    " | $X]] => {C}<@x>[$Y | {a}<>[" + stage_content(i + 1) +
                    " | $X]] @ immature(" + std::to_string(i) + ");");
  }
  // R6: adult emergence, the new adult leaves the container.
  lines.push_back(
      "rule R6 {C}<@x>[$Y | {a}<>[Pupa | $X]] => {C}<@x>[$Y] | {a}<>[Adult | 1 | $X] @ "
      "immature(6);");
  // R7: blood sucking, daylight only.
  lines.push_back(
      "rule R7 {En}<Daylight:true; @x>[$Y | {a}<>[Adult | $X | Blood^#q]] => "
      "{En}<Daylight:true; @x>[$Y | {a}<>[Adult | $X | Blood^(#q + 1)]] @ adult(7);");
  // R8..R14: oviposition, advancing one gonotrophic cycle.
  std::string phi = std::to_string(tables.blood_threshold);
  for (int i = 8; i <= 14; ++i) {
    int cycle = i - 7;
    lines.push_back("rule R" + std::to_string(i) + " [#q > " + phi + "] {En}<@x>[$Y | {a}<>[Adult | " +
                    std::to_string(cycle) + " | $X | Blood^#q] | {C}<@y>[$Z]] => {En}<@x>[$Y | "
                    "{a}<>[Adult | " +
                    std::to_string(cycle + 1) + " | $X] | {C}<@y>[$Z | {a}<>[Egg | $X]^eggs(" +
                    std::to_string(cycle) + ")]] @ adult(" + std::to_string(i) + ");");
  }
  // R15: final oviposition; the adult dies.
  lines.push_back("rule R15 [#q > " + phi +
                  "] {En}<@x>[$Y | {a}<>[Adult | 8 | $X | Blood^#q] | {C}<@y>[$Z]] => "
                  "{En}<@x>[$Y | {C}<@y>[$Z | {a}<>[Egg | $X]^eggs(8)]] @ adult(15);");
  // R16..R21: immature deaths.
  for (int i = 16; i <= 21; ++i) {
    lines.push_back("rule R" + std::to_string(i) + " {C}<@x>[{a}<>[" + stage_content(i - 15) +
                    " | $X] | $Y] => {C}<@x>[$Y] @ immature(" + std::to_string(i) + ");");
  }
  // R22..R29: adult deaths.
  for (int i = 22; i <= 29; ++i) {
    lines.push_back("rule R" + std::to_string(i) + " {En}<@x>[$Y | {a}<>[Adult | " +
                    std::to_string(i - 21) + " | $X]] => {En}<@x>[$Y] @ adult(" +
                    std::to_string(i) + ");");
  }

  std::vector<RewriteRule> rules;
  rules.reserve(lines.size());
  for (const auto& line : lines) rules.push_back(dsl::parse_rule(line, reg));
  apply_standard_strategies(rules);
  return rules;
}

namespace {

EnvInfo container_info(const ContainerSpec& spec, double temp_offset) {
  return EnvInfo::make({{"ind", Value::integer(spec.ind)},
                        {"Temp", Value::real(temp_offset)},
                        {"Vol", Value::token(volume_token(spec.initial_vol))},
                        {"p1", Value::integer(static_cast<std::int64_t>(spec.phi1))},
                        {"p2", Value::integer(static_cast<std::int64_t>(spec.phi2))},
                        {"p3", Value::integer(static_cast<std::int64_t>(spec.phi3))},
                        {"DTime", Value::real(spec.dtime)}});
}

const Term kEnPart = Term::symbol("En");
const Term kCPart = Term::symbol("C");

bool is_env(const Loop& l) { return l.part == kEnPart; }
bool is_container(const Loop& l) { return l.part == kCPart; }

}  // namespace

Term build_initial_term(const std::vector<ContainerSpec>& specs, const StageTables& tables,
                        const ClimateSchedule& climate, const InitialPopulation& pop) {
  tables.validate();
  double t0 = climate.temp_offset.empty() ? 0.0 : climate.temp_offset[0];

  std::vector<TermItem> population;
  if (pop.adults > 0) {
    Term adult = MosquitoPhase::adult(pop.adult_cycle).individual(pop.adults);
    population.push_back(adult.items()[0]);
  }
  for (const auto& spec : specs) {
    spec.validate();
    std::vector<TermItem> inhabitants;
    auto add = [&](const MosquitoPhase& phase, std::uint64_t n) {
      if (n == 0) return;
      Term t = phase.individual(n);
      inhabitants.push_back(t.items()[0]);
    };
    add(MosquitoPhase::egg(), pop.eggs);
    add(MosquitoPhase::larva(1), pop.instar1);
    add(MosquitoPhase::larva(2), pop.instar2);
    add(MosquitoPhase::larva(3), pop.instar3);
    add(MosquitoPhase::larva(4), pop.instar4);
    add(MosquitoPhase::pupa(), pop.pupae);
    Term content = Term::make(std::move(inhabitants));
    Term c = Term::loop(kCPart, container_info(spec, spec.initial_temp.value_or(t0)),
                        std::move(content));
    population.push_back(c.items()[0]);
  }

  EnvInfo env = EnvInfo::make({{"Temp", Value::real(t0)}, {"Daylight", Value::boolean(false)}});
  return Term::loop(kEnPart, std::move(env), Term::make(std::move(population)));
}

Ecosystem build_ecosystem(const std::vector<ContainerSpec>& specs, const StageTables& tables,
                          const ClimateSchedule& climate, const InitialPopulation& pop) {
  Ecosystem eco;
  eco.initial = build_initial_term(specs, tables, climate, pop);
  eco.rules = build_rules(tables);

  std::vector<ExternalEvent> events;
  for (std::size_t d = 0; d < climate.days(); ++d) {
    double day = static_cast<double>(d);
    events.push_back(ExternalEvent{"Temp", Value::real(climate.temp_offset[d]), day,
                                   standard_event_priority("Temp")});
    events.push_back(ExternalEvent{"Light", Value::token("sunrise"), day + climate.sunrise,
                                   standard_event_priority("Light")});
    events.push_back(ExternalEvent{"Light", Value::token("sunset"), day + climate.sunset,
                                   standard_event_priority("Light")});
  }
  for (const auto& r : climate.rains) {
    if (r.level != "light" && r.level != "heavy")
      throw ModelError("unknown rain level: " + r.level);
    events.push_back(
        ExternalEvent{"Rain", Value::token(r.level), r.time, standard_event_priority("Rain")});
  }
  for (const auto& spec : specs) {
    events.push_back(ExternalEvent{"Desic", Value::integer(spec.ind), spec.dtime,
                                   standard_event_priority("Desic")});
  }
  eco.events = EventList(std::move(events));
  validate(eco);
  return eco;
}

CompartmentAddress env_address(const Term& state) {
  auto found = find_loops(state, is_env);
  if (found.size() != 1) throw ModelError("state does not contain exactly one environment loop");
  return found[0];
}

CompartmentAddress container_address(const Term& state, std::int64_t ind) {
  auto found = find_loops(state, [ind](const Loop& l) {
    return is_container(l) && l.info.has("ind") && l.info.at("ind").as_integer() == ind;
  });
  if (found.empty()) throw ModelError("unknown container index: " + std::to_string(ind));
  return found[0];
}

std::tuple<Term, EventList, std::vector<CompartmentAddress>> handle_event(const ExternalEvent& e,
                                                                          const Term& term,
                                                                          const EventList& events) {
  Term state = term;
  EventList pending = events;
  std::vector<CompartmentAddress> changed;

  auto container_inds = [&state]() {
    std::vector<std::int64_t> inds;
    for (const auto& addr : find_loops(state, is_container)) {
      inds.push_back(resolve(state, addr).info.at("ind").as_integer());
    }
    std::sort(inds.begin(), inds.end());
    return inds;
  };

  if (e.name == "Light") {
    const std::string& v = e.value.as_token();
    bool daylight = v == "sunrise";
    if (!daylight && v != "sunset") throw ModelError("unknown light value: " + v);
    CompartmentAddress env = env_address(state);
    state = update_info(state, env, "Daylight", Value::boolean(daylight));
    changed.push_back(env_address(state));
  } else if (e.name == "Temp") {
    Value t = Value::real(e.value.as_real());
    state = update_info(state, env_address(state), "Temp", t);
    for (std::int64_t ind : container_inds()) {
      state = update_info(state, container_address(state, ind), "Temp", t);
    }
    changed.push_back(env_address(state));
    for (std::int64_t ind : container_inds()) changed.push_back(container_address(state, ind));
  } else if (e.name == "Desic") {
    std::int64_t ind = e.value.as_integer();
    CompartmentAddress addr = container_address(state, ind);
    auto info = resolve(state, addr).info;
    Volume vol = volume_from_token(info.at("Vol").as_token());
    if (vol != Volume::kEmpty) {
      Volume next = vol == Volume::kFull ? Volume::kHalfFull : Volume::kEmpty;
      state = update_info(state, addr, "Vol", Value::token(volume_token(next)));
      if (next != Volume::kEmpty) {
        // Schedule the next desiccation step; an empty container waits for
        // rain.
        pending.schedule(ExternalEvent{"Desic", Value::integer(ind),
                                       e.time + info.at("DTime").as_real(),
                                       standard_event_priority("Desic")});
      }
      changed.push_back(container_address(state, ind));
    }
  } else if (e.name == "Rain") {
    const std::string& level = e.value.as_token();
    if (level != "light" && level != "heavy") throw ModelError("unknown rain level: " + level);
    for (std::int64_t ind : container_inds()) {
      CompartmentAddress addr = container_address(state, ind);
      Volume vol = volume_from_token(resolve(state, addr).info.at("Vol").as_token());
      Volume next = level == "heavy" ? Volume::kFull
                    : vol == Volume::kEmpty ? Volume::kHalfFull
                                            : Volume::kFull;
      if (next != vol) {
        state = update_info(state, addr, "Vol", Value::token(volume_token(next)));
      }
    }
    pending.cancel([](const ExternalEvent& ev) { return ev.name == "Desic"; });
    for (std::int64_t ind : container_inds()) {
      double dtime = resolve(state, container_address(state, ind)).info.at("DTime").as_real();
      pending.schedule(ExternalEvent{"Desic", Value::integer(ind), e.time + dtime,
                                     standard_event_priority("Desic")});
      changed.push_back(container_address(state, ind));
    }
  } else {
    throw ModelError("unknown event name: " + e.name);
  }

  return {std::move(state), std::move(pending), std::move(changed)};
}

EventHandler make_handler() {
  return [](const ExternalEvent& e, const Term& term, const EventList& events) {
    return handle_event(e, term, events);
  };
}

PopulationCounts tally(const Term& state, const std::vector<std::int64_t>& container_inds) {
  PopulationCounts out;
  auto env = resolve(state, env_address(state));
  out.temp_offset = env.info.at("Temp").as_real();
  out.daylight = env.info.at("Daylight").as_boolean();

  auto count_mosquitoes = [&out](const Term& level) {
    for (const auto& it : level.items()) {
      if (!it.unit.is_loop()) continue;
      auto phase = MosquitoPhase::from_content(it.unit.loop().content);
      if (!phase) continue;
      switch (phase->kind) {
        case MosquitoPhase::Kind::kEgg:
          out.eggs += it.count;
          out.immature_total += it.count;
          break;
        case MosquitoPhase::Kind::kLarva:
          out.larva[phase->instar] += it.count;
          out.immature_total += it.count;
          break;
        case MosquitoPhase::Kind::kPupa:
          out.pupae += it.count;
          out.immature_total += it.count;
          break;
        case MosquitoPhase::Kind::kAdult:
          out.adults[phase->cycle] += it.count;
          out.adults_total += it.count;
          break;
      }
    }
  };

  count_mosquitoes(env.content);
  for (std::int64_t ind : container_inds) {
    auto c = resolve(state, container_address(state, ind));
    count_mosquitoes(c.content);
    out.volumes.push_back(static_cast<int>(volume_from_token(c.info.at("Vol").as_token())));
  }
  return out;
}

}  // namespace aedes
}  // namespace cls
