#include "cls/rule.hpp"

#include "cls/aedes.hpp"
#include "cls/dsl.hpp"
#include "cls/rng.hpp"
#include "doctest.h"
#include "generators.hpp"
#include "model_fixtures.hpp"

using namespace cls;
using cls::dsl::parse_pattern;
using cls::dsl::parse_term;

namespace {

const std::vector<RewriteRule>& model_rules() {
  static const std::vector<RewriteRule> rules = aedes::build_rules(cls_tests::test_tables());
  return rules;
}

const RewriteRule& rule_by_id(const std::string& id) {
  for (const auto& r : model_rules()) {
    if (r.id == id) return r;
  }
  throw std::runtime_error("no rule " + id);
}

CompartmentAddress container(const Term& t, std::int64_t ind) {
  return aedes::container_address(t, ind);
}

std::uint64_t total_mosquitoes(const Term& state) {
  std::uint64_t n = 0;
  auto all = individuals_with({});
  n += count_individuals(resolve(state, CompartmentAddress{{0}}).content, all);
  for (const auto& addr : find_loops(state, [](const Loop& l) { return l.part == Term::symbol("C"); })) {
    n += count_individuals(resolve(state, addr).content, all);
  }
  return n;
}

// One reaction chosen by first nonzero cell; returns the new state.
Term fire_any(const Term& state, const std::vector<RewriteRule>& rules, Rng& rng,
              std::string* fired = nullptr, PropensityTable* io_table = nullptr) {
  PropensityTable table =
      io_table ? io_table->updated(state, {}, rules) : PropensityTable::build(state, rules);
  if (table.total() <= 0) return state;
  auto [j, c] = table.pick(rng.unit_positive() * table.total());
  auto ms = table.matches_for(j, c, rules);
  REQUIRE(!ms.empty());
  const Match& m = choose_match(rules[j], ms, rng);
  if (fired) *fired = rules[j].id;
  Term next = execute(rules[j], m, state);
  if (io_table) *io_table = table.updated(next, {}, rules);
  return next;
}

}  // namespace

TEST_CASE("propensity worked examples") {
  SUBCASE("egg death in a dry container: 6 eggs at V_Temp 10, DD(1)=4") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{C}<ind:1; Temp:10; Vol:empty; p1:100; p2:250; p3:300; DTime:2.0>[{a}<>[Egg]^6]]");
    CHECK(propensity(rule_by_id("R16"), state, container(state, 1)) == doctest::Approx(15.0));
    // No hatching in a dry container.
    CHECK(propensity(rule_by_id("R1"), state, container(state, 1)) == 0.0);
  }

  SUBCASE("no matching individuals means zero propensity") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[0]]");
    for (const auto& r : model_rules()) {
      CHECK(propensity(r, state, container(state, 1)) == 0.0);
      CHECK(propensity(r, state, CompartmentAddress{{0}}) == 0.0);
    }
  }

  SUBCASE("blood sucking requires daylight") {
    Term day = parse_term("{En}<Temp:10; Daylight:true>[{a}<>[Adult | 1]^4]");
    Term night = parse_term("{En}<Temp:10; Daylight:false>[{a}<>[Adult | 1]^4]");
    const RewriteRule& r7 = rule_by_id("R7");
    CHECK(propensity(r7, day, CompartmentAddress{{0}}) == doctest::Approx(4 * 2.0));
    CHECK(propensity(r7, night, CompartmentAddress{{0}}) == 0.0);
  }
}

TEST_CASE("oviposition counts eligible adults once, not per container") {
  // Three eligible adults (q=3 > 2), two ineligible, two containers.
  Term state = parse_term(
      "{En}<Temp:10; Daylight:true>["
      "{a}<>[Adult | 1 | Blood^3]^3 | {a}<>[Adult | 1 | Blood]^2 | "
      "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[0] | "
      "{C}<ind:2; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[0]]");
  const RewriteRule& r8 = rule_by_id("R8");
  double f8 = aedes::adult_rate(8, cls_tests::test_tables());
  CHECK(propensity(r8, state, CompartmentAddress{{0}}) == doctest::Approx(3 * f8));

  // The raw match weights still count (adult, container) pairs.
  auto ms = compartment_matches(r8, state, enumerate_compartments(state)[1]);
  CHECK(weight(ms, CompartmentAddress{{0}}) == 6);

  // Guard monotonicity: every surviving match binds q above the threshold.
  for (const auto& m : ms) CHECK(m.binding.nats.at("q") > 2);

  // Without any container the rule cannot apply at all.
  Term no_containers = parse_term("{En}<Temp:10; Daylight:true>[{a}<>[Adult | 1 | Blood^3]^3]");
  CHECK(propensity(r8, no_containers, CompartmentAddress{{0}}) == 0.0);
}

TEST_CASE("rebuild totals: empty population and a hand-summed state") {
  SUBCASE("empty term") {
    PropensityTable t = PropensityTable::build(Term{}, model_rules());
    CHECK(t.total() == 0.0);
  }

  SUBCASE("eight adults at cycle 1, empty containers: only R22 is active") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:false>["
        "{a}<>[Adult | 1 | Blood^2]^5 | {a}<>[Adult | 1]^3 | "
        "{C}<ind:1; Temp:10; Vol:empty; p1:100; p2:250; p3:300; DTime:2.0>[0] | "
        "{C}<ind:2; Temp:10; Vol:full; p1:50; p2:125; p3:150; DTime:1.0>[0]]");
    PropensityTable t = PropensityTable::build(state, model_rules());
    // Hand sum: 8 adults x BDR(7)/d(8) = 8 x 0.05/4 = 0.1; nothing else fires
    // (night, no immatures).
    CHECK(t.total() == doctest::Approx(0.1));
  }

  SUBCASE("rebuild is deterministic") {
    Rng rng(41);
    for (int i = 0; i < 10; ++i) {
      Term state = cls_tests::random_state(rng, 60, 3);
      PropensityTable a = PropensityTable::build(state, model_rules());
      PropensityTable b = PropensityTable::build(state, model_rules());
      CHECK(a == b);
    }
  }
}

TEST_CASE("execute worked examples") {
  SUBCASE("R1 hatches one egg in place") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[{a}<>[Egg]^3]]");
    auto ms = compartment_matches(rule_by_id("R1"), state, enumerate_compartments(state)[2]);
    REQUIRE(ms.size() == 1);
    Term next = execute(rule_by_id("R1"), ms[0], state);
    Term expected = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>"
        "[{a}<>[Egg]^2 | {a}<>[Larva | 1]]]");
    CHECK(next == expected);
  }

  SUBCASE("R6 moves the fresh adult out of the container") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[{a}<>[Pupa]]]");
    auto comps = enumerate_compartments(state);
    auto ms = compartment_matches(rule_by_id("R6"), state, comps[2]);
    REQUIRE(ms.size() == 1);
    Term next = execute(rule_by_id("R6"), ms[0], state);
    Term expected = parse_term(
        "{En}<Temp:10; Daylight:true>[{a}<>[Adult | 1] | "
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[0]]");
    CHECK(next == expected);
  }

  SUBCASE("R15 removes the spent adult and lays eggs(8) = 22 eggs") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>[{a}<>[Adult | 8 | Blood^4] | "
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[0]]");
    auto ms = compartment_matches(rule_by_id("R15"), state, enumerate_compartments(state)[1]);
    REQUIRE(ms.size() == 1);
    Term next = execute(rule_by_id("R15"), ms[0], state);
    Term expected = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[{a}<>[Egg]^22]]");
    CHECK(next == expected);
  }

  SUBCASE("stale matches are rejected") {
    Term state = parse_term("{En}<Temp:10; Daylight:true>[{a}<>[Adult | 1]]");
    auto ms = compartment_matches(rule_by_id("R22"), state, enumerate_compartments(state)[1]);
    REQUIRE(ms.size() == 1);
    Term next = execute(rule_by_id("R22"), ms[0], state);
    CHECK_THROWS_AS(execute(rule_by_id("R22"), ms[0], next), StaleMatchError);
  }
}

TEST_CASE("conservation by rule class") {
  Rng rng(43);
  int applied = 0;
  for (int i = 0; i < 120; ++i) {
    Term state = cls_tests::random_state(rng, 35, 3);
    PropensityTable table = PropensityTable::build(state, model_rules());
    if (table.total() <= 0) continue;
    auto [j, c] = table.pick(rng.unit_positive() * table.total());
    auto ms = table.matches_for(j, c, model_rules());
    const Match& m = choose_match(model_rules()[j], ms, rng);
    const RewriteRule& rule = model_rules()[j];
    Term next = execute(rule, m, state);

    std::uint64_t before = total_mosquitoes(state);
    std::uint64_t after = total_mosquitoes(next);
    int n = std::atoi(rule.id.c_str() + 1);
    if (n >= 1 && n <= 7) {
      CHECK(after == before);
    } else if (n >= 8 && n <= 14) {
      CHECK(after == before + aedes::eggs_laid(n - 7));
    } else if (n == 15) {
      CHECK(after == before + aedes::eggs_laid(8) - 1);
    } else {
      CHECK(after == before - 1);
    }
    ++applied;
  }
  CHECK(applied > 40);
}

TEST_CASE("incremental update equals rebuild") {
  Rng rng(47);

  SUBCASE("after single firings on random states") {
    int steps = 0;
    for (int i = 0; i < 40; ++i) {
      Term state = cls_tests::random_state(rng, 200, 5);
      PropensityTable table = PropensityTable::build(state, model_rules());
      for (int s = 0; s < 8 && table.total() > 0; ++s) {
        auto [j, c] = table.pick(rng.unit_positive() * table.total());
        auto ms = table.matches_for(j, c, model_rules());
        const Match& m = choose_match(model_rules()[j], ms, rng);
        state = execute(model_rules()[j], m, state);
        table = table.updated(state, {}, model_rules());
        CHECK(table == PropensityTable::build(state, model_rules()));
        ++steps;
      }
    }
    CHECK(steps > 100);
  }

  SUBCASE("after a temperature change") {
    Term state = cls_tests::random_state(rng, 80, 4);
    PropensityTable table = PropensityTable::build(state, model_rules());
    ExternalEvent temp{"Temp", Value::real(7.5), 1.0, 0};
    auto [next, events, changed] = aedes::handle_event(temp, state, EventList{});
    PropensityTable inc = table.updated(next, changed, model_rules());
    CHECK(inc == PropensityTable::build(next, model_rules()));
  }

  SUBCASE("empty change set leaves the table identical") {
    Term state = cls_tests::random_state(rng, 60, 3);
    PropensityTable table = PropensityTable::build(state, model_rules());
    CHECK(table.updated(state, {}, model_rules()) == table);
  }
}

TEST_CASE("strategy selection") {
  Rng rng(53);

  SUBCASE("blood sucking picks a minimal-blood adult") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{a}<>[Adult | 1] | {a}<>[Adult | 1 | Blood] | {a}<>[Adult | 2 | Blood^2]]");
    auto ms = compartment_matches(rule_by_id("R7"), state, enumerate_compartments(state)[1]);
    REQUIRE(ms.size() == 3);
    for (int i = 0; i < 20; ++i) {
      const Match& m = choose_match(rule_by_id("R7"), ms, rng);
      CHECK(m.binding.nats.at("q") == 0);
    }
  }

  SUBCASE("oviposition picks the largest blood count") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>["
        "{a}<>[Adult | 1 | Blood^3] | {a}<>[Adult | 1 | Blood^5] | "
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[0]]");
    auto ms = compartment_matches(rule_by_id("R8"), state, enumerate_compartments(state)[1]);
    REQUIRE(ms.size() == 2);
    for (int i = 0; i < 20; ++i) {
      const Match& m = choose_match(rule_by_id("R8"), ms, rng);
      CHECK(m.binding.nats.at("q") == 5);
    }
  }

  SUBCASE("the destination container is sampled roughly uniformly") {
    Term state = parse_term(
        "{En}<Temp:10; Daylight:true>[{a}<>[Adult | 1 | Blood^4] | "
        "{C}<ind:1; Temp:10; Vol:full; p1:100; p2:250; p3:300; DTime:2.0>[0] | "
        "{C}<ind:2; Temp:10; Vol:empty; p1:50; p2:125; p3:150; DTime:1.0>[0]]");
    auto ms = compartment_matches(rule_by_id("R8"), state, enumerate_compartments(state)[1]);
    REQUIRE(ms.size() == 2);
    int into_first = 0;
    const int kDraws = 4000;
    for (int i = 0; i < kDraws; ++i) {
      const Match& m = choose_match(rule_by_id("R8"), ms, rng);
      if (m.binding.infos.at("y").at("ind").as_integer() == 1) ++into_first;
    }
    CHECK(into_first > kDraws / 2 - 200);
    CHECK(into_first < kDraws / 2 + 200);
  }

  SUBCASE("single candidate is returned as-is") {
    Term state = parse_term("{En}<Temp:10; Daylight:true>[{a}<>[Adult | 3]]");
    auto ms = compartment_matches(rule_by_id("R24"), state, enumerate_compartments(state)[1]);
    REQUIRE(ms.size() == 1);
    CHECK(&choose_match(rule_by_id("R24"), ms, rng) == &ms[0]);
  }
}

TEST_CASE("propensities are never negative and zero iff nothing applies") {
  Rng rng(59);
  for (int i = 0; i < 30; ++i) {
    Term state = cls_tests::random_state(rng, 50, 3);
    PropensityTable table = PropensityTable::build(state, model_rules());
    double sum = 0;
    bool any_match = false;
    for (std::size_t c = 0; c < table.compartments().size(); ++c) {
      for (std::size_t j = 0; j < model_rules().size(); ++j) {
        double a = table.cell(j, c);
        CHECK(a >= 0.0);
        sum += a;
        if (!table.matches_for(j, c, model_rules()).empty() &&
            propensity(model_rules()[j], state, table.compartments()[c]) > 0)
          any_match = true;
      }
    }
    CHECK(sum == doctest::Approx(table.total()));
    if (!any_match) CHECK(table.total() == 0.0);
  }
}
