#include "cls/pattern.hpp"

#include <map>

#include "bruteforce.hpp"
#include "cls/aedes.hpp"
#include "cls/dsl.hpp"
#include "cls/rng.hpp"
#include "doctest.h"
#include "generators.hpp"
#include "model_fixtures.hpp"

using namespace cls;
using cls::dsl::parse_pattern;
using cls::dsl::parse_term;
using cls::dsl::serialize;

namespace {

std::map<CompartmentAddress, std::uint64_t> engine_weights(const Pattern& p, const Term& t) {
  std::map<CompartmentAddress, std::uint64_t> out;
  for (const auto& m : match_all(p, t)) out[m.locus] += m.weight;
  return out;
}

}  // namespace

TEST_CASE("one egg among six: one match of weight six") {
  Pattern p = parse_pattern("{C}<@x>[$Y | {a}<>[Egg | $X]]");
  Term t = parse_term(
      "{C}<ind:1; Temp:10; Vol:full; p1:50; p2:125; p3:150; DTime:1.0>"
      "[{a}<>[Egg]^6 | {a}<>[Larva | 2]]");
  auto ms = match_all(p, t);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].weight == 6);
  CHECK(ms[0].binding.terms.at("X").empty());
  CHECK(ms[0].binding.terms.at("Y") == parse_term("{a}<>[Egg]^5 | {a}<>[Larva | 2]"));
  CHECK(ms[0].binding.infos.at("x").at("ind").as_integer() == 1);
  CHECK(ms[0].locus == CompartmentAddress{{0}});
  CHECK(ms[0].site == CompartmentAddress{});
}

TEST_CASE("nat-variable exponent binds the blood count") {
  Pattern p = parse_pattern("{a}<>[Adult | $X | Blood^#q]");
  Term t = parse_term("{a}<>[Adult | 1 | Blood^2]");
  auto ms = match_all(p, t);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].binding.nats.at("q") == 2);
  CHECK(ms[0].binding.terms.at("X") == parse_term("1"));

  // Unfed adults still match, with q = 0.
  auto none = match_all(p, parse_term("{a}<>[Adult | 3]"));
  REQUIRE(none.size() == 1);
  CHECK(none[0].binding.nats.at("q") == 0);
}

TEST_CASE("maximal binding leaves nothing for the rest variable") {
  Pattern p = parse_pattern("Adult | Blood^#q | $X");
  Term t = parse_term("Adult | Blood^5 | Food");
  auto ms = match_level(p, t, CompartmentAddress{}, /*exact=*/true);
  REQUIRE(ms.size() == 1);  // no partition q < 5 exists
  CHECK(ms[0].binding.nats.at("q") == 5);
  CHECK(ms[0].binding.terms.at("X") == parse_term("Food"));
}

TEST_CASE("non-empty pattern never matches the empty term") {
  Pattern p = parse_pattern("{a}<>[Egg | $X]");
  CHECK(match_all(p, Term{}).empty());
}

TEST_CASE("substitution examples") {
  auto rules = aedes::build_rules(cls_tests::test_tables());

  SUBCASE("R1 right side rebuilds the container with a hatched larva") {
    const RewriteRule& r1 = rules[0];
    Instantiation sigma;
    sigma.terms["X"] = Term{};
    sigma.terms["Y"] = Term{};
    sigma.infos["x"] = EnvInfo::make({{"ind", Value::integer(1)}});
    Term out = substitute(r1.right, sigma);
    CHECK(out == parse_term("{C}<ind:1>[{a}<>[Larva | 1]]"));
  }

  SUBCASE("identity substitution") {
    Pattern p = parse_pattern("$X");
    Instantiation sigma;
    sigma.terms["X"] = parse_term("a | b^2");
    CHECK(substitute(p, sigma) == parse_term("a | b^2"));
  }

  SUBCASE("R8 lays eggs(1) = 40 eggs in the chosen container") {
    const RewriteRule& r8 = rules[7];
    Instantiation sigma;
    sigma.terms["X"] = Term{};
    sigma.terms["Y"] = Term{};
    sigma.terms["Z"] = Term{};
    sigma.infos["x"] = EnvInfo::make({{"Daylight", Value::boolean(true)}});
    sigma.infos["y"] = EnvInfo::make({{"ind", Value::integer(3)}});
    sigma.nats["q"] = 3;
    Term out = substitute(r8.right, sigma);
    Term container = parse_term("{C}<ind:3>[{a}<>[Egg]^40]");
    CHECK(resolve(out, CompartmentAddress{{0}}).content.contains(container));
  }

  SUBCASE("unbound variable is an error") {
    Pattern p = parse_pattern("$X | a");
    CHECK_THROWS_AS(substitute(p, Instantiation{}), UnboundVariableError);
  }
}

TEST_CASE("exponent increment on the right side") {
  Pattern p = parse_pattern("Blood^(#q + 1)");
  Instantiation sigma;
  sigma.nats["q"] = 0;
  CHECK(substitute(p, sigma) == parse_term("Blood"));
  sigma.nats["q"] = 2;
  CHECK(substitute(p, sigma) == parse_term("Blood^3"));
}

TEST_CASE("weight per compartment matches the worked examples") {
  auto rules = aedes::build_rules(cls_tests::test_tables());
  const Pattern& hatch = rules[0].left;  // R1

  Term state = parse_term(
      "{En}<Temp:10; Daylight:true>["
      "{C}<ind:1; Temp:10; Vol:full; p1:50; p2:125; p3:150; DTime:1.0>[{a}<>[Egg]^6] | "
      "{C}<ind:2; Temp:10; Vol:full; p1:50; p2:125; p3:150; DTime:2.0>[0]]");
  auto ms = match_all(hatch, state);
  auto c1 = find_loops(state, [](const Loop& l) {
    return l.info.has("ind") && l.info.at("ind").as_integer() == 1;
  })[0];
  auto c2 = find_loops(state, [](const Loop& l) {
    return l.info.has("ind") && l.info.at("ind").as_integer() == 2;
  })[0];
  CHECK(weight(ms, c1) == 6);
  CHECK(weight(ms, c2) == 0);

  // Five fed adults at cycle 1: the blood-suck pattern counts all five.
  Term pop = parse_term(
      "{En}<Temp:10; Daylight:true>[{a}<>[Adult | 1 | Blood^2]^5 | {a}<>[Adult | 1]^3]");
  const Pattern& suck = rules[6].left;  // R7
  auto suck_ms = match_all(suck, pop);
  CHECK(weight(suck_ms, CompartmentAddress{{0}}) == 8);  // fed and unfed both match
  std::uint64_t fed = 0;
  for (const auto& m : suck_ms) {
    if (m.binding.nats.at("q") == 2) fed += m.weight;
  }
  CHECK(fed == 5);
}

TEST_CASE("round trip: left pattern substituted back reproduces the matched portion") {
  auto rules = aedes::build_rules(cls_tests::test_tables());
  Rng rng(23);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    Term state = cls_tests::random_state(rng, 30, 3);
    for (const auto& rule : rules) {
      for (const auto& m : match_all(rule.left, state)) {
        Term portion = substitute(rule.left, m.binding);
        if (m.has_rest) {
          CHECK(portion == resolve(state, m.site).content);
        } else {
          CHECK(portion == m.consumed);
        }
        ++checked;
      }
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("weights equal brute force on the expanded term") {
  auto rules = aedes::build_rules(cls_tests::test_tables());
  Rng rng(29);
  int nonzero = 0;
  for (int i = 0; i < 40; ++i) {
    Term state = cls_tests::random_state(rng, 30, 3);
    for (const auto& rule : rules) {
      auto expected = cls_tests::brute::weights_by_locus(rule.left, state);
      auto actual = engine_weights(rule.left, state);
      CHECK(actual == expected);
      if (!expected.empty()) ++nonzero;
    }
  }
  CHECK(nonzero > 100);

  // A few generic shapes exercised the same way.
  for (const char* text : {"a | $X", "{a}<>[Egg]^2", "{a}<>[Egg | $X] | b", "{a}<>[$X]",
                           "Blood^#q | $X", "{C}<@x>[$Y]"}) {
    Pattern p = parse_pattern(text);
    for (int i = 0; i < 20; ++i) {
      Term state = cls_tests::random_state(rng, 25, 2);
      CHECK(engine_weights(p, state) == cls_tests::brute::weights_by_locus(p, state));
    }
  }
}

TEST_CASE("matching is invariant under permutation of the subject") {
  auto rules = aedes::build_rules(cls_tests::test_tables());
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    Term state = cls_tests::random_state(rng, 40, 3);
    std::vector<TermItem> shuffled = state.items();
    for (std::size_t k = shuffled.size(); k > 1; --k) std::swap(shuffled[k - 1], shuffled[rng.below(k)]);
    Term again = Term::make(shuffled);
    for (const auto& rule : rules) {
      CHECK(engine_weights(rule.left, state) == engine_weights(rule.left, again));
    }
  }
}

TEST_CASE("left pattern validation rejects unsupported shapes") {
  CHECK_THROWS_AS(RewriteRule::make("bad", Guard::always(), parse_pattern("{a}<>[$X]^2"),
                                    parse_pattern("$X"), RateFn::k(1)),
                  ModelError);
  CHECK_THROWS_AS(RewriteRule::make("dup", Guard::always(), parse_pattern("a | a"),
                                    parse_pattern("a"), RateFn::k(1)),
                  ModelError);
  CHECK_THROWS_AS(RewriteRule::make("rhsvar", Guard::always(), parse_pattern("a"),
                                    parse_pattern("$Z"), RateFn::k(1)),
                  ModelError);
  CHECK_THROWS_AS(RewriteRule::make("sorts", Guard::always(), parse_pattern("{C}<@x>[$x]"),
                                    parse_pattern("0"), RateFn::k(1)),
                  ModelError);
}
