#include "cls/dsl.hpp"

#include <string>

#include "cls/aedes.hpp"
#include "cls/rng.hpp"
#include "doctest.h"
#include "generators.hpp"
#include "model_fixtures.hpp"

using namespace cls;
using namespace cls::dsl;

namespace {

bool rules_equal(const RewriteRule& a, const RewriteRule& b) {
  return a.id == b.id && a.guard == b.guard && a.left == b.left && a.right == b.right &&
         a.rate.name == b.rate.name && a.rate.args == b.rate.args &&
         a.rate.constant == b.rate.constant;
}

}  // namespace

TEST_CASE("parsing the paper's terms") {
  Term adults = parse_term("{a}<>[Adult | 1 | Blood^2]^3");
  REQUIRE(adults.items().size() == 1);
  CHECK(adults.items()[0].count == 3);
  const Loop& l = adults.items()[0].unit.loop();
  CHECK(l.part == Term::symbol("a"));
  CHECK(l.info.empty());
  CHECK(l.content == parse_term("Adult | 1 | Blood^2"));

  CHECK(parse_term("0").empty());
  CHECK(parse_term("  0  -- nothing here").empty());

  Term c2 = parse_term("{C}<ind:2; Temp:10; Vol:full; p1:50; p2:125; p3:150; DTime:1.0>[0]");
  const Loop& cl = c2.items()[0].unit.loop();
  CHECK(cl.info.at("ind").as_integer() == 2);
  CHECK(cl.info.at("DTime").as_real() == 1.0);
  CHECK(cl.content.empty());

  CHECK(parse_term("a.b.c") == Term::seq(Sequence{{"a", "b", "c"}}));
  CHECK(parse_term("eps").empty());
}

TEST_CASE("parse errors carry spans inside the input") {
  auto check_error = [](const std::string& text) {
    try {
      parse_term(text);
      FAIL("expected a parse error for: " << text);
    } catch (const ParseError& e) {
      CHECK(e.span().begin <= text.size());
      CHECK(e.span().end <= text.size() + 1);
      CHECK(e.span().line >= 1);
    }
  };
  check_error("a |");
  check_error("{a}<[0]");
  check_error("a^");
  check_error("a^0");
  check_error("{a}<x:1; x:2>[0]");
  check_error("a | 0");
  check_error("0 | a");
  check_error("((((");
  check_error("$X");      // ground terms reject variables
  check_error("a^#q");
  check_error("{a}<@i>[0]");
}

TEST_CASE("parse errors are deterministic") {
  auto message = [](const std::string& text) {
    try {
      parse_term(text);
      return std::string{};
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
  };
  CHECK(message("a | | b") == message("a | | b"));
  CHECK(!message("a | | b").empty());
}

TEST_CASE("rule parsing") {
  RateRegistry reg = aedes::make_registry(cls_tests::test_tables());

  SUBCASE("the R7 form round-trips") {
    RewriteRule r7 = parse_rule(
        "rule R7 {En}<Daylight:true; @x>[$Y | {a}<>[Adult | $X | Blood^#q]] => "
        "{En}<Daylight:true; @x>[$Y | {a}<>[Adult | $X | Blood^(#q + 1)]] @ adult(7);",
        reg);
    CHECK(r7.id == "R7");
    CHECK(r7.rate.name == "adult");
    RewriteRule again = parse_rule(serialize(r7), reg);
    CHECK(rules_equal(r7, again));
  }

  SUBCASE("constant-rate triple form") {
    RewriteRule k = parse_rule("rule K a => b @ 2.5;", reg);
    CHECK(k.rate.name.empty());
    CHECK(k.rate.constant == 2.5);
    CHECK(k.guard.kind == Guard::Kind::kAlways);
    CHECK(rules_equal(k, parse_rule(serialize(k), reg)));
  }

  SUBCASE("right-hand variables must come from the left") {
    CHECK_THROWS_AS(parse_rule("rule B a => $Z @ 1.0;", reg), ParseError);
  }

  SUBCASE("unknown rate names are rejected") {
    CHECK_THROWS_AS(parse_rule("rule B a => b @ funky(3);", reg), ParseError);
  }

  SUBCASE("guards parse and serialize") {
    RewriteRule g = parse_rule("rule G [#q > 2] a | Blood^#q => a @ 1.0;", reg);
    CHECK(g.guard == Guard::nat_greater("q", 2));
    CHECK(rules_equal(g, parse_rule(serialize(g), reg)));
  }
}

TEST_CASE("event list parsing") {
  EventList events = parse_events(
      "(Light, sunrise, 1.33)\n"
      "(Temp, 10, 3.0)\n"
      "-- a comment line\n"
      "(Desic, 2, 1.0)\n");
  auto pending = events.pending();
  REQUIRE(pending.size() == 3);
  // Sorted on load.
  CHECK(pending[0].name == "Desic");
  CHECK(pending[0].time == 1.0);
  CHECK(pending[1].name == "Light");
  CHECK(pending[1].time == 1.33);
  CHECK(pending[2].name == "Temp");
  CHECK(pending[2].value.as_integer() == 10);

  CHECK_THROWS_AS(parse_events("(Temp, 10, -1.0)"), ParseError);
  CHECK_THROWS_AS(parse_events("(Temp, 10)"), ParseError);

  CHECK(serialize(events) == "(Desic, 2, 1.0)\n(Light, sunrise, 1.33)\n(Temp, 10, 3.0)\n");
}

TEST_CASE("serialization round trip on random terms") {
  Rng rng(71);
  for (int i = 0; i < 1000; ++i) {
    Term t = cls_tests::random_state(rng, 30, 3);
    Term back = parse_term(serialize(t));
    CHECK(back == t);
  }
  CHECK(serialize(Term{}) == "0");
  CHECK(parse_term(serialize(Term{})) == Term{});
}

TEST_CASE("all 29 bundled rules round trip to equal structures") {
  RateRegistry reg = aedes::make_registry(cls_tests::test_tables());
  auto rules = aedes::build_rules(cls_tests::test_tables());
  REQUIRE(rules.size() == 29);
  for (const auto& r : rules) {
    std::string text = serialize(r);
    RewriteRule back = parse_rule(text, reg);
    CHECK(rules_equal(r, back));
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("real values survive the round trip") {
  for (double v : {0.5, 1.0, 2.75, 1e-9, 12345.678, 1e20}) {
    Term t = Term::loop(Term::symbol("C"), EnvInfo::make({{"DTime", Value::real(v)}}), Term{});
    Term back = parse_term(serialize(t));
    CHECK(back == t);
  }
  // Integers stay integers, reals stay reals.
  CHECK(serialize(parse_term("{C}<a:10>[0]")) == "{C}<a:10>[0]");
  CHECK(serialize(parse_term("{C}<a:10.0>[0]")) == "{C}<a:10.0>[0]");
}

TEST_CASE("fuzzing the parser never crashes it (smoke)") {
  Rng rng(73);
  const std::string alphabet = "abqXY19 |^.{}<>[]();:,$#@=>+-_\"\\\neps rule true";
  int errors = 0, parsed = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    std::size_t len = rng.below(60);
    bool raw = rng.below(4) == 0;
    for (std::size_t k = 0; k < len; ++k) {
      text += raw ? static_cast<char>(rng.below(256))
                  : alphabet[rng.below(alphabet.size())];
    }
    try {
      parse_term(text);
      ++parsed;
    } catch (const ParseError&) {
      ++errors;
    }
    try {
      parse_events(text);
    } catch (const ParseError&) {
    }
  }
  CHECK(errors + parsed == 10000);
  CHECK(errors > 0);
}
