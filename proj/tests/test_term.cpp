#include "cls/term.hpp"

#include <algorithm>

#include "cls/dsl.hpp"
#include "cls/rng.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace cls;
using cls::dsl::parse_term;
using cls::dsl::serialize;
using cls_tests::random_state;

namespace {

const char* kPopText =
    "{En}<Temp:10; Daylight:true>["
    "{a}<>[Adult | 1 | Blood^2]^5 | {a}<>[Adult | 1]^3 | "
    "{C}<ind:1; Temp:10; Vol:empty; p1:100; p2:250; p3:300; DTime:2.0>[0] | "
    "{C}<ind:2; Temp:10; Vol:full; p1:50; p2:125; p3:150; DTime:1.0>[0]]";

CompartmentAddress container_addr(const Term& t, std::int64_t ind) {
  auto found = find_loops(t, [ind](const Loop& l) {
    return l.info.has("ind") && l.info.at("ind").as_integer() == ind;
  });
  REQUIRE(found.size() == 1);
  return found[0];
}

// Toy tree exploding multiplicities into individual copies; used as the
// counting oracle for total size.
std::uint64_t expanded_size(const Term& t) {
  std::uint64_t n = 0;
  for (const auto& it : t.items()) {
    if (!it.unit.is_loop()) continue;
    for (std::uint64_t k = 0; k < it.count; ++k) n += 1;
  }
  return n;
}

}  // namespace

TEST_CASE("canonicalize merges identical siblings") {
  CHECK(serialize(parse_term("C | C | C | C | C")) == "C^5");
  CHECK(parse_term("0").empty());
  CHECK(canonicalize(parse_term("0")) == Term{});

  Term eggs = parse_term("{a}<>[Egg]^2 | {a}<>[Egg]^3");
  REQUIRE(eggs.items().size() == 1);
  CHECK(eggs.items()[0].count == 5);
  CHECK(serialize(eggs) == "{a}<>[Egg]^5");
}

TEST_CASE("canonicalize drops eps and is idempotent") {
  Term t = parse_term("eps | a | eps");
  CHECK(serialize(t) == "a");
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Term s = random_state(rng, 40, 3);
    CHECK(canonicalize(s) == s);
    CHECK(canonicalize(canonicalize(s)) == canonicalize(s));
  }
}

TEST_CASE("congruence is order-insensitive and an equivalence") {
  Term a = parse_term("{a}<>[Egg] | {a}<>[Larva | 1]");
  Term b = parse_term("{a}<>[Larva | 1] | {a}<>[Egg]");
  CHECK(congruent(a, b));
  CHECK(congruent(a, a));
  CHECK(congruent(b, a));

  CHECK_FALSE(congruent(parse_term("a.b"), parse_term("b.a")));  // sequences are ordered
  Term t = parse_term(kPopText);
  CHECK(congruent(t, canonicalize(t)));

  // Permuting parallel siblings never changes the canonical form.
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    Term s = random_state(rng, 40, 3);
    std::vector<TermItem> items = s.items();
    for (std::size_t k = items.size(); k > 1; --k) {
      std::swap(items[k - 1], items[rng.below(k)]);
    }
    CHECK(Term::make(items) == s);
  }
}

TEST_CASE("count_individuals matches the worked examples") {
  Term adults = parse_term("{a}<>[Adult | 1 | Blood^2]^5 | {a}<>[Adult | 1]^3");
  CHECK(count_individuals(adults, individuals_with({"Adult"})) == 8);
  CHECK(count_individuals(Term{}, individuals_with({})) == 0);

  Term container = parse_term(
      "{a}<>[Egg]^6 | {a}<>[Larva | 1]^2 | {a}<>[Larva | 2] | {a}<>[Larva | 3]");
  CHECK(count_individuals(container, individuals_with({"Egg", "Larva", "Pupa"})) == 10);
  CHECK(count_individuals(container, individuals_with({"Egg"})) == 6);
}

TEST_CASE("count_individuals is additive and linear in multiplicities") {
  Rng rng(13);
  auto immature = individuals_with({"Egg", "Larva", "Pupa"});
  for (int i = 0; i < 100; ++i) {
    Term a = cls_tests::random_population(rng, 25);
    Term b = cls_tests::random_population(rng, 25);
    CHECK(count_individuals(a.parallel(b), immature) ==
          count_individuals(a, immature) + count_individuals(b, immature));
  }
}

TEST_CASE("total size equals brute-force expansion count") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    Term level = cls_tests::random_population(rng, 1000);
    CHECK(count_individuals(level, nullptr) == expanded_size(level));
  }
}

TEST_CASE("resolve returns compartment info and content") {
  Term pop = parse_term(kPopText);

  auto root = resolve(pop, CompartmentAddress{});
  CHECK(root.info.empty());
  CHECK(root.content == pop);

  auto env = resolve(pop, CompartmentAddress{{0}});
  CHECK(env.info.at("Temp").as_real() == 10.0);
  CHECK(env.info.at("Daylight").as_boolean());
  CHECK(count_individuals(env.content, individuals_with({"Adult"})) == 8);

  auto c2 = resolve(pop, container_addr(pop, 2));
  CHECK(c2.info.at("ind").as_integer() == 2);
  CHECK(c2.info.at("Vol").as_token() == "full");
  CHECK(c2.info.at("DTime").as_real() == 1.0);
  CHECK(c2.content.empty());

  CHECK_THROWS_AS(resolve(pop, CompartmentAddress{{0, 99}}), InvalidAddressError);
  CHECK_THROWS_AS(resolve(pop, CompartmentAddress{{1}}), InvalidAddressError);
}

TEST_CASE("update_info rewrites one binding") {
  Term pop = parse_term(kPopText);
  auto addr = container_addr(pop, 2);

  Term after = update_info(pop, addr, "Vol", Value::token("half_full"));
  auto c2 = resolve(after, container_addr(after, 2));
  CHECK(c2.info.at("Vol").as_token() == "half_full");
  CHECK_FALSE(congruent(pop, after));

  // Setting a value to itself is a congruence no-op.
  Value current = resolve(pop, CompartmentAddress{{0}}).info.at("Temp");
  Term same = update_info(pop, CompartmentAddress{{0}}, "Temp", current);
  CHECK(congruent(same, pop));

  CHECK_THROWS_AS(update_info(pop, addr, "Humidity", Value::real(1.0)), UnknownInfoError);
  CHECK_THROWS_AS(update_info(pop, CompartmentAddress{{0, 99}}, "Vol", Value::integer(1)),
                  InvalidAddressError);

  // Restoring the old value yields a congruent term.
  Term back = update_info(after, container_addr(after, 2), "Vol", Value::token("full"));
  CHECK(congruent(back, pop));
}

TEST_CASE("subtract and contains behave as multiset operations") {
  Term t = parse_term("a^3 | b | {a}<>[Egg]^2");
  CHECK(t.contains(parse_term("a^2 | {a}<>[Egg]")));
  CHECK_FALSE(t.contains(parse_term("a^4")));
  CHECK(t.subtract(parse_term("a^3 | b")) == parse_term("{a}<>[Egg]^2"));
  CHECK_THROWS_AS(t.subtract(parse_term("c")), Error);
  CHECK(t.subtract(t).empty());
}

TEST_CASE("values compare exactly, without epsilon") {
  CHECK(Value::real(1.5) == Value::real(1.5));
  CHECK_FALSE(Value::real(1.5) == Value::real(1.5 + 1e-12));
  CHECK_FALSE(Value::integer(10) == Value::real(10.0));
  CHECK(compare(Value::integer(1), Value::integer(2)) == std::strong_ordering::less);
}
