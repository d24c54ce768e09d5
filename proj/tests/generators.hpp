#ifndef CLS_TESTS_GENERATORS_HPP
#define CLS_TESTS_GENERATORS_HPP

#include <string>
#include <vector>

#include "cls/aedes.hpp"
#include "cls/rng.hpp"
#include "cls/term.hpp"

// Random canonical terms for property tests. Shapes follow the model's
// vocabulary (mosquito loops inside containers inside an environment) plus
// free symbols, so generated states exercise the same structures the rules
// match.

namespace cls_tests {

using namespace cls;

inline Term random_mosquito_content(Rng& rng) {
  switch (rng.below(4)) {
    case 0:
      return aedes::MosquitoPhase::egg().content();
    case 1:
      return aedes::MosquitoPhase::larva(1 + static_cast<int>(rng.below(4))).content();
    case 2:
      return aedes::MosquitoPhase::pupa().content();
    default:
      return aedes::MosquitoPhase::adult(1 + static_cast<int>(rng.below(8)), rng.below(4)).content();
  }
}

// A parallel level of a-loops and free symbols with bounded total
// multiplicity.
inline Term random_population(Rng& rng, std::uint64_t max_total) {
  std::vector<TermItem> items;
  std::uint64_t total = 0;
  std::uint64_t kinds = 1 + rng.below(5);
  for (std::uint64_t k = 0; k < kinds && total < max_total; ++k) {
    std::uint64_t n = 1 + rng.below(std::min<std::uint64_t>(6, max_total - total));
    total += n;
    if (rng.below(5) == 0) {
      items.push_back(TermItem{Sequence{{std::string("s") + std::to_string(rng.below(3))}}, n});
    } else {
      Term m = Term::loop(Term::symbol("a"), EnvInfo{}, random_mosquito_content(rng), n);
      items.push_back(m.items()[0]);
    }
  }
  return Term::make(std::move(items));
}

inline EnvInfo random_container_info(Rng& rng, std::int64_t ind) {
  static const char* vols[3] = {"empty", "half_full", "full"};
  return EnvInfo::make({{"ind", Value::integer(ind)},
                        {"Temp", Value::real(static_cast<double>(rng.below(16)))},
                        {"Vol", Value::token(vols[rng.below(3)])},
                        {"p1", Value::integer(static_cast<std::int64_t>(2 + rng.below(20)))},
                        {"p2", Value::integer(static_cast<std::int64_t>(30 + rng.below(20)))},
                        {"p3", Value::integer(static_cast<std::int64_t>(60 + rng.below(20)))},
                        {"DTime", Value::real(0.5 + static_cast<double>(rng.below(10)) * 0.5)}});
}

// A full state: environment loop holding adults and up to max_containers
// containers.
inline Term random_state(Rng& rng, std::uint64_t max_total, std::uint64_t max_containers) {
  std::uint64_t n_containers = rng.below(max_containers + 1);
  std::uint64_t budget = max_total / (n_containers + 1);
  std::vector<TermItem> env_content;
  {
    Term adults = random_population(rng, budget);
    for (const auto& it : adults.items()) env_content.push_back(it);
  }
  for (std::uint64_t c = 0; c < n_containers; ++c) {
    Term content = random_population(rng, budget);
    Term loop = Term::loop(Term::symbol("C"),
                           random_container_info(rng, static_cast<std::int64_t>(c + 1)),
                           std::move(content));
    env_content.push_back(loop.items()[0]);
  }
  EnvInfo env = EnvInfo::make({{"Temp", Value::real(static_cast<double>(rng.below(16)))},
                               {"Daylight", Value::boolean(rng.below(2) == 1)}});
  return Term::loop(Term::symbol("En"), std::move(env), Term::make(std::move(env_content)));
}

}  // namespace cls_tests

#endif
