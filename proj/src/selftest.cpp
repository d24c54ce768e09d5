#include "cls/selftest.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "cls/dsl.hpp"
#include "cls/engine.hpp"
#include "cls/error.hpp"
#include "cls/stats.hpp"

namespace cls {
namespace harness {

namespace {

EventHandler null_handler() {
  return [](const ExternalEvent&, const Term& t, const EventList& e) {
    return std::make_tuple(t, e, std::vector<CompartmentAddress>{});
  };
}

Ecosystem toy(const std::string& initial, const std::vector<std::string>& rule_texts) {
  Ecosystem eco;
  eco.initial = dsl::parse_term(initial);
  RateRegistry reg;
  for (const auto& t : rule_texts) eco.rules.push_back(dsl::parse_rule(t, reg));
  validate(eco);
  return eco;
}

}  // namespace

SelftestReport selftest_exp_times(std::uint64_t seed) {
  SelftestReport report{"exp-times", true, {}};
  std::ostringstream out;
  const std::size_t n = 100000;
  for (double a0 : {0.5, 4.0}) {
    Ecosystem eco = toy("a", {"rule K a => a @ " + std::to_string(a0) + ";"});
    SimState state(eco, seed);
    std::vector<double> gaps;
    gaps.reserve(n);
    double last = 0;
    while (gaps.size() < n) {
      step(state, eco.rules, 1e18, null_handler());
      gaps.push_back(state.clock - last);
      last = state.clock;
    }
    double d = stats::ks_statistic(gaps, [a0](double x) { return 1.0 - std::exp(-a0 * x); });
    double crit = stats::ks_critical(n, 0.01);
    double m = stats::mean(gaps);
    double rel = std::abs(m - 1.0 / a0) * a0;
    bool pass = d < crit && rel < 0.03;
    report.pass = report.pass && pass;
    out << "a0=" << a0 << ": KS=" << d << " (crit " << crit << "), mean=" << m
        << " (expected " << 1.0 / a0 << ", rel err " << rel << ") "
        << (pass ? "ok" : "FAIL") << "; ";
  }
  report.details = out.str();
  return report;
}

SelftestReport selftest_selection(std::uint64_t seed) {
  SelftestReport report{"selection", true, {}};
  const std::vector<std::vector<double>> a = {{1.0, 2.0, 3.0}, {0.5, 0.0, 1.5}, {2.0, 4.0, 1.0}};
  PropensityTable table = PropensityTable::from_matrix(a);
  double a0 = table.total();

  const std::size_t n = 100000;
  Rng rng(seed);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) counts[select_rule_and_compartment(table, rng)] += 1;

  std::ostringstream out;
  double worst = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    for (std::size_t c = 0; c < a[j].size(); ++c) {
      double p = a[j][c] / a0;
      double observed = static_cast<double>(counts[{j, c}]);
      if (p == 0.0) {
        if (observed != 0) report.pass = false;
        continue;
      }
      double sigma = std::sqrt(p * (1 - p) * static_cast<double>(n));
      double dev = std::abs(observed - p * static_cast<double>(n)) / sigma;
      worst = std::max(worst, dev);
      if (dev >= 3.0) report.pass = false;
    }
  }
  out << "9 cells, n=" << n << ", worst deviation " << worst << " sigma"
      << (report.pass ? " (all within 3)" : " FAIL");
  report.details = out.str();
  return report;
}

SelftestReport selftest_ctmc_oracle(std::uint64_t seed) {
  SelftestReport report{"ctmc-oracle", true, {}};
  // Two molecules hopping on A <-> B <-> C.
  const double kab = 2.0, kba = 1.0, kbc = 1.5, kcb = 0.8;
  Ecosystem eco = toy("A^2", {
                                 "rule AB A => B @ " + std::to_string(kab) + ";",
                                 "rule BA B => A @ " + std::to_string(kba) + ";",
                                 "rule BC B => C @ " + std::to_string(kbc) + ";",
                                 "rule CB C => B @ " + std::to_string(kcb) + ";",
                             });

  // State space: multisets (na, nb, nc) with na+nb+nc = 2.
  std::vector<std::array<int, 3>> states;
  std::map<std::array<int, 3>, std::size_t> index;
  for (int na = 2; na >= 0; --na) {
    for (int nb = 2 - na; nb >= 0; --nb) {
      std::array<int, 3> s{na, nb, 2 - na - nb};
      index[s] = states.size();
      states.push_back(s);
    }
  }

  // Generator, written down directly from the hop rates.
  std::vector<std::vector<double>> q(states.size(), std::vector<double>(states.size(), 0.0));
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto [na, nb, nc] = states[i];
    auto add = [&](std::array<int, 3> to, double rate) {
      if (rate <= 0) return;
      std::size_t j = index.at(to);
      q[i][j] += rate;
      q[i][i] -= rate;
    };
    add({na - 1, nb + 1, nc}, kab * na);
    add({na + 1, nb - 1, nc}, kba * nb);
    add({na, nb - 1, nc + 1}, kbc * nb);
    add({na, nb + 1, nc - 1}, kcb * nc);
  }
  std::vector<double> p0(states.size(), 0.0);
  p0[index.at({2, 0, 0})] = 1.0;
  std::vector<double> expected = stats::ctmc_transient(q, p0, 1.0);

  const std::size_t n = 50000;
  std::vector<double> observed(states.size(), 0.0);
  auto count_of = [](const Term& t, const char* sym) -> int {
    for (const auto& it : t.items()) {
      if (it.unit.is_seq() && it.unit.seq().symbols == std::vector<std::string>{sym})
        return static_cast<int>(it.count);
    }
    return 0;
  };
  for (std::size_t r = 0; r < n; ++r) {
    SimState state(eco, seed + r);
    while (!step(state, eco.rules, 1.0, null_handler()).terminated()) {
    }
    std::array<int, 3> s{count_of(state.term, "A"), count_of(state.term, "B"),
                         count_of(state.term, "C")};
    observed[index.at(s)] += 1.0 / static_cast<double>(n);
  }

  double tv = stats::total_variation(observed, expected);
  report.pass = tv < 0.02;
  std::ostringstream out;
  out << "6 states, " << n << " runs, total variation " << tv << " (limit 0.02)"
      << (report.pass ? "" : " FAIL");
  report.details = out.str();
  return report;
}

SelftestReport selftest_death_decay(std::uint64_t seed) {
  SelftestReport report{"death-decay", true, {}};
  Ecosystem eco = toy("a^100", {"rule D a => 0 @ 0.1;"});

  const std::size_t n = 1000;
  std::vector<double> finals;
  finals.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::uint64_t remaining = 0;
    run(eco, seed + r, 10.0, 10.0, null_handler(), [&](double t, const Term& term) {
      if (t == 10.0) remaining = term.empty() ? 0 : term.items()[0].count;
    });
    finals.push_back(static_cast<double>(remaining));
  }

  const double p = std::exp(-1.0);
  const double expected = 100.0 * p;
  const double se = std::sqrt(100.0 * p * (1 - p) / static_cast<double>(n));
  const double half_width = 2.5758 * se;  // 99% two-sided
  double m = stats::mean(finals);
  report.pass = std::abs(m - expected) < half_width;
  std::ostringstream out;
  out << "mean " << m << " vs " << expected << " +- " << half_width
      << (report.pass ? " ok" : " FAIL");
  report.details = out.str();
  return report;
}

SelftestReport run_selftest(const std::string& suite, std::uint64_t seed) {
  if (suite == "exp-times") return selftest_exp_times(seed);
  if (suite == "selection") return selftest_selection(seed);
  if (suite == "ctmc-oracle") return selftest_ctmc_oracle(seed);
  if (suite == "death-decay") return selftest_death_decay(seed);
  throw ConfigError("unknown selftest suite: " + suite +
                    " (expected exp-times, selection, ctmc-oracle or death-decay)");
}

}  // namespace harness
}  // namespace cls
