#ifndef CLS_SELFTEST_HPP
#define CLS_SELFTEST_HPP

#include <string>

// Statistical self-tests: exponential waiting times, selection frequencies,
// the matrix-exponential CTMC oracle and the pure-death analytic check. The
// acceptance suite runs the same checks.

namespace cls {
namespace harness {

struct SelftestReport {
  std::string name;
  bool pass = false;
  std::string details;
};

// Inter-reaction times against Exp(a0) for a0 in {0.5, 4}: KS at 0.01
// significance over 1e5 samples each, sample mean within 3% of 1/a0.
SelftestReport selftest_exp_times(std::uint64_t seed = 2024);

// (mu, theta) frequencies over a fixed 3x3 propensity matrix, 1e5 draws,
// each within 3 sigma of a_j^i / a0.
SelftestReport selftest_selection(std::uint64_t seed = 2024);

// Two molecules hopping A<->B<->C: end-state distribution at t=1 over 5e4
// runs against the uniformized matrix exponential; total variation < 0.02.
SelftestReport selftest_ctmc_oracle(std::uint64_t seed = 2024);

// 100 individuals dying at 0.1/day: mean population at t=10 over 1000
// replicates within the 99% CI of 100 e^-1.
SelftestReport selftest_death_decay(std::uint64_t seed = 2024);

// Dispatch by suite name; throws ConfigError on an unknown suite.
SelftestReport run_selftest(const std::string& suite, std::uint64_t seed = 2024);

}  // namespace harness
}  // namespace cls

#endif
