#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "cls/config.hpp"
#include "cls/dsl.hpp"
#include "cls/ensemble.hpp"
#include "cls/selftest.hpp"

namespace {

using namespace cls;
using namespace cls::harness;

struct CommonFlags {
  std::string config_path;
  std::int64_t seed = -1;
  std::int64_t replicates = -1;
  double maxtime = -1;
  double sample_interval = -1;
  std::string out;
};

RunConfig load_with_overrides(const CommonFlags& flags) {
  RunConfig cfg = load_config(flags.config_path);
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.replicates > 0) cfg.replicates = static_cast<std::uint64_t>(flags.replicates);
  if (flags.maxtime >= 0) cfg.maxtime = flags.maxtime;
  if (flags.sample_interval > 0) cfg.sample_interval = flags.sample_interval;
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration (JSON)")->required();
  cmd->add_option("--seed", flags.seed, "override the base seed");
  cmd->add_option("--replicates", flags.replicates, "override the replicate count");
  cmd->add_option("--maxtime", flags.maxtime, "override the horizon (days)");
  cmd->add_option("--sample-interval", flags.sample_interval, "override the sample grid (days)");
  cmd->add_option("--out", flags.out, "override the output directory");
}

int cmd_run(const CommonFlags& flags) {
  RunConfig cfg = load_with_overrides(flags);
  EnsembleResult res = run_ensemble(cfg);
  std::printf("wrote %s\n", res.trajectory_path.c_str());
  std::printf("wrote %s\n", res.summary_path.c_str());
  std::printf("wrote %s\n", res.metadata_path.c_str());
  std::printf("%llu replicates, %llu reactions, %llu events handled, %.2fs\n",
              static_cast<unsigned long long>(cfg.replicates),
              static_cast<unsigned long long>(res.reactions),
              static_cast<unsigned long long>(res.events), res.wall_seconds);
  return 0;
}

int cmd_validate(const CommonFlags& flags) {
  RunConfig cfg = load_with_overrides(flags);
  auto rules = load_model_rules(cfg);
  aedes::ClimateSchedule climate = load_climate(cfg);
  if (cfg.maxtime > static_cast<double>(climate.days()))
    throw ConfigError("maxtime exceeds the climate series");

  // Guard thresholds in the model file must agree with the configured blood
  // threshold.
  for (const auto& r : rules) {
    if (r.guard.kind == Guard::Kind::kNatGreater && r.guard.threshold != cfg.tables.blood_threshold)
      throw ConfigError("rule " + r.id + " guards q > " + std::to_string(r.guard.threshold) +
                        " but the config blood_threshold is " +
                        std::to_string(cfg.tables.blood_threshold));
  }
  if (!cfg.trap_csv.empty()) load_traps(cfg.resolve_path(cfg.trap_csv));

  Ecosystem eco = build_run_ecosystem(cfg);
  std::printf("config ok: %zu rules, %zu containers, %zu climate days, %zu initial events\n",
              rules.size(), cfg.containers.size(), climate.days(), eco.events.size());
  return 0;
}

int cmd_compare(const CommonFlags& flags) {
  RunConfig cfg = load_with_overrides(flags);
  TrapComparison cmp = compare_from_files(cfg);
  std::printf("%zu sampling days joined; pearson_r = %.4f\n", cmp.days.size(), cmp.pearson_r);
  std::printf("wrote %s\n",
              (cfg.resolve_path(cfg.output_dir) + "/comparison.csv").c_str());
  return 0;
}

int cmd_selftest(const std::string& suite, std::uint64_t seed) {
  SelftestReport report = run_selftest(suite, seed);
  std::printf("%s: %s\n  %s\n", report.name.c_str(), report.pass ? "PASS" : "FAIL",
              report.details.c_str());
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clsim: stochastic simulator for compartmentalized rewrite models"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string suite;
  std::int64_t selftest_seed = 2024;

  CLI::App* run_cmd = app.add_subcommand("run", "run the configured ensemble");
  add_common(run_cmd, flags);
  CLI::App* validate_cmd = app.add_subcommand("validate", "check a configuration end to end");
  add_common(validate_cmd, flags);
  CLI::App* compare_cmd = app.add_subcommand("compare", "join simulated adults with trap counts");
  add_common(compare_cmd, flags);
  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run a statistical self-test");
  selftest_cmd->add_option("suite", suite, "exp-times | selection | ctmc-oracle | death-decay")
      ->required();
  selftest_cmd->add_option("--seed", selftest_seed, "self-test seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(flags);
    if (validate_cmd->parsed()) return cmd_validate(flags);
    if (compare_cmd->parsed()) return cmd_compare(flags);
    if (selftest_cmd->parsed())
      return cmd_selftest(suite, static_cast<std::uint64_t>(selftest_seed));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
