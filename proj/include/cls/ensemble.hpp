#ifndef CLS_ENSEMBLE_HPP
#define CLS_ENSEMBLE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cls/config.hpp"

// Ensemble driver: replicate runs on a worker pool, trajectory/summary CSV
// output, run metadata and the trap-count comparison.

namespace cls {
namespace harness {

struct EnsembleResult {
  std::string trajectory_path;
  std::string summary_path;
  std::string metadata_path;
  std::vector<double> times;
  std::vector<double> mean_adults;  // across replicates, per sample time
  double wall_seconds = 0;
  std::uint64_t reactions = 0;
  std::uint64_t events = 0;
};

// Runs cfg.replicates simulations (seeds seed+0 .. seed+R-1), writes
// trajectory.csv, summary.csv and metadata.json under cfg.output_dir.
EnsembleResult run_ensemble(const RunConfig& cfg);

struct TrapComparison {
  std::vector<double> days;
  std::vector<double> simulated;
  std::vector<double> observed;
  double pearson_r = 0;
  std::string csv;
};

// Pure join of the simulated mean-adult series against trap counts; throws
// ConfigError if a trap day lies outside the sampled range.
TrapComparison compare_traps(const std::vector<double>& times,
                             const std::vector<double>& mean_adults, const TrapSeries& traps);

// Reads summary.csv from the config's output dir, joins with the trap file,
// writes comparison.csv there.
TrapComparison compare_from_files(const RunConfig& cfg);

}  // namespace harness
}  // namespace cls

#endif
