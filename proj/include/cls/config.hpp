#ifndef CLS_CONFIG_HPP
#define CLS_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cls/aedes.hpp"
#include "cls/error.hpp"
#include "cls/rule.hpp"

// Run configuration (JSON), climate CSV ingestion and trap data.

namespace cls {
namespace harness {

struct RunConfig {
  int schema_version = 1;
  std::string model_file;
  std::uint64_t seed = 0;
  std::uint64_t replicates = 1;
  double maxtime = 1.0;
  double sample_interval = 1.0;
  std::string output_dir = "out";
  std::string climate_csv;
  std::string trap_csv;  // optional unless compare runs
  double rain_light_mm = 2.0;
  double rain_heavy_mm = 15.0;
  double sunrise = 0.25;
  double sunset = 0.75;
  aedes::StageTables tables;
  std::vector<aedes::ContainerSpec> containers;
  aedes::InitialPopulation population;

  std::string config_text;  // raw file bytes (hashed into metadata)
  std::string base_dir;     // directory of the config file

  // Paths in the config resolve relative to the config file.
  std::string resolve_path(const std::string& p) const;
};

RunConfig parse_config(const std::string& json_text, const std::string& base_dir);
RunConfig load_config(const std::string& path);

// CSV with columns day,temp_c,rain_mm; days consecutive from 0. Temp events
// use max(0, temp_c - MTD); rainfall classifies by the thresholds and lands
// at midday.
aedes::ClimateSchedule parse_climate(const std::string& csv_text, double mtd_celsius,
                                     double light_mm, double heavy_mm, double sunrise,
                                     double sunset);
aedes::ClimateSchedule load_climate(const RunConfig& cfg);

struct TrapSeries {
  std::vector<double> days;
  std::vector<double> counts;
};

// CSV with columns day,count.
TrapSeries parse_traps(const std::string& csv_text);
TrapSeries load_traps(const std::string& path);

// Rules for a run: the model file parsed with the config's rate registry,
// standard strategies attached by rule id.
std::vector<RewriteRule> load_model_rules(const RunConfig& cfg);

Ecosystem build_run_ecosystem(const RunConfig& cfg);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace harness
}  // namespace cls

#endif
