#include "cls/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cls/dsl.hpp"
#include "json.hpp"

namespace cls {
namespace harness {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunConfig::resolve_path(const std::string& p) const {
  std::filesystem::path fp(p);
  if (fp.is_absolute() || base_dir.empty()) return p;
  return (std::filesystem::path(base_dir) / fp).string();
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError("config: " + what); }

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing required key '") + key + "'");
  return *it;
}

double need_number(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t need_nat(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_unsigned()) bad(std::string("'") + key + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string need_string(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

aedes::Volume parse_volume(const std::string& s) {
  try {
    return aedes::volume_from_token(s);
  } catch (const Error& e) {
    bad(e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("top level must be an object");

  RunConfig cfg;
  cfg.config_text = json_text;
  cfg.base_dir = base_dir;

  cfg.schema_version = static_cast<int>(need_nat(j, "schema_version"));
  if (cfg.schema_version != 1) bad("unsupported schema_version");
  cfg.model_file = need_string(j, "model_file");
  cfg.seed = need_nat(j, "seed");
  cfg.replicates = need_nat(j, "replicates");
  if (cfg.replicates < 1) bad("replicates must be >= 1");
  cfg.maxtime = need_number(j, "maxtime");
  if (cfg.maxtime < 0) bad("maxtime must be nonnegative");
  cfg.sample_interval = need_number(j, "sample_interval");
  if (!(cfg.sample_interval > 0)) bad("sample_interval must be positive");
  cfg.output_dir = need_string(j, "output_dir");
  cfg.climate_csv = need_string(j, "climate_csv");
  if (j.contains("trap_csv")) cfg.trap_csv = need_string(j, "trap_csv");
  cfg.rain_light_mm = need_number(j, "rain_light_mm");
  cfg.rain_heavy_mm = need_number(j, "rain_heavy_mm");
  if (!(cfg.rain_light_mm > 0) || cfg.rain_heavy_mm < cfg.rain_light_mm)
    bad("rainfall thresholds must satisfy 0 < light <= heavy");
  cfg.sunrise = need_number(j, "sunrise");
  cfg.sunset = need_number(j, "sunset");
  if (!(cfg.sunrise >= 0 && cfg.sunrise < cfg.sunset && cfg.sunset <= 1))
    bad("sunrise/sunset must satisfy 0 <= sunrise < sunset <= 1");

  cfg.tables.mtd_celsius = need_number(j, "mtd_celsius");
  cfg.tables.blood_threshold = need_nat(j, "blood_threshold");
  {
    const json& st = need(j, "stage_tables");
    const json& dd = need(st, "degree_days");
    if (!dd.is_array() || dd.size() != 6) bad("degree_days must list 6 values");
    for (int i = 0; i < 6; ++i) cfg.tables.dd[i + 1] = dd[i].get<double>();
    const json& bdr = need(st, "baseline_death_rate");
    if (!bdr.is_array() || bdr.size() != 14) bad("baseline_death_rate must list 14 values");
    for (int i = 0; i < 14; ++i) cfg.tables.bdr[i + 1] = bdr[i].get<double>();
    cfg.tables.dur[7] = need_number(st, "blood_meal_interval");
    const json& gd = need(st, "gonotrophic_durations");
    if (!gd.is_array() || gd.size() != 8) bad("gonotrophic_durations must list 8 values");
    for (int i = 0; i < 8; ++i) cfg.tables.dur[i + 8] = gd[i].get<double>();
  }
  try {
    cfg.tables.validate();
  } catch (const Error& e) {
    bad(e.what());
  }

  const json& cs = need(j, "containers");
  if (!cs.is_array() || cs.empty()) bad("containers must be a non-empty list");
  for (const auto& c : cs) {
    aedes::ContainerSpec spec;
    spec.ind = static_cast<std::int64_t>(need_nat(c, "ind"));
    spec.dtime = need_number(c, "dtime");
    const json& th = need(c, "thresholds");
    if (!th.is_array() || th.size() != 3) bad("thresholds must list 3 values");
    spec.phi1 = th[0].get<std::uint64_t>();
    spec.phi2 = th[1].get<std::uint64_t>();
    spec.phi3 = th[2].get<std::uint64_t>();
    spec.initial_vol = parse_volume(need_string(c, "volume"));
    if (c.contains("initial_temp")) spec.initial_temp = c["initial_temp"].get<double>();
    try {
      spec.validate();
    } catch (const Error& e) {
      bad(e.what());
    }
    for (const auto& other : cfg.containers) {
      if (other.ind == spec.ind) bad("duplicate container index " + std::to_string(spec.ind));
    }
    cfg.containers.push_back(spec);
  }

  const json& pop = need(j, "initial_population");
  cfg.population.adults = need_nat(pop, "adults");
  cfg.population.adult_cycle = static_cast<int>(need_nat(pop, "adult_cycle"));
  cfg.population.eggs = need_nat(pop, "eggs");
  cfg.population.instar1 = need_nat(pop, "instar1");
  cfg.population.instar2 = need_nat(pop, "instar2");
  cfg.population.instar3 = need_nat(pop, "instar3");
  cfg.population.instar4 = need_nat(pop, "instar4");
  cfg.population.pupae = need_nat(pop, "pupae");
  if (cfg.population.adults > 0 &&
      (cfg.population.adult_cycle < 1 || cfg.population.adult_cycle > 8))
    bad("adult_cycle must lie in [1,8]");

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::string text = read_file(path);
  std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_config(text, dir);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_field(const std::string& s, std::size_t row, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("climate/trap csv row " + std::to_string(row) + ": bad " + what + " '" + s +
                      "'");
  }
}

}  // namespace

aedes::ClimateSchedule parse_climate(const std::string& csv_text, double mtd_celsius,
                                     double light_mm, double heavy_mm, double sunrise,
                                     double sunset) {
  aedes::ClimateSchedule schedule;
  schedule.sunrise = sunrise;
  schedule.sunset = sunset;

  std::istringstream in(csv_text);
  std::string line;
  std::size_t row = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (header) {
      if (fields.size() != 3 || fields[0] != "day" || fields[1] != "temp_c" ||
          fields[2] != "rain_mm")
        throw ConfigError("climate csv must start with header day,temp_c,rain_mm");
      header = false;
      continue;
    }
    if (fields.size() != 3)
      throw ConfigError("climate csv row " + std::to_string(row) + ": expected 3 columns");
    double day = parse_field(fields[0], row, "day");
    double temp = parse_field(fields[1], row, "temp_c");
    double rain = parse_field(fields[2], row, "rain_mm");
    if (day != static_cast<double>(schedule.temp_offset.size()))
      throw ConfigError("climate csv row " + std::to_string(row) +
                        ": days must be consecutive from 0, got " + fields[0]);
    if (rain < 0)
      throw ConfigError("climate csv row " + std::to_string(row) + ": negative rainfall");
    schedule.temp_offset.push_back(std::max(0.0, temp - mtd_celsius));
    if (rain >= heavy_mm) {
      schedule.rains.push_back(aedes::RainEvent{day + 0.5, "heavy"});
    } else if (rain >= light_mm) {
      schedule.rains.push_back(aedes::RainEvent{day + 0.5, "light"});
    }
  }
  if (schedule.temp_offset.empty()) throw ConfigError("climate csv has no data rows");
  return schedule;
}

aedes::ClimateSchedule load_climate(const RunConfig& cfg) {
  return parse_climate(read_file(cfg.resolve_path(cfg.climate_csv)), cfg.tables.mtd_celsius,
                       cfg.rain_light_mm, cfg.rain_heavy_mm, cfg.sunrise, cfg.sunset);
}

TrapSeries parse_traps(const std::string& csv_text) {
  TrapSeries out;
  std::istringstream in(csv_text);
  std::string line;
  std::size_t row = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (header) {
      if (fields.size() != 2 || fields[0] != "day" || fields[1] != "count")
        throw ConfigError("trap csv must start with header day,count");
      header = false;
      continue;
    }
    if (fields.size() != 2)
      throw ConfigError("trap csv row " + std::to_string(row) + ": expected 2 columns");
    out.days.push_back(parse_field(fields[0], row, "day"));
    out.counts.push_back(parse_field(fields[1], row, "count"));
  }
  return out;
}

TrapSeries load_traps(const std::string& path) { return parse_traps(read_file(path)); }

std::vector<RewriteRule> load_model_rules(const RunConfig& cfg) {
  RateRegistry reg = aedes::make_registry(cfg.tables);
  std::string text = read_file(cfg.resolve_path(cfg.model_file));
  std::vector<RewriteRule> rules;
  try {
    rules = dsl::parse_rules(text, reg);
  } catch (const dsl::ParseError& e) {
    throw ConfigError(cfg.model_file + ": " + e.what());
  }
  if (rules.empty()) throw ConfigError(cfg.model_file + ": no rules");
  aedes::apply_standard_strategies(rules);
  return rules;
}

Ecosystem build_run_ecosystem(const RunConfig& cfg) {
  aedes::ClimateSchedule climate = load_climate(cfg);
  if (cfg.maxtime > static_cast<double>(climate.days()))
    throw ConfigError("maxtime exceeds the climate series (" + std::to_string(climate.days()) +
                      " days)");
  Ecosystem eco = aedes::build_ecosystem(cfg.containers, cfg.tables, climate, cfg.population);
  eco.rules = load_model_rules(cfg);
  validate(eco);
  return eco;
}

}  // namespace harness
}  // namespace cls
