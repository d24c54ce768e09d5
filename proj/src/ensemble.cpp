#include "cls/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include "cls/engine.hpp"
#include "cls/stats.hpp"
#include "json.hpp"

namespace cls {
namespace harness {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct ReplicateTrack {
  std::vector<aedes::PopulationCounts> samples;
  std::uint64_t reactions = 0;
  std::uint64_t events = 0;
};

}  // namespace

EnsembleResult run_ensemble(const RunConfig& cfg) {
  auto start = std::chrono::steady_clock::now();

  Ecosystem eco = build_run_ecosystem(cfg);
  std::vector<std::int64_t> inds;
  for (const auto& c : cfg.containers) inds.push_back(c.ind);
  std::sort(inds.begin(), inds.end());

  const std::size_t n_samples =
      static_cast<std::size_t>(std::floor(cfg.maxtime / cfg.sample_interval)) + 1;
  std::vector<ReplicateTrack> tracks(cfg.replicates);

  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::uint64_t r = next.fetch_add(1);
      if (r >= cfg.replicates) return;
      ReplicateTrack& track = tracks[r];
      track.samples.reserve(n_samples);
      RunResult res = run(
          eco, cfg.seed + r, cfg.maxtime, cfg.sample_interval, aedes::make_handler(),
          [&](double, const Term& term) { track.samples.push_back(aedes::tally(term, inds)); });
      track.reactions = res.reactions;
      track.events = res.events_handled;
    }
  };
  std::size_t n_workers = std::min<std::size_t>(
      cfg.replicates, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Trajectory rows, replicate-major, time-minor.
  std::ostringstream traj;
  traj << "replicate,time";
  traj << ",eggs,larva1,larva2,larva3,larva4,pupae";
  for (int c = 1; c <= 8; ++c) traj << ",adult_c" << c;
  traj << ",adults";
  for (std::int64_t ind : inds) traj << ",vol_" << ind;
  traj << ",temp_offset,daylight\n";
  for (std::uint64_t r = 0; r < cfg.replicates; ++r) {
    const auto& samples = tracks[r].samples;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto& row = samples[s];
      traj << r << ',' << fmt(static_cast<double>(s) * cfg.sample_interval);
      traj << ',' << row.eggs;
      for (int i = 1; i <= 4; ++i) traj << ',' << row.larva[i];
      traj << ',' << row.pupae;
      for (int c = 1; c <= 8; ++c) traj << ',' << row.adults[c];
      traj << ',' << row.adults_total;
      for (int v : row.volumes) traj << ',' << v;
      traj << ',' << fmt(row.temp_offset) << ',' << (row.daylight ? 1 : 0) << '\n';
    }
  }

  EnsembleResult out;
  std::ostringstream summary;
  summary << "time,mean_adults,min_adults,max_adults,stddev_adults\n";
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::vector<double> adults;
    adults.reserve(cfg.replicates);
    for (const auto& track : tracks) {
      if (s < track.samples.size())
        adults.push_back(static_cast<double>(track.samples[s].adults_total));
    }
    double m = stats::mean(adults);
    double lo = *std::min_element(adults.begin(), adults.end());
    double hi = *std::max_element(adults.begin(), adults.end());
    summary << fmt(static_cast<double>(s) * cfg.sample_interval) << ',' << fmt(m) << ',' << fmt(lo)
            << ',' << fmt(hi) << ',' << fmt(stats::stddev(adults)) << '\n';
    out.times.push_back(static_cast<double>(s) * cfg.sample_interval);
    out.mean_adults.push_back(m);
  }

  for (const auto& track : tracks) {
    out.reactions += track.reactions;
    out.events += track.events;
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["engine"] = "clsim 1.0.0";
  meta["rng"] = Rng::kAlgorithm;
  meta["seed"] = cfg.seed;
  meta["replicates"] = cfg.replicates;
  meta["maxtime"] = cfg.maxtime;
  meta["sample_interval"] = cfg.sample_interval;
  meta["config_fnv1a64"] = hex64(fnv1a64(cfg.config_text));
  meta["model_fnv1a64"] = hex64(fnv1a64(read_file(cfg.resolve_path(cfg.model_file))));
  meta["climate_fnv1a64"] = hex64(fnv1a64(read_file(cfg.resolve_path(cfg.climate_csv))));
  meta["wall_seconds"] = out.wall_seconds;
  meta["reactions"] = out.reactions;
  meta["events_handled"] = out.events;
  meta["config"] = nlohmann::json::parse(cfg.config_text);

  std::filesystem::path dir(cfg.resolve_path(cfg.output_dir));
  out.trajectory_path = (dir / "trajectory.csv").string();
  out.summary_path = (dir / "summary.csv").string();
  out.metadata_path = (dir / "metadata.json").string();
  write_file(out.trajectory_path, traj.str());
  write_file(out.summary_path, summary.str());
  write_file(out.metadata_path, meta.dump(2) + "\n");
  return out;
}

TrapComparison compare_traps(const std::vector<double>& times,
                             const std::vector<double>& mean_adults, const TrapSeries& traps) {
  TrapComparison out;
  std::ostringstream csv;
  csv << "day,sim_mean_adults,trap_count\n";
  for (std::size_t i = 0; i < traps.days.size(); ++i) {
    double day = traps.days[i];
    auto it = std::find_if(times.begin(), times.end(),
                           [day](double t) { return std::abs(t - day) < 1e-9; });
    if (it == times.end())
      throw ConfigError("trap day " + fmt(day) + " lies outside the simulated sample grid");
    double sim = mean_adults[static_cast<std::size_t>(it - times.begin())];
    out.days.push_back(day);
    out.simulated.push_back(sim);
    out.observed.push_back(traps.counts[i]);
    csv << fmt(day) << ',' << fmt(sim) << ',' << fmt(traps.counts[i]) << '\n';
  }
  if (out.days.size() >= 2) {
    out.pearson_r = stats::pearson(out.simulated, out.observed);
    csv << "pearson_r," << fmt(out.pearson_r) << ",\n";
  }
  out.csv = csv.str();
  return out;
}

TrapComparison compare_from_files(const RunConfig& cfg) {
  if (cfg.trap_csv.empty()) throw ConfigError("config has no trap_csv");
  TrapSeries traps = load_traps(cfg.resolve_path(cfg.trap_csv));

  std::filesystem::path dir(cfg.resolve_path(cfg.output_dir));
  std::string summary = read_file((dir / "summary.csv").string());
  std::vector<double> times, means;
  std::istringstream in(summary);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream row(line);
    std::string t, m;
    std::getline(row, t, ',');
    std::getline(row, m, ',');
    times.push_back(std::stod(t));
    means.push_back(std::stod(m));
  }

  TrapComparison cmp = compare_traps(times, means, traps);
  write_file((dir / "comparison.csv").string(), cmp.csv);
  return cmp;
}

}  // namespace harness
}  // namespace cls
