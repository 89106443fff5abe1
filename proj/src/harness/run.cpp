#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "volcon/errors.hpp"
#include "volcon/harness.hpp"

namespace volcon::harness {

namespace {

const char* const kBodyColumns[] = {"x",  "y",  "z",  "qw", "qx", "qy", "qz",
                                    "vx", "vy", "vz", "wx", "wy", "wz", "ke"};

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

//! Ratio samples of one run, reduced once the expected-energy peak is known.
struct KeTrace {
  std::vector<std::pair<double, double>> expected_and_ratio;
  double peak_expected = 0.0;

  void add(const scene::MetricsSample& s, const KeWindow& window) {
    if (std::isnan(s.ke_ratio) || s.t < window.start) return;
    expected_and_ratio.emplace_back(s.expected_energy, s.ke_ratio);
    peak_expected = std::max(peak_expected, s.expected_energy);
  }

  KeStats reduce(const KeWindow& window) const {
    KeStats stats;
    const double floor = window.min_expected_fraction * peak_expected;
    double sum = 0.0;
    for (const auto& [expected, ratio] : expected_and_ratio) {
      if (expected < floor) continue;
      ++stats.samples;
      sum += ratio;
      stats.max = std::max(stats.max, ratio);
    }
    if (stats.samples > 0) stats.mean = sum / static_cast<double>(stats.samples);
    return stats;
  }
};

void write_summary(const std::filesystem::path& path, const RunSummary& s) {
  std::ofstream out = open_output(path);
  out << "scenario,status,end_time,samples,indeterminate,ke_samples,ke_mean,ke_max,message\n";
  out << quote(s.scenario) << ',' << (s.ok ? "ok" : "failed") << ',' << format_number(s.end_time)
      << ',' << s.samples << ',' << s.indeterminate << ',' << s.ke.samples << ','
      << format_number(s.ke.mean) << ',' << format_number(s.ke.max) << ',' << quote(s.message)
      << '\n';
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string csv_header(const scene::World& world) {
  std::string out = "t";
  for (const auto& pair : scene::candidate_pairs(world)) {
    const std::string prefix = world.bodies[pair.a].name + "/" + world.bodies[pair.b].name + ":";
    for (const char* column : {"force", "volume", "v_f_dot", "delta_eff"}) {
      out += "," + quote(prefix + column);
    }
  }
  for (const auto& body : world.bodies) {
    for (const char* column : kBodyColumns) out += "," + quote(body.name + ":" + column);
  }
  out += ",expected_ke,ke_ratio";
  return out;
}

std::string csv_row(const scene::MetricsSample& sample) {
  std::string out = format_number(sample.t);
  auto add = [&out](double v) {
    out += ',';
    out += format_number(v);
  };
  for (const auto& pc : sample.pairs) {
    add(pc.force);
    add(pc.volume);
    add(pc.v_f_dot);
    add(pc.delta_eff);
  }
  for (std::size_t i = 0; i < sample.bodies.size(); ++i) {
    const auto& b = sample.bodies[i];
    for (int k = 0; k < 3; ++k) add(b.position[k]);
    add(b.orientation.w());
    add(b.orientation.x());
    add(b.orientation.y());
    add(b.orientation.z());
    for (int k = 0; k < 3; ++k) add(b.lin_vel[k]);
    for (int k = 0; k < 3; ++k) add(b.ang_vel_body[k]);
    add(sample.kinetic_energy[i]);
  }
  add(sample.expected_energy);
  add(sample.ke_ratio);
  return out;
}

RunSummary simulate(const ScenarioConfig& config, const scene::MetricsSink& sink) {
  const auto started = std::chrono::steady_clock::now();
  scene::World world = build_scenario(config);
  RunSummary summary;
  summary.scenario = config.name;
  KeTrace trace;
  const scene::MetricsSink forward = [&](const scene::MetricsSample& s) {
    ++summary.samples;
    trace.add(s, config.ke_window);
    if (sink) sink(s);
  };
  try {
    if (config.duration > 0.0) scene::step(world, config.duration, forward, true);
  } catch (const IntegrationError& err) {
    summary.ok = false;
    summary.message = err.what();
    spdlog::warn("{}: integration failed at t = {}: {}", config.name, err.time(), err.what());
  }
  summary.end_time = world.time;
  summary.indeterminate = world.indeterminate_count;
  summary.ke = trace.reduce(config.ke_window);
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return summary;
}

RunSummary run(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const scene::World world = build_scenario(config);
  std::ofstream csv = open_output(out_dir / (config.name + ".csv"));
  csv << csv_header(world) << '\n';
  spdlog::info("{}: simulating {} s", config.name, config.duration);
  const RunSummary summary =
      simulate(config, [&csv](const scene::MetricsSample& s) { csv << csv_row(s) << '\n'; });
  csv.close();
  if (!csv) throw std::runtime_error("error writing " + (out_dir / (config.name + ".csv")).string());
  write_summary(out_dir / "summary.csv", summary);
  spdlog::info("{}: {} samples in {:.2f} s wall time", config.name, summary.samples,
               summary.wall_seconds);
  return summary;
}

std::vector<SweepResult> run_sweep(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                                   unsigned jobs) {
  const std::vector<SweepCell> cells = enumerate_sweep(config);
  std::filesystem::create_directories(out_dir);
  std::vector<SweepResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepResult& r = results[i];
      r.coordinates = cells[i].coordinates;
      try {
        const RunSummary s = simulate(cells[i].config);
        r.ke = s.ke;
        r.failed = !s.ok;
        r.message = s.message;
      } catch (const std::exception& e) {
        r.failed = true;
        r.message = e.what();
      }
      const std::lock_guard lock(log_mutex);
      spdlog::info("sweep cell {}/{} {}: ke mean {:.4g} max {:.4g}{}", i + 1, cells.size(),
                   cells[i].config.name, r.ke.mean, r.ke.max, r.failed ? " (failed)" : "");
    }
  };
  const unsigned threads = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(cells.size()));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::ofstream out = open_output(out_dir / "sweep.csv");
  for (const auto& [parameter, value] : cells.front().coordinates) out << quote(parameter) << ',';
  out << "ke_samples,ke_mean,ke_max,failed,message\n";
  for (const auto& r : results) {
    for (const auto& [parameter, value] : r.coordinates) out << format_number(value) << ',';
    out << r.ke.samples << ',' << format_number(r.ke.mean) << ',' << format_number(r.ke.max) << ','
        << (r.failed ? 1 : 0) << ',' << quote(r.message) << '\n';
  }
  if (!out) throw std::runtime_error("error writing " + (out_dir / "sweep.csv").string());
  return results;
}

}  // namespace volcon::harness
