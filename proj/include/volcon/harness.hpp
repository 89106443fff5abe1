#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "volcon/contact.hpp"
#include "volcon/scene.hpp"

namespace volcon::harness {

//! Invalid scenario configuration; lists every violation found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

enum class ShapeType { Cuboid, Icosphere, Obj };

struct ShapeSpec {
  ShapeType type = ShapeType::Cuboid;
  Vec3 extents = Vec3::Ones();  //!< cuboid full edge lengths [m]
  double radius = 0.0;          //!< icosphere [m]
  int subdivisions = 2;         //!< icosphere
  std::filesystem::path path;   //!< obj, resolved against the config directory
};

enum class BodyKindTag { Dynamic, Prismatic, Static, Kinematic };

struct TrajectorySpec {
  Vec3 axis = Vec3::UnitZ();
  double amplitude = 0.0;  //!< [m]
  double frequency = 0.0;  //!< [Hz]
  double phase = 0.0;      //!< [rad]
  double start_time = 0.0;
};

struct BodySpec {
  std::string name;
  ShapeSpec shape;
  BodyKindTag kind = BodyKindTag::Dynamic;
  double mass = 1.0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();  //!< body frame
  Vec3 axis = Vec3::UnitX();             //!< prismatic
  std::string carrier;                   //!< prismatic, optional body name
  double joint_damping = 0.0;            //!< prismatic [N s/m]
  TrajectorySpec trajectory;             //!< kinematic
  Vec3 applied_force = Vec3::Zero();     //!< [N]
};

//! One sweep dimension: either absolute values or multipliers of the base value.
struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
  bool scale = false;
};

//! Samples that enter the kinetic-energy ratio statistics.
struct KeWindow {
  double start = 0.0;                   //!< ignore samples before this time [s]
  double min_expected_fraction = 0.1;   //!< ignore samples whose expected energy is below this share of its peak
};

enum class GainUnits { Si, PerCm };

struct ScenarioConfig {
  std::string name;
  double duration = 1.0;
  std::uint64_t seed = 0;
  scene::StepOptions integrator;
  Vec3 gravity{0.0, 0.0, -9.81};
  //! Gains as written in the file; see contact_params() for SI values.
  contact::ContactParams contact;
  GainUnits gain_units = GainUnits::Si;
  double reference_area = 2.5e-3;  //!< [m^2], converts per-length gains to per-volume
  contact::FrictionParams friction;
  std::vector<BodySpec> bodies;
  std::optional<std::pair<std::string, std::string>> energy_reference;  //!< (object, reference)
  KeWindow ke_window;
  std::vector<SweepAxis> sweep;

  //! Contact parameters in SI units.
  contact::ContactParams contact_params() const;
};

//! Parses and validates a JSON scenario. Relative mesh paths resolve against `base_dir`.
//! Throws ConfigError listing every problem.
ScenarioConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

//! Builds the world described by a validated configuration.
scene::World build_scenario(const ScenarioConfig& config);

//! Ideal elastic reflection of a point moving along one axis toward a wall.
double analytic_wall_trajectory(double x0, double v0, double wall, double t);

struct SweepCell {
  std::vector<std::pair<std::string, double>> coordinates;  //!< parameter, value as written
  ScenarioConfig config;
};

//! Cartesian product of the sweep axes, first axis slowest. Throws ConfigError
//! when the configuration has no sweep.
std::vector<SweepCell> enumerate_sweep(const ScenarioConfig& config);

//! Kinetic-energy ratio statistics over the configured window.
struct KeStats {
  std::size_t samples = 0;
  double mean = 0.0;
  double max = 0.0;
};

struct RunSummary {
  std::string scenario;
  bool ok = true;
  std::string message;
  double end_time = 0.0;
  std::size_t samples = 0;
  std::size_t indeterminate = 0;
  KeStats ke;
  double wall_seconds = 0.0;  //!< not written to CSV, which must be reproducible
};

//! Runs a scenario in memory, forwarding every sample. Integration failures are
//! caught and reported in the summary.
RunSummary simulate(const ScenarioConfig& config, const scene::MetricsSink& sink = {});

//! Header and row of the time-series CSV.
std::string csv_header(const scene::World& world);
std::string csv_row(const scene::MetricsSample& sample);

//! Writes <out>/<name>.csv and <out>/summary.csv.
RunSummary run(const ScenarioConfig& config, const std::filesystem::path& out_dir);

struct SweepResult {
  std::vector<std::pair<std::string, double>> coordinates;
  KeStats ke;
  bool failed = false;
  std::string message;
};

//! Runs every cell on up to `jobs` threads and writes <out>/sweep.csv.
std::vector<SweepResult> run_sweep(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                                   unsigned jobs = 1);

//! Formats a double with the shortest round-trip representation.
std::string format_number(double value);

}  // namespace volcon::harness
