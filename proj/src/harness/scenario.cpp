#include <cmath>
#include <numbers>

#include "volcon/errors.hpp"
#include "volcon/harness.hpp"

namespace volcon::harness {

namespace {

mesh::TriMesh make_mesh(const ShapeSpec& spec) {
  switch (spec.type) {
    case ShapeType::Cuboid:
      return mesh::make_cuboid(spec.extents);
    case ShapeType::Icosphere:
      return mesh::make_icosphere(spec.radius, spec.subdivisions);
    case ShapeType::Obj: {
      // Body frames sit on the center of mass.
      mesh::TriMesh m = mesh::load_obj(spec.path);
      return mesh::transformed(m, Pose::translation(-mesh::mesh_centroid(m)));
    }
  }
  throw ConfigError({"unsupported shape type"});
}

int body_index(const ScenarioConfig& config, const std::string& name) {
  for (std::size_t i = 0; i < config.bodies.size(); ++i) {
    if (config.bodies[i].name == name) return static_cast<int>(i);
  }
  throw ConfigError({"unknown body '" + name + "'"});
}

double& sweep_target(ScenarioConfig& c, const std::string& parameter) {
  if (parameter == "g1") return c.contact.g1;
  if (parameter == "g2") return c.contact.g2;
  if (parameter == "g_i") return c.contact.g_i;
  if (parameter == "g_t") return c.contact.g_t;
  if (parameter == "d_t") return c.contact.d_t;
  if (parameter == "zeta") return c.contact.zeta;
  if (parameter == "omega_n") return c.contact.omega_n;
  if (parameter == "mu") return c.friction.mu;
  if (parameter == "beta") return c.friction.beta;
  if (parameter == "gamma") return c.friction.gamma;
  throw ConfigError({"sweep: cannot sweep '" + parameter + "'"});
}

}  // namespace

scene::World build_scenario(const ScenarioConfig& config) {
  scene::World world;
  world.contact_params = config.contact_params();
  world.friction_params = config.friction;
  world.gravity = config.gravity;
  world.options = config.integrator;

  bool any_force = false;
  for (const auto& spec : config.bodies) {
    dynamics::RigidBody body;
    body.name = spec.name;
    auto shape = std::make_shared<const mesh::ConvexShape>(make_mesh(spec.shape));
    body.mass = spec.mass;
    body.inertia = mesh::solid_inertia(shape->mesh(), spec.mass);
    body.shape = std::move(shape);
    body.position = spec.position;
    body.base_position = spec.position;
    body.orientation = spec.orientation;
    body.lin_vel = spec.velocity;
    body.ang_vel_body = spec.angular_velocity;
    switch (spec.kind) {
      case BodyKindTag::Dynamic:
        body.kind = dynamics::Dynamic{};
        break;
      case BodyKindTag::Prismatic:
        body.kind = dynamics::PrismaticAlong{
            spec.axis, spec.carrier.empty() ? -1 : body_index(config, spec.carrier),
            spec.joint_damping};
        body.ang_vel_body.setZero();
        break;
      case BodyKindTag::Static:
        body.kind = dynamics::Static{};
        break;
      case BodyKindTag::Kinematic: {
        const auto& t = spec.trajectory;
        body.kind = dynamics::Kinematic{dynamics::SinusoidTrajectory{
            t.axis, t.amplitude, 2.0 * std::numbers::pi * t.frequency, t.phase, t.start_time}};
        body.ang_vel_body.setZero();
        break;
      }
    }
    any_force = any_force || spec.applied_force.norm() > 0.0;
    world.bodies.push_back(std::move(body));
  }
  if (any_force) {
    for (const auto& spec : config.bodies) world.applied_forces.push_back(spec.applied_force);
  }
  if (config.energy_reference) {
    world.energy_reference = scene::EnergyReference{body_index(config, config.energy_reference->first),
                                                    body_index(config, config.energy_reference->second)};
  }
  world.validate();
  return world;
}

double analytic_wall_trajectory(double x0, double v0, double wall, double t) {
  const double x = x0 + v0 * t;
  // Reflect about the wall face once the free path crosses it.
  if ((v0 > 0.0 && x > wall) || (v0 < 0.0 && x < wall)) return 2.0 * wall - x;
  return x;
}

std::vector<SweepCell> enumerate_sweep(const ScenarioConfig& config) {
  if (config.sweep.empty()) throw ConfigError({"no sweep parameters"});
  std::vector<SweepCell> cells{{{}, config}};
  for (const auto& axis : config.sweep) {
    std::vector<SweepCell> next;
    next.reserve(cells.size() * axis.values.size());
    for (const auto& cell : cells) {
      for (double value : axis.values) {
        SweepCell c = cell;
        double& target = sweep_target(c.config, axis.parameter);
        target = axis.scale ? target * value : value;
        c.coordinates.emplace_back(axis.parameter, value);
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  for (auto& cell : cells) {
    cell.config.sweep.clear();
    for (const auto& [parameter, value] : cell.coordinates) {
      cell.config.name += "_" + parameter + "_" + format_number(value);
    }
  }
  return cells;
}

}  // namespace volcon::harness
