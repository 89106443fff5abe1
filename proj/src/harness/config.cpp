#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "volcon/errors.hpp"
#include "volcon/harness.hpp"

namespace volcon::harness {

namespace {

using json = nlohmann::json;

enum class Bound { Any, Positive, NonNegative };

// Collects every violation so a config can be fixed in one pass.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& message) {
    errors.push_back(path + ": " + message);
  }

  bool object(const json& node, const std::string& path) {
    if (node.is_object()) return true;
    fail(path, "must be an object");
    return false;
  }

  void allow(const json& node, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : node.items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) fail(join(path, key), "unknown key");
    }
  }

  void number(const json& node, const std::string& path, const char* key, double& out,
              Bound bound = Bound::Any, bool required = false) {
    const std::string where = join(path, key);
    if (!node.contains(key)) {
      if (required) fail(where, "is required");
      return;
    }
    const json& v = node.at(key);
    if (!v.is_number()) {
      fail(where, "must be a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      fail(where, "must be finite");
    } else if (bound == Bound::Positive && !(x > 0.0)) {
      fail(where, "must be strictly positive");
    } else if (bound == Bound::NonNegative && x < 0.0) {
      fail(where, "must be non-negative");
    }
    out = x;
  }

  void vec3(const json& node, const std::string& path, const char* key, Vec3& out) {
    if (!node.contains(key)) return;
    const json& v = node.at(key);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
        !v[2].is_number()) {
      fail(join(path, key), "must be an array of 3 numbers");
      return;
    }
    out = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  }

  void text(const json& node, const std::string& path, const char* key, std::string& out,
            bool required = false) {
    if (!node.contains(key)) {
      if (required) fail(join(path, key), "is required");
      return;
    }
    if (!node.at(key).is_string()) {
      fail(join(path, key), "must be a string");
      return;
    }
    out = node.at(key).get<std::string>();
  }

  void flag(const json& node, const std::string& path, const char* key, bool& out) {
    if (!node.contains(key)) return;
    if (!node.at(key).is_boolean()) {
      fail(join(path, key), "must be true or false");
      return;
    }
    out = node.at(key).get<bool>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

// Names end up in file names and CSV column headers.
bool valid_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  });
}

const std::set<std::string> kSweepParameters = {"g1",   "g2",      "g_i", "g_t",  "d_t",
                                                "zeta", "omega_n", "mu",  "beta", "gamma"};

void read_contact(Reader& r, const json& node, ScenarioConfig& c) {
  const std::string path = "contact";
  if (!r.object(node, path)) return;
  r.allow(node, path,
          {"g1", "g2", "g_i", "g_t", "d_t", "zeta", "omega_n", "units", "reference_area",
           "direction"});
  std::string units = "per_cm";
  r.text(node, path, "units", units);
  if (units == "si") {
    c.gain_units = GainUnits::Si;
  } else if (units == "per_cm") {
    c.gain_units = GainUnits::PerCm;
  } else {
    r.fail(path + ".units", "must be \"si\" or \"per_cm\"");
  }
  const bool si = c.gain_units == GainUnits::Si;
  r.number(node, path, "g1", c.contact.g1, Bound::Positive, si);
  r.number(node, path, "g2", c.contact.g2, Bound::Positive, si);
  r.number(node, path, "g_i", c.contact.g_i, Bound::Positive);
  r.number(node, path, "g_t", c.contact.g_t, Bound::Positive);
  r.number(node, path, "d_t", c.contact.d_t, Bound::Positive);
  r.number(node, path, "zeta", c.contact.zeta, Bound::Positive);
  r.number(node, path, "omega_n", c.contact.omega_n, Bound::Positive);
  r.number(node, path, "reference_area", c.reference_area, Bound::Positive);
  std::string direction = "centroid_to_contact";
  r.text(node, path, "direction", direction);
  if (direction == "centroid_to_contact") {
    c.integrator.direction_mode = mesh::DirectionMode::CentroidToContact;
  } else if (direction == "face_normal") {
    c.integrator.direction_mode = mesh::DirectionMode::FaceNormal;
  } else {
    r.fail(path + ".direction", "must be \"centroid_to_contact\" or \"face_normal\"");
  }
}

void read_shape(Reader& r, const json& node, const std::string& path,
                const std::filesystem::path& base_dir, ShapeSpec& s) {
  if (!r.object(node, path)) return;
  std::string type;
  r.text(node, path, "type", type, true);
  if (type == "cuboid") {
    r.allow(node, path, {"type", "extents"});
    s.type = ShapeType::Cuboid;
    if (!node.contains("extents")) r.fail(path + ".extents", "is required");
    r.vec3(node, path, "extents", s.extents);
    if ((s.extents.array() <= 0.0).any()) r.fail(path + ".extents", "must be strictly positive");
  } else if (type == "icosphere") {
    r.allow(node, path, {"type", "radius", "subdivisions"});
    s.type = ShapeType::Icosphere;
    r.number(node, path, "radius", s.radius, Bound::Positive, true);
    double sub = s.subdivisions;
    r.number(node, path, "subdivisions", sub, Bound::NonNegative);
    if (sub != std::floor(sub) || sub > 6) {
      r.fail(path + ".subdivisions", "must be an integer between 0 and 6");
    }
    s.subdivisions = static_cast<int>(sub);
  } else if (type == "obj") {
    r.allow(node, path, {"type", "path"});
    s.type = ShapeType::Obj;
    std::string file;
    r.text(node, path, "path", file, true);
    if (!file.empty()) {
      s.path = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : base_dir / file;
      if (!std::filesystem::exists(s.path)) {
        r.fail(path + ".path", "missing mesh file " + s.path.string());
      } else {
        try {
          mesh::ConvexShape check(mesh::load_obj(s.path));
        } catch (const MeshError& e) {
          r.fail(path + ".path", e.what());
        }
      }
    }
  } else if (!type.empty()) {
    r.fail(path + ".type", "must be \"cuboid\", \"icosphere\" or \"obj\"");
  }
}

void read_body(Reader& r, const json& node, const std::string& path,
               const std::filesystem::path& base_dir, BodySpec& b) {
  if (!r.object(node, path)) return;
  r.allow(node, path,
          {"name", "shape", "kind", "mass", "position", "orientation", "velocity",
           "angular_velocity", "axis", "carrier", "joint_damping", "trajectory", "applied_force"});
  r.text(node, path, "name", b.name, true);
  if (node.contains("name") && !valid_name(b.name)) {
    r.fail(path + ".name", "must use only letters, digits, '_', '-' and '.'");
  }
  if (node.contains("shape")) {
    read_shape(r, node.at("shape"), path + ".shape", base_dir, b.shape);
  } else {
    r.fail(path + ".shape", "is required");
  }

  std::string kind = "dynamic";
  r.text(node, path, "kind", kind);
  if (kind == "dynamic") {
    b.kind = BodyKindTag::Dynamic;
  } else if (kind == "prismatic") {
    b.kind = BodyKindTag::Prismatic;
  } else if (kind == "static") {
    b.kind = BodyKindTag::Static;
  } else if (kind == "kinematic") {
    b.kind = BodyKindTag::Kinematic;
  } else {
    r.fail(path + ".kind", "must be dynamic, prismatic, static or kinematic");
  }
  const bool moving = b.kind == BodyKindTag::Dynamic || b.kind == BodyKindTag::Prismatic;
  r.number(node, path, "mass", b.mass, Bound::Positive, moving);

  r.vec3(node, path, "position", b.position);
  if (node.contains("orientation")) {
    const json& q = node.at("orientation");
    if (!q.is_array() || q.size() != 4 || !std::all_of(q.begin(), q.end(), [](const json& x) {
          return x.is_number();
        })) {
      r.fail(path + ".orientation", "must be an array of 4 numbers [w, x, y, z]");
    } else {
      const Quat raw = quat_wxyz(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                 q[3].get<double>());
      if (!(raw.norm() > 0.0)) {
        r.fail(path + ".orientation", "must be non-zero");
      } else {
        b.orientation = raw.normalized();
      }
    }
  }
  r.vec3(node, path, "velocity", b.velocity);
  r.vec3(node, path, "angular_velocity", b.angular_velocity);
  r.vec3(node, path, "applied_force", b.applied_force);
  if (b.kind == BodyKindTag::Static &&
      (b.velocity.norm() > 0.0 || b.angular_velocity.norm() > 0.0)) {
    r.fail(path, "static bodies cannot have a velocity");
  }

  if (b.kind == BodyKindTag::Prismatic) {
    r.vec3(node, path, "axis", b.axis);
    if (!(b.axis.norm() > 0.0)) {
      r.fail(path + ".axis", "must be non-zero");
    } else {
      b.axis.normalize();
    }
    r.text(node, path, "carrier", b.carrier);
    r.number(node, path, "joint_damping", b.joint_damping, Bound::NonNegative);
  } else {
    for (const char* key : {"axis", "carrier", "joint_damping"}) {
      if (node.contains(key)) r.fail(Reader::join(path, key), "only applies to prismatic bodies");
    }
  }

  if (b.kind == BodyKindTag::Kinematic) {
    if (!node.contains("trajectory")) {
      r.fail(path + ".trajectory", "is required for kinematic bodies");
    } else if (const json& t = node.at("trajectory"); r.object(t, path + ".trajectory")) {
      const std::string tp = path + ".trajectory";
      r.allow(t, tp, {"axis", "amplitude", "frequency", "phase", "start_time"});
      r.vec3(t, tp, "axis", b.trajectory.axis);
      if (!(b.trajectory.axis.norm() > 0.0)) {
        r.fail(tp + ".axis", "must be non-zero");
      } else {
        b.trajectory.axis.normalize();
      }
      r.number(t, tp, "amplitude", b.trajectory.amplitude, Bound::NonNegative, true);
      r.number(t, tp, "frequency", b.trajectory.frequency, Bound::NonNegative, true);
      r.number(t, tp, "phase", b.trajectory.phase);
      r.number(t, tp, "start_time", b.trajectory.start_time, Bound::NonNegative);
    }
  } else if (node.contains("trajectory")) {
    r.fail(path + ".trajectory", "only applies to kinematic bodies");
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

contact::ContactParams ScenarioConfig::contact_params() const {
  contact::ContactParams p = contact;
  if (gain_units == GainUnits::PerCm) {
    // N/cm and N s/cm per unit of contact area become N/m^3 and N s/m^3.
    p.g1 = contact.g1 * 100.0 / reference_area;
    p.g2 = contact.g2 * 100.0 / reference_area;
  }
  return p;
}

ScenarioConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }

  Reader r;
  ScenarioConfig c;
  // Baseline gains in the units of the published parameter list.
  c.contact.g1 = 740.0;
  c.contact.g2 = 50.0;
  c.contact.g_i = 250.0;
  c.contact.g_t = 1.0;
  c.contact.d_t = 0.002;
  c.gain_units = GainUnits::PerCm;
  c.friction = {0.2, 0.2, 1.0};

  if (!r.object(root, "config")) throw ConfigError(r.errors);
  r.allow(root, "",
          {"name", "duration", "seed", "output_step", "gravity", "integrator", "contact",
           "friction", "bodies", "energy_reference", "ke_window", "sweep"});
  r.text(root, "", "name", c.name, true);
  if (root.contains("name") && !valid_name(c.name)) {
    r.fail("name", "must use only letters, digits, '_', '-' and '.'");
  }
  r.number(root, "", "duration", c.duration, Bound::NonNegative, true);
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned()) {
      r.fail("seed", "must be a non-negative integer");
    } else {
      c.seed = root.at("seed").get<std::uint64_t>();
    }
  }
  r.number(root, "", "output_step", c.integrator.output_step, Bound::Positive);
  r.vec3(root, "", "gravity", c.gravity);

  if (root.contains("integrator")) {
    const json& node = root.at("integrator");
    if (r.object(node, "integrator")) {
      r.allow(node, "integrator", {"rel_tol", "abs_tol", "h_max", "frozen_geometry"});
      r.number(node, "integrator", "rel_tol", c.integrator.rel_tol, Bound::Positive);
      r.number(node, "integrator", "abs_tol", c.integrator.abs_tol, Bound::Positive);
      r.number(node, "integrator", "h_max", c.integrator.h_max, Bound::Positive);
      r.flag(node, "integrator", "frozen_geometry", c.integrator.frozen_geometry);
    }
  }
  if (root.contains("contact")) read_contact(r, root.at("contact"), c);
  if (root.contains("friction")) {
    const json& node = root.at("friction");
    if (r.object(node, "friction")) {
      r.allow(node, "friction", {"mu", "beta", "gamma"});
      r.number(node, "friction", "mu", c.friction.mu, Bound::NonNegative);
      r.number(node, "friction", "beta", c.friction.beta, Bound::NonNegative);
      r.number(node, "friction", "gamma", c.friction.gamma, Bound::Positive);
    }
  }

  if (!root.contains("bodies")) {
    r.fail("bodies", "is required");
  } else if (!root.at("bodies").is_array() || root.at("bodies").empty()) {
    r.fail("bodies", "must be a non-empty array");
  } else {
    const json& bodies = root.at("bodies");
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      BodySpec b;
      read_body(r, bodies[i], "bodies[" + std::to_string(i) + "]", base_dir, b);
      c.bodies.push_back(std::move(b));
    }
  }

  auto find_body = [&](const std::string& name) -> const BodySpec* {
    for (const auto& b : c.bodies) {
      if (b.name == name) return &b;
    }
    return nullptr;
  };
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.bodies.size(); ++i) {
    const auto& b = c.bodies[i];
    const std::string path = "bodies[" + std::to_string(i) + "]";
    if (!b.name.empty() && !names.insert(b.name).second) r.fail(path + ".name", "duplicate body name");
    if (!b.carrier.empty()) {
      const BodySpec* carrier = find_body(b.carrier);
      if (!carrier) {
        r.fail(path + ".carrier", "unknown body '" + b.carrier + "'");
      } else if (carrier->kind != BodyKindTag::Static && carrier->kind != BodyKindTag::Kinematic) {
        r.fail(path + ".carrier", "must be a static or kinematic body");
      }
    }
  }

  if (root.contains("energy_reference")) {
    const json& node = root.at("energy_reference");
    if (r.object(node, "energy_reference")) {
      r.allow(node, "energy_reference", {"object", "reference"});
      std::string object, reference;
      r.text(node, "energy_reference", "object", object, true);
      r.text(node, "energy_reference", "reference", reference, true);
      if (!object.empty() && !find_body(object)) {
        r.fail("energy_reference.object", "unknown body '" + object + "'");
      }
      if (!reference.empty()) {
        const BodySpec* ref = find_body(reference);
        if (!ref) {
          r.fail("energy_reference.reference", "unknown body '" + reference + "'");
        } else if (ref->kind != BodyKindTag::Kinematic) {
          r.fail("energy_reference.reference", "must be a kinematic body");
        }
      }
      c.energy_reference = {object, reference};
    }
  }
  if (root.contains("ke_window")) {
    const json& node = root.at("ke_window");
    if (r.object(node, "ke_window")) {
      r.allow(node, "ke_window", {"start", "min_expected_fraction"});
      r.number(node, "ke_window", "start", c.ke_window.start, Bound::NonNegative);
      r.number(node, "ke_window", "min_expected_fraction", c.ke_window.min_expected_fraction,
               Bound::NonNegative);
    }
  }

  if (root.contains("sweep")) {
    const json& sweep = root.at("sweep");
    if (!sweep.is_array()) {
      r.fail("sweep", "must be an array of axes");
    } else {
      for (std::size_t i = 0; i < sweep.size(); ++i) {
        const std::string path = "sweep[" + std::to_string(i) + "]";
        const json& node = sweep[i];
        if (!r.object(node, path)) continue;
        r.allow(node, path, {"parameter", "values", "scale"});
        SweepAxis axis;
        r.text(node, path, "parameter", axis.parameter, true);
        if (!axis.parameter.empty() && !kSweepParameters.count(axis.parameter)) {
          r.fail(path + ".parameter", "cannot sweep '" + axis.parameter + "'");
        }
        const bool has_values = node.contains("values");
        const bool has_scale = node.contains("scale");
        if (has_values == has_scale) {
          r.fail(path, "needs exactly one of \"values\" or \"scale\"");
          continue;
        }
        axis.scale = has_scale;
        const json& list = node.at(has_scale ? "scale" : "values");
        if (!list.is_array() || list.empty()) {
          r.fail(path, "value list must be a non-empty array");
          continue;
        }
        for (const auto& v : list) {
          if (!v.is_number() || !(v.get<double>() > 0.0)) {
            r.fail(path, "values must be strictly positive numbers");
            break;
          }
          axis.values.push_back(v.get<double>());
        }
        c.sweep.push_back(std::move(axis));
      }
    }
  }

  if (!r.errors.empty()) throw ConfigError(r.errors);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open configuration"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

}  // namespace volcon::harness
