#include <algorithm>
#include <cmath>
#include <string>

#include "volcon/errors.hpp"
#include "volcon/scene.hpp"

namespace volcon::scene {

using contact::BodyPair;
using contact::Wrench;
using dynamics::RigidBody;
using dynamics::State;

namespace {

//! Pose and velocity field of every body at one evaluation.
struct Snapshot {
  Pose pose;
  contact::VelocityField field;
};

std::vector<int> state_slots(const World& world) {
  std::vector<int> slots(world.bodies.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < world.bodies.size(); ++i) {
    if (world.bodies[i].integrated()) {
      slots[i] = next;
      next += kBodyStateSize;
    }
  }
  return slots;
}

int episode_offset(const std::vector<int>& slots) {
  int n = 0;
  for (int s : slots) n += s >= 0 ? 1 : 0;
  return n * kBodyStateSize;
}

Quat read_quat(const State& y, int s) {
  return Quat(y[s + 3], y[s + 4], y[s + 5], y[s + 6]);
}

std::vector<Snapshot> resolve_bodies(const World& world, const std::vector<int>& slots,
                                     const State& y, double t) {
  std::vector<Snapshot> out(world.bodies.size());
  for (std::size_t i = 0; i < world.bodies.size(); ++i) {
    const RigidBody& b = world.bodies[i];
    Snapshot& s = out[i];
    if (const int k = slots[i]; k >= 0) {
      s.pose.position = y.segment<3>(k);
      s.pose.orientation = read_quat(y, k).normalized();
      s.field = {s.pose.position, y.segment<3>(k + 7), s.pose.orientation * Vec3(y.segment<3>(k + 10))};
    } else if (const auto* kin = std::get_if<dynamics::Kinematic>(&b.kind)) {
      s.pose = {b.base_position + kin->trajectory.offset(t), b.orientation};
      s.field = {s.pose.position, kin->trajectory.velocity(t), Vec3::Zero()};
    } else {
      s.pose = b.pose();
      s.field = {b.position, Vec3::Zero(), Vec3::Zero()};
    }
  }
  return out;
}

void sync_kinematic(World& world) {
  for (auto& b : world.bodies) {
    if (const auto* kin = std::get_if<dynamics::Kinematic>(&b.kind)) {
      b.position = b.base_position + kin->trajectory.offset(world.time);
      b.lin_vel = kin->trajectory.velocity(world.time);
    }
  }
}

std::optional<mesh::OverlapResult> overlap_at(const World& world, const BodyPair& pair,
                                              const std::vector<Snapshot>& snaps,
                                              std::size_t& indeterminate) {
  const auto& a = world.bodies[pair.a];
  const auto& b = world.bodies[pair.b];
  try {
    return mesh::characterize_overlap(*a.shape, snaps[pair.a].pose, *b.shape, snaps[pair.b].pose,
                                      world.options.direction_mode);
  } catch (const IndeterminateDirection&) {
    ++indeterminate;
    return std::nullopt;
  }
}

std::string pair_list(const World& world) {
  std::string out;
  for (const auto& [pair, episode] : world.episodes) {
    if (!out.empty()) out += ", ";
    out += world.bodies[pair.a].name + "/" + world.bodies[pair.b].name;
  }
  return out.empty() ? "none" : out;
}

}  // namespace

void World::validate() const {
  contact_params.validate();
  friction_params.validate();
  if (!applied_forces.empty() && applied_forces.size() != bodies.size()) {
    throw ParameterError("applied forces must list one entry per body");
  }
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0) || !(options.h_max > 0.0) ||
      !(options.output_step > 0.0)) {
    throw ParameterError("integrator tolerances, h_max and output_step must be strictly positive");
  }
  for (const auto& b : bodies) {
    b.validate();
    if (const auto* p = std::get_if<dynamics::PrismaticAlong>(&b.kind); p && p->carrier >= 0) {
      if (p->carrier >= static_cast<int>(bodies.size()) || bodies[p->carrier].integrated()) {
        throw ParameterError("body '" + b.name + "': carrier must be a static or kinematic body");
      }
    }
  }
  if (energy_reference) {
    const int n = static_cast<int>(bodies.size());
    const auto& r = *energy_reference;
    if (r.object < 0 || r.object >= n || r.reference < 0 || r.reference >= n ||
        !std::holds_alternative<dynamics::Kinematic>(bodies[r.reference].kind)) {
      throw ParameterError("energy reference must name a body and a kinematic reference body");
    }
  }
}

std::vector<BodyPair> candidate_pairs(const World& world) {
  std::vector<BodyPair> out;
  const int n = static_cast<int>(world.bodies.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (world.bodies[i].integrated() || world.bodies[j].integrated()) out.push_back({i, j});
    }
  }
  return out;
}

std::vector<BodyPair> detect_pairs(const World& world) {
  std::vector<mesh::Aabb> boxes;
  boxes.reserve(world.bodies.size());
  for (const auto& b : world.bodies) boxes.push_back(mesh::compute_aabb(b.shape->mesh(), b.pose()));
  std::vector<BodyPair> out;
  for (const auto& pair : candidate_pairs(world)) {
    if (mesh::aabb_overlap(boxes[pair.a], boxes[pair.b])) out.push_back(pair);
  }
  return out;
}

State pack_state(const World& world) {
  const auto slots = state_slots(world);
  const int offset = episode_offset(slots);
  State y(offset + 2 * static_cast<int>(world.episodes.size()));
  for (std::size_t i = 0; i < world.bodies.size(); ++i) {
    const int k = slots[i];
    if (k < 0) continue;
    const RigidBody& b = world.bodies[i];
    y.segment<3>(k) = b.position;
    y[k + 3] = b.orientation.w();
    y[k + 4] = b.orientation.x();
    y[k + 5] = b.orientation.y();
    y[k + 6] = b.orientation.z();
    y.segment<3>(k + 7) = b.lin_vel;
    y.segment<3>(k + 10) = b.ang_vel_body;
  }
  int e = offset;
  for (const auto& [pair, episode] : world.episodes) {
    y[e++] = episode.filter.v_f;
    y[e++] = episode.filter.v_f_dot;
  }
  return y;
}

void unpack_state(World& world, const State& y) {
  const auto slots = state_slots(world);
  for (std::size_t i = 0; i < world.bodies.size(); ++i) {
    const int k = slots[i];
    if (k < 0) continue;
    RigidBody& b = world.bodies[i];
    b.position = y.segment<3>(k);
    b.orientation = read_quat(y, k);
    b.lin_vel = y.segment<3>(k + 7);
    b.ang_vel_body = y.segment<3>(k + 10);
  }
  int e = episode_offset(slots);
  for (auto& [pair, episode] : world.episodes) {
    episode.filter.v_f = y[e++];
    episode.filter.v_f_dot = y[e++];
  }
}

Efforts assemble_efforts(const World& world, const State& y, double t,
                         const std::vector<std::optional<mesh::OverlapResult>>* frozen) {
  const auto slots = state_slots(world);
  const auto snaps = resolve_bodies(world, slots, y, t);
  const std::size_t n = world.bodies.size();

  Efforts out;
  out.wrenches.assign(n, Wrench{});
  out.contact_wrenches.assign(n, Wrench{});
  out.filter_inputs.assign(world.episodes.size(), 0.0);
  out.contacts.resize(world.episodes.size());

  int e = episode_offset(slots);
  std::size_t index = 0;
  for (const auto& [pair, episode] : world.episodes) {
    PairContact& pc = out.contacts[index];
    pc.pair = pair;
    const contact::FilterState filter{y[e], y[e + 1]};
    pc.v_f_dot = filter.v_f_dot;
    e += 2;

    const auto overlap = frozen ? (*frozen)[index] : overlap_at(world, pair, snaps, out.indeterminate);
    if (!overlap) {
      ++index;
      continue;
    }
    const RigidBody& a = world.bodies[pair.a];
    const RigidBody& b = world.bodies[pair.b];
    const Vec3& p_a = snaps[pair.a].pose.position;
    const Vec3& p_b = snaps[pair.b].pose.position;

    const double delta = contact::transient_gain(t, episode, world.contact_params,
                                                 a.impact_mass(), b.impact_mass());
    const Wrench on_a =
        contact::reaction_wrench(*overlap, filter, delta, world.contact_params, p_a);
    const Vec3 v_r = snaps[pair.a].field.at(overlap->c) - snaps[pair.b].field.at(overlap->c);
    const Vec3 friction = contact::friction_force(on_a.force, v_r, world.friction_params);
    const Vec3 f_a = on_a.force + friction;

    out.contact_wrenches[pair.a] += Wrench{f_a, (overlap->c - p_a).cross(f_a)};
    out.contact_wrenches[pair.b] += Wrench{-f_a, (overlap->c - p_b).cross(-f_a)};

    out.filter_inputs[index] = overlap->v;
    pc.touching = true;
    pc.force = on_a.force.norm();
    pc.volume = overlap->v;
    pc.delta_eff = delta;
    pc.point = overlap->c;
    pc.direction = overlap->s_n;
    ++index;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const RigidBody& b = world.bodies[i];
    if (!b.integrated()) continue;
    Wrench& w = out.wrenches[i];
    w = out.contact_wrenches[i];
    w.force += b.mass * world.gravity;
    if (!world.applied_forces.empty()) w.force += world.applied_forces[i];
  }
  return out;
}

std::size_t state_derivative(const World& world, const State& y, double t, State& dydt,
                      const std::vector<std::optional<mesh::OverlapResult>>* frozen) {
  const Efforts efforts = assemble_efforts(world, y, t, frozen);
  const auto slots = state_slots(world);
  dydt.setZero(y.size());
  for (std::size_t i = 0; i < world.bodies.size(); ++i) {
    const int k = slots[i];
    if (k < 0) continue;
    const RigidBody& body = world.bodies[i];
    const Quat q = read_quat(y, k);
    const Vec3 v = y.segment<3>(k + 7);
    const Vec3 w = y.segment<3>(k + 10);

    RigidBody current = body;
    current.ang_vel_body = w;
    Wrench local = efforts.wrenches[i];
    local.torque = q.normalized().conjugate() * local.torque;
    dynamics::Acceleration acc = dynamics::equations_of_motion(current, local);

    if (const auto* p = std::get_if<dynamics::PrismaticAlong>(&body.kind)) {
      Vec3 carrier_vel = Vec3::Zero();
      Vec3 carrier_acc = Vec3::Zero();
      if (p->carrier >= 0) {
        if (const auto* kin = std::get_if<dynamics::Kinematic>(&world.bodies[p->carrier].kind)) {
          carrier_vel = kin->trajectory.velocity(t);
          carrier_acc = kin->trajectory.acceleration(t);
        }
      }
      const double slip = (v - carrier_vel).dot(p->axis);
      acc.linear += p->axis * (-p->damping * slip / body.mass);
      acc.linear += carrier_acc - p->axis * carrier_acc.dot(p->axis);
    }

    dydt.segment<3>(k) = v;
    const Quat qdot = dynamics::quaternion_rate(q, w);
    dydt[k + 3] = qdot.w();
    dydt[k + 4] = qdot.x();
    dydt[k + 5] = qdot.y();
    dydt[k + 6] = qdot.z();
    dydt.segment<3>(k + 7) = acc.linear;
    dydt.segment<3>(k + 10) = acc.angular_body;
  }
  int e = episode_offset(slots);
  for (std::size_t index = 0; index < world.episodes.size(); ++index, e += 2) {
    const auto d = contact::filter_rhs({y[e], y[e + 1]}, efforts.filter_inputs[index],
                                       world.contact_params.zeta, world.contact_params.omega_n);
    dydt[e] = d.d_v_f;
    dydt[e + 1] = d.d_v_f_dot;
  }
  return efforts.indeterminate;
}

MetricsSample sample_metrics(const World& world) {
  MetricsSample s;
  s.t = world.time;
  const Efforts efforts = assemble_efforts(world, pack_state(world), world.time);
  for (const auto& pair : candidate_pairs(world)) {
    PairContact pc;
    pc.pair = pair;
    for (const auto& c : efforts.contacts) {
      if (c.pair == pair) pc = c;
    }
    s.pairs.push_back(pc);
  }
  for (const auto& b : world.bodies) {
    s.kinetic_energy.push_back(std::holds_alternative<dynamics::Static>(b.kind)
                                   ? 0.0
                                   : dynamics::kinetic_energy(b));
  }
  s.bodies = world.bodies;
  if (world.energy_reference) {
    const auto& r = *world.energy_reference;
    const auto& ref = std::get<dynamics::Kinematic>(world.bodies[r.reference].kind);
    s.expected_energy = expected_energy(ref.trajectory, world.bodies[r.object].mass, world.time);
    s.ke_ratio = kinetic_energy_ratio(s.kinetic_energy[r.object], s.expected_energy);
  }
  return s;
}

void step(World& world, double t_end, const MetricsSink& sink, bool emit_initial) {
  world.validate();
  sync_kinematic(world);
  if (emit_initial && sink) sink(sample_metrics(world));
  if (t_end <= world.time) return;

  const StepOptions& opt = world.options;
  // Output instants are multiples of output_step, counted to avoid accumulated drift.
  const double grid_tol = 1e-9 * opt.output_step;
  long long next_output = static_cast<long long>(std::floor(world.time / opt.output_step + 1e-9)) + 1;

  while (world.time < t_end) {
    // Contact events at the boundary.
    std::vector<contact::DetectedOverlap> detected;
    std::vector<Snapshot> snaps;
    {
      const auto slots = state_slots(world);
      snaps = resolve_bodies(world, slots, pack_state(world), world.time);
    }
    for (const auto& pair : detect_pairs(world)) {
      const auto& a = world.bodies[pair.a];
      const auto& b = world.bodies[pair.b];
      try {
        const auto ov = mesh::characterize_overlap(*a.shape, snaps[pair.a].pose, *b.shape,
                                                   snaps[pair.b].pose, opt.direction_mode);
        if (!ov) continue;
        detected.push_back({pair, ov->v,
                            contact::relative_contact_speed(snaps[pair.a].field, snaps[pair.b].field,
                                                            ov->c, ov->s_n)});
      } catch (const IndeterminateDirection&) {
        // Coincident bodies: the episode opens without a measurable approach speed.
        const auto inter = mesh::boolean_intersect(*a.shape, snaps[pair.a].pose, *b.shape,
                                                   snaps[pair.b].pose);
        if (inter) detected.push_back({pair, mesh::volume_moments(*inter).volume, 0.0});
        ++world.indeterminate_count;
      }
    }
    world.episodes = contact::update_episodes(world.episodes, detected, world.time);

    const double output_time = static_cast<double>(next_output) * opt.output_step;
    double t_next = std::min(world.time + opt.h_max, t_end);
    bool emit = false;
    if (output_time <= t_next + grid_tol) {
      t_next = std::min(output_time, t_end);
      emit = std::abs(t_next - output_time) <= grid_tol;
    }

    std::vector<std::optional<mesh::OverlapResult>> frozen;
    if (opt.frozen_geometry) {
      std::size_t skipped = 0;
      for (const auto& [pair, episode] : world.episodes) {
        frozen.push_back(overlap_at(world, pair, snaps, skipped));
      }
      world.indeterminate_count += skipped;
    }
    const auto* frozen_ptr = opt.frozen_geometry ? &frozen : nullptr;

    std::size_t skipped = 0;
    const dynamics::Rhs rhs = [&](double t, const State& y, State& dydt) {
      skipped += state_derivative(world, y, t, dydt, frozen_ptr);
    };
    dynamics::Rk45Options ro;
    ro.rel_tol = opt.rel_tol;
    ro.abs_tol = opt.abs_tol;
    ro.h_max = opt.h_max;
    ro.h_initial = world.h_next;
    ro.record_steps = false;
    const auto slots = state_slots(world);
    ro.post_step = [&slots](State& y) {
      for (int k : slots) {
        if (k < 0) continue;
        const Quat q = dynamics::renormalize(read_quat(y, k));
        y[k + 3] = q.w();
        y[k + 4] = q.x();
        y[k + 5] = q.y();
        y[k + 6] = q.z();
      }
    };

    dynamics::Rk45Result result;
    try {
      result = dynamics::rk45_integrate(rhs, pack_state(world), world.time, t_next, ro);
    } catch (const IntegrationError& err) {
      throw IntegrationError(std::string(err.what()) + " (contact pairs: " + pair_list(world) + ")",
                             err.time());
    }
    unpack_state(world, result.final_state());
    world.indeterminate_count += skipped;
    world.time = t_next;
    world.h_next = result.h_next;
    sync_kinematic(world);

    if (emit) {
      ++next_output;
      if (sink) sink(sample_metrics(world));
    }
  }
}

double kinetic_energy_ratio(double measured, double expected) {
  constexpr double kZeroEnergy = 1e-12;
  if (expected < kZeroEnergy) {
    return measured < kZeroEnergy ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return measured / expected;
}

double expected_energy(const dynamics::SinusoidTrajectory& trajectory, double mass, double t) {
  return 0.5 * mass * trajectory.velocity(t).squaredNorm();
}

}  // namespace volcon::scene
