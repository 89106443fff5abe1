#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "volcon/errors.hpp"
#include "volcon/scene.hpp"

using namespace volcon;
using namespace volcon::scene;
using dynamics::RigidBody;

namespace {

const double kCubeEdge = 0.05;

std::shared_ptr<const mesh::ConvexShape> cube_shape(double edge = kCubeEdge) {
  return std::make_shared<const mesh::ConvexShape>(mesh::make_cuboid(Vec3::Constant(edge)));
}

RigidBody make_body(const std::string& name, dynamics::BodyKind kind, const Vec3& position,
                    std::shared_ptr<const mesh::ConvexShape> shape = cube_shape()) {
  RigidBody b;
  b.name = name;
  b.mass = 0.2;
  b.inertia = mesh::solid_inertia(shape->mesh(), b.mass);
  b.shape = std::move(shape);
  b.position = position;
  b.base_position = position;
  b.kind = kind;
  return b;
}

World baseline_world() {
  World w;
  w.contact_params.g1 = 2.96e7;
  w.contact_params.g2 = 2.0e6;
  w.contact_params.g_i = 250.0;
  w.contact_params.d_t = 0.002;
  w.contact_params.omega_n = 31416.0;
  w.friction_params = {0.2, 0.2, 1.0};
  return w;
}

// Opens episodes for the overlaps present in the current configuration.
void open_episodes(World& w, double approach_speed = 0.0) {
  std::vector<contact::DetectedOverlap> found;
  for (const auto& pair : detect_pairs(w)) {
    const auto& a = w.bodies[pair.a];
    const auto& b = w.bodies[pair.b];
    if (const auto o = mesh::characterize_overlap(*a.shape, a.pose(), *b.shape, b.pose())) {
      found.push_back({pair, o->v, approach_speed});
    }
  }
  w.episodes = contact::update_episodes(w.episodes, found, w.time);
}

double total_energy(const MetricsSample& s) {
  double e = 0.0;
  for (double k : s.kinetic_energy) e += k;
  return e;
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("pair detection") {
  World w = baseline_world();
  w.bodies = {make_body("a", dynamics::Dynamic{}, Vec3::Zero()),
              make_body("b", dynamics::Dynamic{}, Vec3(1, 0, 0))};
  CHECK(detect_pairs(w).empty());

  w.bodies[1].position = Vec3(kCubeEdge, 0, 0);
  REQUIRE(detect_pairs(w).size() == 1);
  CHECK(detect_pairs(w)[0] == contact::BodyPair{0, 1});

  // Five coincident bodies, two of them static: 10 pairs minus one static pair.
  w.bodies = {make_body("d0", dynamics::Dynamic{}, Vec3::Zero()),
              make_body("s0", dynamics::Static{}, Vec3::Zero()),
              make_body("d1", dynamics::Dynamic{}, Vec3::Zero()),
              make_body("s1", dynamics::Static{}, Vec3::Zero()),
              make_body("d2", dynamics::Dynamic{}, Vec3::Zero())};
  const auto pairs = detect_pairs(w);
  CHECK(pairs.size() == 9);
  CHECK(std::is_sorted(pairs.begin(), pairs.end()));
  CHECK(std::find(pairs.begin(), pairs.end(), contact::BodyPair{1, 3}) == pairs.end());
}

TEST_CASE("isolated body feels gravity and applied force only") {
  World w = baseline_world();
  w.bodies = {make_body("a", dynamics::Dynamic{}, Vec3::Zero())};
  Efforts e = assemble_efforts(w, pack_state(w), 0.0);
  CHECK(e.wrenches[0].force.isApprox(Vec3(0, 0, -0.2 * 9.81)));
  CHECK(e.wrenches[0].torque.norm() == 0.0);

  w.applied_forces = {Vec3(1, 2, 3)};
  e = assemble_efforts(w, pack_state(w), 0.0);
  CHECK(e.wrenches[0].force.isApprox(Vec3(1, 2, 3 - 0.2 * 9.81)));
}

TEST_CASE("state packing round-trips") {
  World w = baseline_world();
  w.bodies = {make_body("floor", dynamics::Static{}, Vec3(0, 0, -0.05), cube_shape(0.1)),
              make_body("a", dynamics::Dynamic{}, Vec3(0, 0, 0.0249)),
              make_body("b", dynamics::Dynamic{}, Vec3(0.0499, 0, 0.0249))};
  w.bodies[1].orientation = Quat(Eigen::AngleAxisd(0.01, Vec3::UnitY()));
  w.bodies[1].lin_vel = Vec3(0.1, 0, 0);
  w.bodies[2].ang_vel_body = Vec3(0, 0.3, 0);
  open_episodes(w);
  REQUIRE(w.episodes.size() == 3);
  const dynamics::State y = pack_state(w);
  CHECK(y.size() == 2 * kBodyStateSize + 2 * 3);
  World copy = w;
  for (auto& b : copy.bodies) {
    if (b.integrated()) b.position.setZero();
  }
  unpack_state(copy, y);
  CHECK(pack_state(copy) == y);
}

TEST_CASE("contact forces obey action and reaction") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    World w = baseline_world();
    w.bodies = {make_body("a", dynamics::Dynamic{}, Vec3::Zero()),
                make_body("b", dynamics::Dynamic{}, Vec3(0.04 + u(rng), u(rng), u(rng)))};
    for (auto& b : w.bodies) {
      b.orientation = Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
      b.lin_vel = Vec3(n(rng), n(rng), n(rng)) * 0.1;
      b.ang_vel_body = Vec3(n(rng), n(rng), n(rng));
    }
    open_episodes(w, 0.05);
    if (w.episodes.empty()) continue;
    dynamics::State y = pack_state(w);
    y[y.size() - 1] = 1e-4 * n(rng);  // arbitrary filter rate
    const Efforts e = assemble_efforts(w, y, 0.001);
    if (!e.contacts[0].touching) continue;
    ++checked;
    const auto& ca = e.contact_wrenches[0];
    const auto& cb = e.contact_wrenches[1];
    CHECK((ca.force + cb.force).norm() == 0.0);
    const Vec3 about_origin = ca.torque + w.bodies[0].position.cross(ca.force) + cb.torque +
                              w.bodies[1].position.cross(cb.force);
    const double scale = ca.torque.norm() + cb.torque.norm() + ca.force.norm() * 0.05;
    CHECK(about_origin.norm() <= 1e-9 * scale);
  }
  CHECK(checked > 50);
}

TEST_CASE("resting cube at its equilibrium depth carries its weight") {
  World w = baseline_world();
  const double area = kCubeEdge * kCubeEdge;
  const double depth = 0.2 * 9.81 / (w.contact_params.g1 * area);
  w.bodies = {make_body("cube", dynamics::Dynamic{}, Vec3(0, 0, kCubeEdge / 2 - depth)),
              make_body("floor", dynamics::Static{}, Vec3(0, 0, -0.05), cube_shape(0.1))};
  open_episodes(w);
  const Efforts e = assemble_efforts(w, pack_state(w), 0.0);
  // A resting episode clamps its approach speed, leaving a transient gain just above 1.
  CHECK(e.contacts[0].delta_eff == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(e.contacts[0].force == doctest::Approx(1.962 * e.contacts[0].delta_eff).epsilon(1e-9));
  CHECK(e.wrenches[0].force.norm() == doctest::Approx(e.contacts[0].force - 1.962).epsilon(1e-6));
  CHECK(e.contacts[0].volume / area < 2.0 * w.contact_params.d_t);
}

TEST_CASE("symmetric grasp balances the object") {
  World w = baseline_world();
  const double press = 0.0005;
  w.bodies = {make_body("left", dynamics::PrismaticAlong{Vec3::UnitX()}, Vec3(-kCubeEdge + press, 0, 0)),
              make_body("object", dynamics::Dynamic{}, Vec3::Zero()),
              make_body("right", dynamics::PrismaticAlong{Vec3::UnitX()}, Vec3(kCubeEdge - press, 0, 0))};
  w.gravity.setZero();
  w.applied_forces = {Vec3(5, 0, 0), Vec3::Zero(), Vec3(-5, 0, 0)};
  open_episodes(w);
  REQUIRE(w.episodes.size() == 2);
  const Efforts e = assemble_efforts(w, pack_state(w), 0.0);
  CHECK(e.contacts[0].force == doctest::Approx(e.contacts[1].force).epsilon(1e-12));
  CHECK(e.wrenches[1].force.norm() <= 1e-9 * e.contacts[0].force);
}

TEST_CASE("free fall matches closed-form kinematics") {
  World w = baseline_world();
  w.bodies = {make_body("a", dynamics::Dynamic{}, Vec3(0, 0, 10))};
  step(w, 0.1);
  CHECK(std::abs(w.bodies[0].lin_vel.z() + 0.981) < 1e-9);
  step(w, 1.0);
  CHECK(std::abs(w.bodies[0].position.z() - (10.0 - 0.5 * 9.81)) < 1e-9);
  CHECK(w.time == 1.0);
}

TEST_CASE("static scene stays unchanged") {
  World w = baseline_world();
  w.bodies = {make_body("a", dynamics::Static{}, Vec3::Zero()),
              make_body("b", dynamics::Static{}, Vec3(0.01, 0, 0))};
  const auto before = w.bodies;
  std::size_t samples = 0;
  step(w, 0.05, [&samples](const MetricsSample&) { ++samples; });
  CHECK(samples == 50);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(w.bodies[i].position == before[i].position);
  }
  CHECK(w.episodes.empty());
}

TEST_CASE("two-body collision conserves momentum and never gains energy") {
  World w = baseline_world();
  w.gravity.setZero();
  w.friction_params = {0.0, 0.0, 1.0};
  w.contact_params.g_i = 1e-3;
  w.options.h_max = 1e-4;
  const auto sphere = std::make_shared<const mesh::ConvexShape>(mesh::make_icosphere(0.025, 2));
  w.bodies = {make_body("a", dynamics::Dynamic{}, Vec3(0, 0, 0), sphere),
              make_body("b", dynamics::Dynamic{}, Vec3(0.055, 0.01, 0.0), sphere)};
  w.bodies[0].lin_vel = Vec3(0.2, 0, 0);
  w.bodies[1].lin_vel = Vec3(-0.1, 0, 0);
  const Vec3 p0 = 0.2 * (w.bodies[0].lin_vel + w.bodies[1].lin_vel);
  double e0 = -1.0;
  double max_force = 0.0;
  step(
      w, 0.1,
      [&](const MetricsSample& s) {
        if (e0 < 0.0) e0 = total_energy(s);
        CHECK(total_energy(s) <= e0 * (1.0 + 1e-9));
        const Vec3 p = 0.2 * (s.bodies[0].lin_vel + s.bodies[1].lin_vel);
        CHECK((p - p0).norm() <= 1e-9 * p0.norm());
        max_force = std::max(max_force, s.pairs[0].force);
      },
      true);
  CHECK(max_force > 0.0);
  const Vec3 gap = w.bodies[1].position - w.bodies[0].position;
  CHECK(gap.dot(w.bodies[1].lin_vel - w.bodies[0].lin_vel) > 0.0);
}

TEST_CASE("prismatic bodies never move off their axis") {
  World w = baseline_world();
  w.contact_params.omega_n = 6283.2;
  auto sphere = std::make_shared<const mesh::ConvexShape>(mesh::make_icosphere(0.025, 1));
  w.bodies = {make_body("finger", dynamics::PrismaticAlong{Vec3(1, 1, 0).normalized(), -1, 50.0},
                        Vec3(-0.03, -0.03, 0.0)),
              make_body("ball", dynamics::Dynamic{}, Vec3(0.0, 0.0, 0.01), sphere)};
  w.applied_forces = {Vec3(3, 3, 0), Vec3::Zero()};
  const Vec3 axis = Vec3(1, 1, 0).normalized();
  const Vec3 start = w.bodies[0].position;
  step(w, 0.2, [&](const MetricsSample& s) {
    const auto& f = s.bodies[0];
    CHECK((f.lin_vel - axis * f.lin_vel.dot(axis)).norm() <= 1e-15 * (1.0 + f.lin_vel.norm()));
    const Vec3 moved = f.position - start;
    CHECK((moved - axis * moved.dot(axis)).norm() < 1e-15);
    CHECK(std::abs(s.bodies[1].orientation.norm() - 1.0) <= 1e-9);
  });
  CHECK(w.bodies[1].lin_vel.norm() > 0.0);
}

TEST_CASE("coincident bodies are counted as indeterminate") {
  World w = baseline_world();
  w.gravity.setZero();
  w.bodies = {make_body("a", dynamics::Dynamic{}, Vec3::Zero()),
              make_body("b", dynamics::Dynamic{}, Vec3::Zero())};
  step(w, 0.002);
  CHECK(w.indeterminate_count > 0);
  CHECK(w.bodies[0].lin_vel.norm() == 0.0);
}

TEST_CASE("simulation is deterministic") {
  auto run_once = [] {
    World w = baseline_world();
    w.bodies = {make_body("cube", dynamics::Dynamic{}, Vec3(0, 0, 0.026)),
                make_body("floor", dynamics::Static{}, Vec3(0, 0, -0.05), cube_shape(0.1))};
    w.bodies[0].lin_vel = Vec3(0.01, 0, -0.05);
    std::vector<double> trace;
    step(w, 0.05, [&trace](const MetricsSample& s) {
      trace.push_back(s.pairs[0].force);
      trace.push_back(s.bodies[0].position.z());
    });
    return trace;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("frozen geometry mode agrees with per-evaluation geometry at small steps") {
  auto settle = [](bool frozen) {
    World w = baseline_world();
    w.friction_params.gamma = 1e4;
    w.options.h_max = 1e-4;
    w.options.frozen_geometry = frozen;
    w.bodies = {make_body("cube", dynamics::Dynamic{}, Vec3(0, 0, 0.025)),
                make_body("floor", dynamics::Static{}, Vec3(0, 0, -0.05), cube_shape(0.1))};
    step(w, 0.3);
    return w.bodies[0].position.z();
  };
  const double reference = settle(false);
  CHECK(reference == doctest::Approx(0.025 - 0.2 * 9.81 / (2.96e7 * 2.5e-3)).epsilon(1e-4));
  CHECK(std::abs(settle(true) - reference) < 1e-6);
}

TEST_CASE("kinetic energy ratio and expected energy") {
  CHECK(kinetic_energy_ratio(0.1, 0.1) == 1.0);
  CHECK(kinetic_energy_ratio(0.11, 0.1) == doctest::Approx(1.1));
  CHECK(kinetic_energy_ratio(0.0, 0.0) == 1.0);
  CHECK(std::isinf(kinetic_energy_ratio(0.01, 0.0)));

  const double omega = 2.0 * std::numbers::pi;
  // Phase pi/2 makes the velocity A W cos(W t + pi/2); evaluate where it peaks.
  const dynamics::SinusoidTrajectory s{Vec3::UnitX(), 0.05, omega, 0.0, 0.0};
  CHECK(expected_energy(s, 0.2, 1e-12) == doctest::Approx(0.5 * 0.2 * std::pow(0.05 * omega, 2)));
  CHECK(expected_energy(s, 0.2, 1e-12) == doctest::Approx(9.8696e-3).epsilon(1e-4));
  CHECK(expected_energy(s, 0.2, 0.25) < 1e-20);
}

TEST_CASE("world validation") {
  World w = baseline_world();
  w.bodies = {make_body("a", dynamics::Dynamic{}, Vec3::Zero())};
  CHECK_NOTHROW(w.validate());
  w.applied_forces = {Vec3::Zero(), Vec3::Zero()};
  CHECK_THROWS_AS(w.validate(), ParameterError);
  w.applied_forces.clear();
  w.options.h_max = 0.0;
  CHECK_THROWS_AS(w.validate(), ParameterError);
  w.options.h_max = 1e-3;
  w.bodies.push_back(make_body("f", dynamics::PrismaticAlong{Vec3::UnitX(), 0, 0.0}, Vec3::Zero()));
  CHECK_THROWS_AS(w.validate(), ParameterError);
}

}
