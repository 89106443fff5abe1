#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "volcon/contact.hpp"
#include "volcon/math.hpp"
#include "volcon/mesh.hpp"

namespace volcon::dynamics {

//! Prescribed translation base + axis * A * (sin(W tau + phi) - sin(phi)),
//! tau = t - start_time, held at the base position before start_time.
struct SinusoidTrajectory {
  Vec3 axis = Vec3::UnitZ();
  double amplitude = 0.0;  //!< [m]
  double omega = 0.0;      //!< angular frequency [rad/s]
  double phase = 0.0;      //!< [rad]
  double start_time = 0.0;

  Vec3 offset(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;
};

//! Free six degree-of-freedom body.
struct Dynamic {};

//! Translates along a unit axis only. The joint frame optionally rides on a
//! carrier body (index into the world's body list, -1 for the inertial frame);
//! `damping` resists axial motion relative to the carrier [N s/m].
struct PrismaticAlong {
  Vec3 axis = Vec3::UnitX();
  int carrier = -1;
  double damping = 0.0;
};

//! Fixed in the world; infinite mass for contact purposes.
struct Static {};

//! Pose follows a prescribed trajectory; not integrated.
struct Kinematic {
  SinusoidTrajectory trajectory;
};

using BodyKind = std::variant<Dynamic, PrismaticAlong, Static, Kinematic>;

struct RigidBody {
  std::string name;
  double mass = 1.0;                   //!< [kg]
  Mat3 inertia = Mat3::Identity();     //!< body frame, about the center of mass [kg m^2]
  Vec3 position = Vec3::Zero();        //!< center of mass, world [m]
  Quat orientation = Quat::Identity();
  Vec3 lin_vel = Vec3::Zero();         //!< world [m/s]
  Vec3 ang_vel_body = Vec3::Zero();    //!< body frame [rad/s]
  BodyKind kind = Dynamic{};
  //! Geometry in the body frame, centered on the center of mass.
  std::shared_ptr<const mesh::ConvexShape> shape;
  //! Position at t = 0, the base of a Kinematic trajectory.
  Vec3 base_position = Vec3::Zero();

  //! True for bodies whose state is integrated (Dynamic and PrismaticAlong).
  bool integrated() const {
    return std::holds_alternative<Dynamic>(kind) || std::holds_alternative<PrismaticAlong>(kind);
  }
  //! Mass taking part in an impact: zero for Static and Kinematic bodies.
  double impact_mass() const { return integrated() ? mass : 0.0; }
  Pose pose() const { return {position, orientation}; }
  Vec3 ang_vel_world() const { return orientation * ang_vel_body; }
  contact::VelocityField velocity_field() const { return {position, lin_vel, ang_vel_world()}; }

  //! Throws ParameterError on non-positive mass, a non positive-definite or
  //! asymmetric inertia, a non-unit quaternion or a moving Static body.
  void validate() const;
};

struct Acceleration {
  Vec3 linear = Vec3::Zero();        //!< world [m/s^2]
  Vec3 angular_body = Vec3::Zero();  //!< body frame [rad/s^2]
};

//! Newton-Euler equations. `wrench.force` is in world coordinates and
//! `wrench.torque` in the body frame. PrismaticAlong bodies keep only the
//! axial force component and have no rotational dynamics.
Acceleration equations_of_motion(const RigidBody& body, const contact::Wrench& wrench);

//! q_dot = 1/2 q (x) (0, omega_body), returned as raw quaternion coefficients.
Quat quaternion_rate(const Quat& q, const Vec3& omega_body);

double kinetic_energy(const RigidBody& body);

//! Throws ParameterError for a zero quaternion.
Quat renormalize(const Quat& q);

using State = Eigen::VectorXd;
//! Writes dy/dt for state y at time t into `dydt` (already sized like y).
using Rhs = std::function<void(double t, const State& y, State& dydt)>;

struct Rk45Options {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double h_max = 1e-3;
  double h_min = 1e-12;
  //! First trial step; estimated from the RHS when not positive.
  double h_initial = 0.0;
  //! Keep every accepted step in the result, not only the endpoints.
  bool record_steps = true;
  //! Applied to the state after every accepted step (e.g. renormalization).
  std::function<void(State&)> post_step;
};

struct Rk45Sample {
  double t = 0.0;
  State y;
};

struct Rk45Result {
  std::vector<Rk45Sample> samples;  //!< (t0, y0), accepted steps..., (t1, y1)
  double h_next = 0.0;              //!< step size suggested for a continuation
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;

  const State& final_state() const { return samples.back().y; }
};

//! Dormand-Prince 5(4) with first-same-as-last reuse and local extrapolation.
//! Throws IntegrationError when the step size falls below `h_min`.
Rk45Result rk45_integrate(const Rhs& rhs, const State& y0, double t0, double t1,
                          const Rk45Options& options = {});

}  // namespace volcon::dynamics
