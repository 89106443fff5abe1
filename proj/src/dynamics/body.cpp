#include <cmath>

#include <Eigen/Eigenvalues>

#include "volcon/dynamics.hpp"
#include "volcon/errors.hpp"

namespace volcon::dynamics {

Vec3 SinusoidTrajectory::offset(double t) const {
  if (t <= start_time) return Vec3::Zero();
  const double tau = t - start_time;
  return axis * amplitude * (std::sin(omega * tau + phase) - std::sin(phase));
}

Vec3 SinusoidTrajectory::velocity(double t) const {
  if (t <= start_time) return Vec3::Zero();
  return axis * amplitude * omega * std::cos(omega * (t - start_time) + phase);
}

Vec3 SinusoidTrajectory::acceleration(double t) const {
  if (t <= start_time) return Vec3::Zero();
  return -axis * amplitude * omega * omega * std::sin(omega * (t - start_time) + phase);
}

void RigidBody::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ParameterError("body '" + name + "': mass must be strictly positive");
  }
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw ParameterError("body '" + name + "': inertia must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw ParameterError("body '" + name + "': inertia must be positive definite");
  }
  if (std::abs(orientation.norm() - 1.0) > 1e-9) {
    throw ParameterError("body '" + name + "': orientation must be a unit quaternion");
  }
  if (std::holds_alternative<Static>(kind) && (lin_vel.norm() > 0.0 || ang_vel_body.norm() > 0.0)) {
    throw ParameterError("body '" + name + "': static bodies cannot move");
  }
  if (const auto* p = std::get_if<PrismaticAlong>(&kind)) {
    if (std::abs(p->axis.norm() - 1.0) > 1e-9) {
      throw ParameterError("body '" + name + "': prismatic axis must be a unit vector");
    }
    if (p->damping < 0.0) throw ParameterError("body '" + name + "': joint damping must be non-negative");
  }
  if (!shape) throw ParameterError("body '" + name + "': missing shape");
}

Acceleration equations_of_motion(const RigidBody& body, const contact::Wrench& wrench) {
  Acceleration acc;
  if (const auto* p = std::get_if<PrismaticAlong>(&body.kind)) {
    acc.linear = p->axis * (wrench.force.dot(p->axis) / body.mass);
    return acc;
  }
  acc.linear = wrench.force / body.mass;
  const Vec3& w = body.ang_vel_body;
  const Vec3 gyroscopic = w.cross(body.inertia * w);
  acc.angular_body = body.inertia.ldlt().solve(wrench.torque - gyroscopic);
  return acc;
}

Quat quaternion_rate(const Quat& q, const Vec3& omega_body) {
  const Quat p = q * Quat(0.0, omega_body.x(), omega_body.y(), omega_body.z());
  return Quat(0.5 * p.w(), 0.5 * p.x(), 0.5 * p.y(), 0.5 * p.z());
}

double kinetic_energy(const RigidBody& body) {
  return 0.5 * body.mass * body.lin_vel.squaredNorm() +
         0.5 * body.ang_vel_body.dot(body.inertia * body.ang_vel_body);
}

Quat renormalize(const Quat& q) {
  const double n = q.norm();
  if (!(n > 0.0)) throw ParameterError("cannot normalize a zero quaternion");
  return Quat(q.coeffs() / n);
}

}  // namespace volcon::dynamics
