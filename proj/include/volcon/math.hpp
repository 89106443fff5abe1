#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace volcon {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

//! Rigid placement of a body frame in the world.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  static Pose identity() { return {}; }
  static Pose translation(const Vec3& t) { return {t, Quat::Identity()}; }

  Vec3 apply(const Vec3& p) const { return orientation * p + position; }
  Vec3 rotate(const Vec3& v) const { return orientation * v; }
};

//! Builds a quaternion from (w, x, y, z) components.
inline Quat quat_wxyz(double w, double x, double y, double z) { return Quat(w, x, y, z); }

}  // namespace volcon
