#include <cmath>

#include "volcon/errors.hpp"
#include "volcon/mesh.hpp"

namespace volcon::mesh {

namespace {

// s_d is reported indeterminate when it cancels to this fraction of the total weight.
constexpr double kIndeterminateRatio = 1e-12;

}  // namespace

std::vector<Triangle> extract_submesh(const TriMesh& intersection, Provenance tag) {
  if (intersection.provenance.size() != intersection.triangles.size()) {
    throw MeshError("intersection mesh has untagged triangles");
  }
  std::vector<Triangle> out;
  for (std::size_t i = 0; i < intersection.triangles.size(); ++i) {
    if (intersection.provenance[i] == tag) out.push_back(intersection.triangle(i));
  }
  return out;
}

TriangleWeight triangle_weight(const Triangle& tri, const Vec3& c, DirectionMode mode) {
  const Vec3 to_c = c - tri.centroid();
  const double depth = to_c.norm();
  if (depth < kMinDepth) return {};
  TriangleWeight w;
  const Vec3 area_vector = tri.area_vector();
  w.omega = area_vector.norm() * depth / 3.0;
  if (mode == DirectionMode::CentroidToContact) {
    w.n = to_c / depth;
  } else if (area_vector.norm() > 0.0) {
    w.n = -area_vector.normalized();
  }
  return w;
}

Vec3 direction_vector(const TriMesh& intersection, const Vec3& c, DirectionMode mode) {
  if (intersection.provenance.size() != intersection.triangles.size()) {
    throw MeshError("intersection mesh has untagged triangles");
  }
  Vec3 s_d = Vec3::Zero();
  double total_weight = 0.0;
  for (std::size_t i = 0; i < intersection.triangles.size(); ++i) {
    const TriangleWeight w = triangle_weight(intersection.triangle(i), c, mode);
    const double sign = intersection.provenance[i] == Provenance::FromA ? 1.0 : -1.0;
    s_d += sign * w.omega * w.n;
    total_weight += w.omega;
  }
  if (total_weight == 0.0 || s_d.norm() < kIndeterminateRatio * total_weight) {
    throw IndeterminateDirection();
  }
  return s_d;
}

std::optional<OverlapResult> characterize_overlap(const ConvexShape& a, const Pose& pose_a,
                                                  const ConvexShape& b, const Pose& pose_b,
                                                  DirectionMode mode) {
  auto intersection = boolean_intersect(a, pose_a, b, pose_b);
  if (!intersection) return std::nullopt;
  OverlapResult r;
  r.intersection = std::move(*intersection);
  const VolumeMoments m = volume_moments(r.intersection);
  r.v = m.volume;
  r.c = m.centroid;
  r.s_d = direction_vector(r.intersection, r.c, mode);
  r.s_n = r.s_d.normalized();
  return r;
}

std::optional<OverlapResult> characterize_overlap(const TriMesh& a, const Pose& pose_a,
                                                  const TriMesh& b, const Pose& pose_b,
                                                  DirectionMode mode) {
  return characterize_overlap(ConvexShape(a), pose_a, ConvexShape(b), pose_b, mode);
}

}  // namespace volcon::mesh
