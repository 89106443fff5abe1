#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "volcon/errors.hpp"
#include "volcon/mesh.hpp"

namespace volcon::mesh {

namespace {

constexpr double kConvexityTolerance = 1e-9;

void require_indices_in_range(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int idx : mesh.triangles[t]) {
      if (idx < 0 || idx >= n) {
        throw MeshError("triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(idx) + " out of range");
      }
    }
  }
}

}  // namespace

TriMesh transformed(const TriMesh& mesh, const Pose& pose) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = pose.apply(v);
  return out;
}

Aabb compute_aabb(const TriMesh& mesh, const Pose& pose) {
  if (mesh.vertices.empty()) throw MeshError("cannot bound an empty mesh");
  const Mat3 r = pose.orientation.toRotationMatrix();
  Aabb box{Vec3::Constant(std::numeric_limits<double>::infinity()),
           Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& v : mesh.vertices) {
    const Vec3 p = r * v + pose.position;
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

bool aabb_overlap(const Aabb& a, const Aabb& b) {
  return (a.min.array() <= b.max.array()).all() && (b.min.array() <= a.max.array()).all();
}

std::size_t boundary_edge_count(const TriMesh& mesh) {
  // Directed edges; a closed oriented surface pairs every (i, j) with exactly one (j, i).
  std::vector<std::pair<int, int>> directed;
  directed.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) directed.emplace_back(t[k], t[(k + 1) % 3]);
  }
  std::sort(directed.begin(), directed.end());

  std::size_t bad = 0;
  for (std::size_t i = 0; i < directed.size();) {
    std::size_t j = i;
    while (j < directed.size() && directed[j] == directed[i]) ++j;
    const auto [a, b] = directed[i];
    const auto rev = std::equal_range(directed.begin(), directed.end(), std::make_pair(b, a));
    const auto reverse_count = static_cast<std::size_t>(rev.second - rev.first);
    if (j - i != 1 || reverse_count != 1) ++bad;
    i = j;
  }
  return bad;
}

void validate_closed(const TriMesh& mesh) {
  if (mesh.empty()) throw MeshError("mesh is empty");
  require_indices_in_range(mesh);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (mesh.triangle(t).area() <= kMinTriangleArea) {
      throw MeshError("triangle " + std::to_string(t) + " is degenerate");
    }
  }
  if (const auto open = boundary_edge_count(mesh); open != 0) {
    throw MeshError("mesh is not closed: " + std::to_string(open) + " boundary edges");
  }
  if (volume_moments(mesh).volume <= 0.0) {
    throw MeshError("mesh is not outward oriented (non-positive volume)");
  }
}

void validate_convex_solid(const TriMesh& mesh) {
  validate_closed(mesh);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle tri = mesh.triangle(t);
    const Vec3 n = tri.area_vector().normalized();
    const double d = n.dot(tri.a);
    for (const auto& v : mesh.vertices) {
      if (n.dot(v) - d > kConvexityTolerance) {
        throw MeshError("mesh is not convex: a vertex lies in front of face " + std::to_string(t));
      }
    }
  }
}

VolumeMoments volume_moments(const TriMesh& mesh) {
  VolumeMoments m;
  if (mesh.empty()) return m;
  // Tetrahedra fan from a reference point near the mesh keeps the sums well conditioned.
  const Vec3 ref = mesh.vertices.front();
  double six_volume = 0.0;
  Vec3 weighted = Vec3::Zero();
  for (const auto& t : mesh.triangles) {
    const Vec3 p1 = mesh.vertices[t[0]] - ref;
    const Vec3 p2 = mesh.vertices[t[1]] - ref;
    const Vec3 p3 = mesh.vertices[t[2]] - ref;
    const double det = p1.cross(p2).dot(p3);
    six_volume += det;
    weighted += det * (p1 + p2 + p3);
  }
  m.volume = six_volume / 6.0;
  m.centroid = six_volume != 0.0 ? Vec3(ref + weighted / (4.0 * six_volume)) : ref;
  return m;
}

double mesh_volume(const TriMesh& mesh) {
  if (mesh.empty()) throw MeshError("mesh is empty");
  require_indices_in_range(mesh);
  if (const auto open = boundary_edge_count(mesh); open != 0) {
    throw MeshError("mesh is not closed: " + std::to_string(open) + " boundary edges");
  }
  return volume_moments(mesh).volume;
}

Vec3 mesh_centroid(const TriMesh& mesh) {
  const double v = mesh_volume(mesh);
  if (std::abs(v) < kMinOverlapVolume) throw MeshError("centroid of a zero-volume mesh");
  return volume_moments(mesh).centroid;
}

Mat3 solid_inertia(const TriMesh& mesh, double mass) {
  const VolumeMoments m = volume_moments(mesh);
  if (m.volume <= 0.0) throw MeshError("inertia of a non-positive volume");

  // Second-moment (covariance) integration over signed tetrahedra about the centroid.
  Mat3 canonical;
  canonical << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  canonical /= 120.0;
  Mat3 cov = Mat3::Zero();
  for (const auto& t : mesh.triangles) {
    Mat3 a;
    a.col(0) = mesh.vertices[t[0]] - m.centroid;
    a.col(1) = mesh.vertices[t[1]] - m.centroid;
    a.col(2) = mesh.vertices[t[2]] - m.centroid;
    cov += a.determinant() * a * canonical * a.transpose();
  }
  const double density = mass / m.volume;
  cov *= density;
  return cov.trace() * Mat3::Identity() - cov;
}

ConvexShape::ConvexShape(TriMesh mesh) : mesh_(std::move(mesh)) {
  validate_convex_solid(mesh_);
  mesh_.provenance.clear();

  triangle_plane_.reserve(mesh_.triangles.size());
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const Triangle tri = mesh_.triangle(t);
    const Vec3 n = tri.area_vector().normalized();
    const double d = n.dot(tri.centroid());
    int found = -1;
    for (std::size_t p = 0; p < planes_.size(); ++p) {
      if (planes_[p].normal.dot(n) > 1.0 - 1e-12 &&
          std::abs(planes_[p].offset - d) <= kPlaneEpsilon) {
        found = static_cast<int>(p);
        break;
      }
    }
    if (found < 0) {
      planes_.push_back({n, d});
      found = static_cast<int>(planes_.size()) - 1;
    }
    triangle_plane_.push_back(found);
  }
  const VolumeMoments m = volume_moments(mesh_);
  volume_ = m.volume;
  centroid_ = m.centroid;
}

}  // namespace volcon::mesh
