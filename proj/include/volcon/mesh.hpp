#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "volcon/math.hpp"

namespace volcon::mesh {

//! Clipping and on-plane classification tolerance [m].
inline constexpr double kPlaneEpsilon = 1e-9;
//! Intersections below this volume are reported as no contact [m^3].
inline constexpr double kMinOverlapVolume = 1e-15;
//! Input triangles must exceed this area [m^2].
inline constexpr double kMinTriangleArea = 1e-12;
//! Triangles whose centroid is closer than this to c carry no weight [m].
inline constexpr double kMinDepth = 1e-12;

//! Which input body an intersection triangle was cut from.
enum class Provenance : std::uint8_t { FromA, FromB };

using TriangleIndices = std::array<int, 3>;

struct Triangle {
  Vec3 a, b, c;

  Vec3 centroid() const { return (a + b + c) / 3.0; }
  Vec3 area_vector() const { return 0.5 * (b - a).cross(c - a); }
  double area() const { return area_vector().norm(); }
};

//! Indexed triangle surface. Triangles are counter-clockwise seen from outside.
//! `provenance` is either empty or holds one tag per triangle.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<TriangleIndices> triangles;
  std::vector<Provenance> provenance;

  bool empty() const { return vertices.empty() || triangles.empty(); }
  bool has_provenance() const { return !provenance.empty(); }
  Triangle triangle(std::size_t i) const {
    const auto& t = triangles[i];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }
};

struct Aabb {
  Vec3 min;
  Vec3 max;

  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
};

//! Oriented plane `normal . x = offset`; positive distance is outside.
struct Plane {
  Vec3 normal;
  double offset = 0.0;

  double distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

TriMesh transformed(const TriMesh& mesh, const Pose& pose);

Aabb compute_aabb(const TriMesh& mesh, const Pose& pose);

//! Inclusive test: boxes that merely touch are reported as overlapping.
bool aabb_overlap(const Aabb& a, const Aabb& b);

//! Number of edges not shared by exactly one opposing pair of triangles.
std::size_t boundary_edge_count(const TriMesh& mesh);

//! Throws MeshError unless the mesh is closed, consistently oriented,
//! free of degenerate triangles and has positive volume.
void validate_closed(const TriMesh& mesh);

//! validate_closed plus the convexity check: every vertex on or behind every face plane.
void validate_convex_solid(const TriMesh& mesh);

//! Signed volume by the divergence theorem. Throws MeshError on open meshes.
double mesh_volume(const TriMesh& mesh);

//! Volume centroid by signed tetrahedron decomposition. Throws on open or zero-volume meshes.
Vec3 mesh_centroid(const TriMesh& mesh);

struct VolumeMoments {
  double volume = 0.0;
  Vec3 centroid = Vec3::Zero();
};

//! Volume and centroid in one pass, without closedness checks.
VolumeMoments volume_moments(const TriMesh& mesh);

//! Inertia tensor about the centroid of a homogeneous solid with the given mass.
Mat3 solid_inertia(const TriMesh& mesh, double mass);

//! A validated convex watertight mesh with its distinct supporting planes.
class ConvexShape {
 public:
  explicit ConvexShape(TriMesh mesh);

  const TriMesh& mesh() const { return mesh_; }
  const std::vector<Plane>& planes() const { return planes_; }
  //! Index into planes() for each triangle.
  const std::vector<int>& triangle_plane() const { return triangle_plane_; }
  double volume() const { return volume_; }
  const Vec3& centroid() const { return centroid_; }

 private:
  TriMesh mesh_;
  std::vector<Plane> planes_;
  std::vector<int> triangle_plane_;
  double volume_ = 0.0;
  Vec3 centroid_ = Vec3::Zero();
};

//! Closed triangle mesh of the intersection volume in world coordinates with
//! provenance tags, or nullopt when the interiors are disjoint or the overlap
//! is below kMinOverlapVolume. Faces shared by both inputs with the same
//! orientation are tagged FromA.
std::optional<TriMesh> boolean_intersect(const ConvexShape& a, const Pose& pose_a,
                                         const ConvexShape& b, const Pose& pose_b);
std::optional<TriMesh> boolean_intersect(const TriMesh& a, const Pose& pose_a, const TriMesh& b,
                                         const Pose& pose_b);

//! Triangles carrying `tag`. Throws MeshError if the mesh is untagged.
std::vector<Triangle> extract_submesh(const TriMesh& intersection, Provenance tag);

//! How the per-triangle unit vector n is chosen in the direction sum.
enum class DirectionMode : std::uint8_t {
  CentroidToContact,  //!< unit vector from the triangle centroid toward c
  FaceNormal,         //!< inward unit normal of the triangle
};

struct TriangleWeight {
  double omega = 0.0;  //!< pyramid volume 1/3 * area * depth [m^3]
  Vec3 n = Vec3::Zero();
};

TriangleWeight triangle_weight(const Triangle& tri, const Vec3& c,
                               DirectionMode mode = DirectionMode::CentroidToContact);

//! s_d = sum_A w n - sum_B w n. A force on body A along s_d separates the pair.
//! Throws IndeterminateDirection when the sum cancels.
Vec3 direction_vector(const TriMesh& intersection, const Vec3& c,
                      DirectionMode mode = DirectionMode::CentroidToContact);

struct OverlapResult {
  TriMesh intersection;
  Vec3 c = Vec3::Zero();    //!< application point [m]
  double v = 0.0;           //!< overlap volume [m^3]
  Vec3 s_d = Vec3::Zero();  //!< weighted direction, unnormalized
  Vec3 s_n = Vec3::Zero();  //!< s_d / |s_d|
};

std::optional<OverlapResult> characterize_overlap(
    const ConvexShape& a, const Pose& pose_a, const ConvexShape& b, const Pose& pose_b,
    DirectionMode mode = DirectionMode::CentroidToContact);
std::optional<OverlapResult> characterize_overlap(
    const TriMesh& a, const Pose& pose_a, const TriMesh& b, const Pose& pose_b,
    DirectionMode mode = DirectionMode::CentroidToContact);

// Procedural shapes and file loading.

//! Box centered at the origin with full edge lengths `extents`.
TriMesh make_cuboid(const Vec3& extents);
//! Subdivided icosahedron with vertices on a sphere of `radius`.
TriMesh make_icosphere(double radius, int subdivisions);
//! ASCII OBJ, positions and faces only. Polygonal faces are fan-triangulated.
TriMesh parse_obj(std::istream& in);
TriMesh load_obj(const std::filesystem::path& path);

}  // namespace volcon::mesh
