#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "volcon/errors.hpp"
#include "volcon/mesh.hpp"

namespace volcon::mesh {

namespace {

// Two planes are treated as the same supporting plane when their normals agree
// to this tolerance and their offsets agree to kPlaneEpsilon.
constexpr double kParallelTolerance = 1e-10;

struct Fragment {
  std::vector<Vec3> points;
  std::vector<int> ids;  // welded vertex ids, filled after welding
  Provenance tag = Provenance::FromA;
  Plane plane;
};

struct PosedShape {
  std::vector<Vec3> vertices;
  std::vector<Plane> planes;
  Aabb box;
};

PosedShape pose_shape(const ConvexShape& shape, const Pose& pose) {
  PosedShape out;
  const Mat3 r = pose.orientation.toRotationMatrix();
  out.vertices.reserve(shape.mesh().vertices.size());
  for (const auto& v : shape.mesh().vertices) out.vertices.push_back(r * v + pose.position);
  out.box = {out.vertices.front(), out.vertices.front()};
  for (const auto& v : out.vertices) {
    out.box.min = out.box.min.cwiseMin(v);
    out.box.max = out.box.max.cwiseMax(v);
  }
  out.planes.reserve(shape.planes().size());
  for (const auto& p : shape.planes()) {
    const Vec3 n = r * p.normal;
    out.planes.push_back({n, p.offset + n.dot(pose.position)});
  }
  return out;
}

int classify(double d) { return d > kPlaneEpsilon ? 1 : (d < -kPlaneEpsilon ? -1 : 0); }

// Sutherland-Hodgman against a single half-space. Points inside the tolerance
// band are kept unchanged, so a face lying on the plane survives intact.
// Returns false, leaving `out` untouched, when nothing lies outside.
bool clip(const std::vector<Vec3>& in, const Plane& plane, std::vector<Vec3>& out,
          std::vector<double>& dist) {
  const std::size_t n = in.size();
  dist.resize(n);
  bool any_outside = false;
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = plane.distance(in[i]);
    any_outside = any_outside || dist[i] > kPlaneEpsilon;
  }
  if (!any_outside) return false;
  out.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const int si = classify(dist[i]);
    const int sj = classify(dist[j]);
    if (si <= 0) out.push_back(in[i]);
    if ((si < 0 && sj > 0) || (si > 0 && sj < 0)) {
      const double t = dist[i] / (dist[i] - dist[j]);
      out.push_back(in[i] + t * (in[j] - in[i]));
    }
  }
  return true;
}

// Planes of `posed` that cut into the box of the other body; all others leave
// every fragment of the other body untouched. Returns false when some plane
// has the whole box outside, which separates the bodies.
bool active_planes(const PosedShape& posed, const Aabb& other, std::vector<Plane>& out) {
  out.clear();
  for (const auto& plane : posed.planes) {
    // Box corners extremal along the normal.
    Vec3 far_in, far_out;
    for (int k = 0; k < 3; ++k) {
      const bool positive = plane.normal[k] >= 0.0;
      far_out[k] = positive ? other.max[k] : other.min[k];
      far_in[k] = positive ? other.min[k] : other.max[k];
    }
    if (plane.distance(far_in) >= -kPlaneEpsilon) return false;
    if (plane.distance(far_out) > kPlaneEpsilon) out.push_back(plane);
  }
  return true;
}

void clip_faces(const ConvexShape& shape, const PosedShape& posed, const PosedShape& other,
                const std::vector<Plane>& cutting, Provenance tag,
                const std::vector<char>& skip_plane, std::vector<Fragment>& fragments) {
  std::vector<Vec3> current;
  std::vector<Vec3> next;
  std::vector<double> dist;
  const auto& tris = shape.mesh().triangles;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const int plane_index = shape.triangle_plane()[t];
    if (skip_plane[plane_index]) continue;
    const Vec3& p0 = posed.vertices[tris[t][0]];
    const Vec3& p1 = posed.vertices[tris[t][1]];
    const Vec3& p2 = posed.vertices[tris[t][2]];
    // A triangle whose box misses the other body's box cannot reach inside it.
    const Vec3 lo = p0.cwiseMin(p1).cwiseMin(p2);
    const Vec3 hi = p0.cwiseMax(p1).cwiseMax(p2);
    if ((lo.array() > other.box.max.array() + kPlaneEpsilon).any() ||
        (hi.array() < other.box.min.array() - kPlaneEpsilon).any()) {
      continue;
    }
    current.assign({p0, p1, p2});
    for (const auto& plane : cutting) {
      if (clip(current, plane, next, dist)) std::swap(current, next);
      if (current.size() < 3) break;
    }
    if (current.size() < 3) continue;
    fragments.push_back({current, {}, tag, posed.planes[plane_index]});
  }
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

// Merges coincident points across all fragments; returns welded positions.
std::vector<Vec3> weld(std::vector<Fragment>& fragments) {
  std::vector<Vec3> points;
  for (const auto& f : fragments) points.insert(points.end(), f.points.begin(), f.points.end());
  const int n = static_cast<int>(points.size());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return points[a].x() < points[b].x() || (points[a].x() == points[b].x() && a < b);
  });

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int a = 0; a < n; ++a) {
    const int i = order[a];
    for (int b = a + 1; b < n && points[order[b]].x() - points[i].x() <= kPlaneEpsilon; ++b) {
      const int j = order[b];
      if ((points[i] - points[j]).cwiseAbs().maxCoeff() <= kPlaneEpsilon) {
        const int ri = find_root(parent, i);
        const int rj = find_root(parent, j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }

  std::vector<int> compact(n, -1);
  std::vector<Vec3> welded;
  int cursor = 0;
  for (auto& f : fragments) {
    f.ids.clear();
    for (std::size_t k = 0; k < f.points.size(); ++k, ++cursor) {
      const int root = find_root(parent, cursor);
      if (compact[root] < 0) {
        compact[root] = static_cast<int>(welded.size());
        welded.push_back(points[root]);
      }
      const int id = compact[root];
      if (f.ids.empty() || f.ids.back() != id) f.ids.push_back(id);
    }
    while (f.ids.size() > 1 && f.ids.front() == f.ids.back()) f.ids.pop_back();
  }
  return welded;
}

// Inserts every welded vertex lying on a fragment edge into that edge so that
// neighbouring fragments share identical edge subdivisions.
void split_t_junctions(std::vector<Fragment>& fragments, const std::vector<Vec3>& welded) {
  std::vector<int> candidates;
  std::vector<std::pair<double, int>> inserts;
  std::vector<int> rebuilt;
  for (auto& f : fragments) {
    if (f.ids.size() < 3) continue;
    Vec3 lo = welded[f.ids[0]];
    Vec3 hi = lo;
    for (int id : f.ids) {
      lo = lo.cwiseMin(welded[id]);
      hi = hi.cwiseMax(welded[id]);
    }
    lo.array() -= kPlaneEpsilon;
    hi.array() += kPlaneEpsilon;

    candidates.clear();
    for (int k = 0; k < static_cast<int>(welded.size()); ++k) {
      const Vec3& p = welded[k];
      if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) continue;
      if (std::abs(f.plane.distance(p)) > 2.0 * kPlaneEpsilon) continue;
      candidates.push_back(k);
    }
    rebuilt.clear();
    const std::size_t m = f.ids.size();
    for (std::size_t e = 0; e < m; ++e) {
      const int u = f.ids[e];
      const int w = f.ids[(e + 1) % m];
      rebuilt.push_back(u);
      const Vec3 a = welded[u];
      const Vec3 edge = welded[w] - a;
      const double len2 = edge.squaredNorm();
      if (len2 == 0.0) continue;
      inserts.clear();
      for (int k : candidates) {
        if (k == u || k == w) continue;
        const double t = (welded[k] - a).dot(edge) / len2;
        if (t <= 0.0 || t >= 1.0) continue;
        if ((a + t * edge - welded[k]).norm() <= kPlaneEpsilon) inserts.emplace_back(t, k);
      }
      std::sort(inserts.begin(), inserts.end());
      for (const auto& [t, k] : inserts) rebuilt.push_back(k);
    }
    f.ids = rebuilt;
  }
}

}  // namespace

std::optional<TriMesh> boolean_intersect(const ConvexShape& a, const Pose& pose_a,
                                         const ConvexShape& b, const Pose& pose_b) {
  const PosedShape pa = pose_shape(a, pose_a);
  const PosedShape pb = pose_shape(b, pose_b);
  std::vector<Plane> cut_by_a;
  std::vector<Plane> cut_by_b;
  if (!active_planes(pa, pb.box, cut_by_a) || !active_planes(pb, pa.box, cut_by_b)) {
    return std::nullopt;
  }

  // B faces lying on an identically oriented A face duplicate A's fragment there.
  std::vector<char> skip_a(pa.planes.size(), 0);
  std::vector<char> skip_b(pb.planes.size(), 0);
  for (std::size_t j = 0; j < pb.planes.size(); ++j) {
    for (const auto& p : pa.planes) {
      if (p.normal.dot(pb.planes[j].normal) > 1.0 - kParallelTolerance &&
          std::abs(p.offset - pb.planes[j].offset) <= kPlaneEpsilon) {
        skip_b[j] = 1;
        break;
      }
    }
  }

  std::vector<Fragment> fragments;
  clip_faces(a, pa, pb, cut_by_b, Provenance::FromA, skip_a, fragments);
  clip_faces(b, pb, pa, cut_by_a, Provenance::FromB, skip_b, fragments);
  if (fragments.empty()) return std::nullopt;

  const std::vector<Vec3> welded = weld(fragments);
  split_t_junctions(fragments, welded);

  TriMesh out;
  std::vector<int> remap(welded.size(), -1);
  auto use = [&](int id) {
    if (remap[id] < 0) {
      remap[id] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(welded[id]);
    }
    return remap[id];
  };
  for (const auto& f : fragments) {
    const std::size_t m = f.ids.size();
    if (m < 3) continue;
    if (m == 3) {
      out.triangles.push_back({use(f.ids[0]), use(f.ids[1]), use(f.ids[2])});
      out.provenance.push_back(f.tag);
      continue;
    }
    // Fan around the polygon's vertex mean, which stays interior even when
    // T-junction splitting left collinear vertices on the boundary.
    Vec3 center = Vec3::Zero();
    for (int id : f.ids) center += welded[id];
    center /= static_cast<double>(m);
    const int c = static_cast<int>(out.vertices.size());
    out.vertices.push_back(center);
    for (std::size_t k = 0; k < m; ++k) {
      out.triangles.push_back({c, use(f.ids[k]), use(f.ids[(k + 1) % m])});
      out.provenance.push_back(f.tag);
    }
  }
  if (out.triangles.empty() || volume_moments(out).volume < kMinOverlapVolume) return std::nullopt;
  return out;
}

std::optional<TriMesh> boolean_intersect(const TriMesh& a, const Pose& pose_a, const TriMesh& b,
                                         const Pose& pose_b) {
  return boolean_intersect(ConvexShape(a), pose_a, ConvexShape(b), pose_b);
}

}  // namespace volcon::mesh
