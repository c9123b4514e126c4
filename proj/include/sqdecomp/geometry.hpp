#pragma once

// Triangle meshes, OBJ input, normalization and inside/outside-labeled point
// sampling used as ground truth.

#include <Eigen/Core>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sqdecomp/error.hpp"
#include "sqdecomp/parallel.hpp"
#include "sqdecomp/superquadric.hpp"

namespace sqdecomp {

using Triangle = std::array<std::uint32_t, 3>;
using Labels = std::vector<std::uint8_t>;

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  /// Appends `other`, re-indexing its triangles.
  void append(const Mesh& other) {
    const auto base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto& t : other.triangles) triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
};

struct LabeledPointSet {
  std::vector<Vec3> points;
  Labels labels;

  std::size_t size() const { return points.size(); }
};

struct BoundingBox {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

inline BoundingBox bounding_box(const Mesh& mesh) {
  BoundingBox box;
  for (const auto& v : mesh.vertices) box.extend(v);
  return box;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline double parse_double(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw InputError("line " + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
  return v;
}

// Vertex index of an OBJ face token ("v", "v/vt", "v//vn", "v/vt/vn"),
// converted to 0-based. Negative indices are relative to the current count.
inline long parse_face_index(std::string_view tok, std::size_t n_vertices, std::size_t line_no) {
  const auto slash = tok.find('/');
  const auto head = tok.substr(0, slash);
  long idx = 0;
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (head.empty() || ec != std::errc() || ptr != head.data() + head.size())
    throw InputError("line " + std::to_string(line_no) + ": malformed face token '" +
                     std::string(tok) + "'");
  if (idx == 0) throw InputError("line " + std::to_string(line_no) + ": face index 0 (OBJ is 1-based)");
  return idx > 0 ? idx - 1 : static_cast<long>(n_vertices) + idx;
}

}  // namespace detail

/// Parses Wavefront OBJ text. Only `v` and `f` records are used; polygons are
/// fan-triangulated.
inline Mesh parse_obj(std::istream& in) {
  Mesh mesh;
  std::vector<std::pair<std::array<long, 3>, std::size_t>> faces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tok = detail::split_ws(body);
    if (tok[0] == "v") {
      if (tok.size() < 4) throw InputError("line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      mesh.vertices.emplace_back(detail::parse_double(tok[1], line_no),
                                 detail::parse_double(tok[2], line_no),
                                 detail::parse_double(tok[3], line_no));
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw InputError("line " + std::to_string(line_no) + ": face needs at least 3 vertices");
      std::vector<long> idx;
      for (std::size_t k = 1; k < tok.size(); ++k)
        idx.push_back(detail::parse_face_index(tok[k], mesh.vertices.size(), line_no));
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) faces.push_back({{idx[0], idx[k], idx[k + 1]}, line_no});
    }
  }
  for (const auto& [f, ln] : faces) {
    Triangle tri;
    for (int k = 0; k < 3; ++k) {
      if (f[k] < 0 || static_cast<std::size_t>(f[k]) >= mesh.vertices.size())
        throw InputError("line " + std::to_string(ln) + ": face index out of range");
      tri[k] = static_cast<std::uint32_t>(f[k]);
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mesh file '" + path + "'");
  return parse_obj(in);
}

/// Uniformly scales and translates so the bounding box is centered at the
/// origin with its longest side equal to 1.
inline Mesh normalize(const Mesh& mesh) {
  if (mesh.vertices.empty()) throw InputError("cannot normalize an empty mesh");
  const auto box = bounding_box(mesh);
  const double extent = (box.max - box.min).maxCoeff();
  if (!(extent > 0.0)) throw InputError("degenerate mesh: all vertices coincide");
  const Vec3 center = 0.5 * (box.min + box.max);
  Mesh out = mesh;
  for (auto& v : out.vertices) v = (v - center) / extent;
  return out;
}

namespace detail {

enum class RayHit { Miss, Hit, Degenerate, OnSurface };

// Moller-Trumbore with tolerance bands. Hits close to an edge or vertex are
// reported as Degenerate so the caller can retry with another direction.
inline RayHit ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& v0,
                           const Vec3& v1, const Vec3& v2) {
  constexpr double kEdgeTol = 1e-10;
  constexpr double kSurfaceTol = 1e-12;
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 n = e1.cross(e2);
  const double area2 = n.norm();
  if (area2 == 0.0) return RayHit::Miss;
  const Vec3 s = origin - v0;
  // Point lying in the triangle's plane and inside it counts as inside.
  const double plane_dist = n.dot(s) / area2;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(plane_dist) <= kSurfaceTol) {
    const Vec3 proj = s - plane_dist * n / area2;
    const double b1 = proj.cross(e2).dot(n) / (area2 * area2);
    const double b2 = e1.cross(proj).dot(n) / (area2 * area2);
    if (b1 >= -kEdgeTol && b2 >= -kEdgeTol && b1 + b2 <= 1.0 + kEdgeTol) return RayHit::OnSurface;
    if (std::abs(det) <= kEdgeTol * area2) return RayHit::Miss;
  }
  if (std::abs(det) <= kEdgeTol * area2) {
    // Ray parallel to the plane; grazing hits are ambiguous only if coplanar.
    return std::abs(plane_dist) <= 1e-9 ? RayHit::Degenerate : RayHit::Miss;
  }
  const double inv = 1.0 / det;
  const double u = s.dot(pvec) * inv;
  if (u < -kEdgeTol || u > 1.0 + kEdgeTol) return RayHit::Miss;
  const Vec3 qvec = s.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < -kEdgeTol || u + v > 1.0 + kEdgeTol) return RayHit::Miss;
  const double t = e2.dot(qvec) * inv;
  if (t < -kSurfaceTol) return RayHit::Miss;
  if (u < kEdgeTol || v < kEdgeTol || u + v > 1.0 - kEdgeTol) return RayHit::Degenerate;
  return RayHit::Hit;
}

}  // namespace detail

/// 1 iff x lies inside the closed mesh by ray-parity. Points on the surface
/// count as inside. Rays that pass through an edge or vertex are retried
/// along perturbed directions.
inline std::uint8_t point_in_mesh(const Mesh& mesh, const Vec3& x) {
  static const std::array<Vec3, 8> kDirections = [] {
    std::array<Vec3, 8> d{Vec3(0.2113248654, 0.6547005384, 0.7257016513),
                          Vec3(-0.5773502692, 0.2886751346, 0.7637626158),
                          Vec3(0.8017837257, -0.2672612419, 0.5345224838),
                          Vec3(-0.3015113446, -0.9045340337, 0.3015113446),
                          Vec3(0.1360827635, 0.5443310540, -0.8277591806),
                          Vec3(0.9128709292, 0.3651483717, 0.1825741858),
                          Vec3(-0.6666666667, 0.6666666667, -0.3333333333),
                          Vec3(0.4082482905, -0.8164965809, -0.4082482905)};
    for (auto& v : d) v.normalize();
    return d;
  }();
  const auto box = bounding_box(mesh);
  if (!box.contains(x)) return 0;
  int crossings = 0;
  for (const auto& dir : kDirections) {
    crossings = 0;
    bool degenerate = false;
    for (const auto& tri : mesh.triangles) {
      const auto hit = detail::ray_triangle(x, dir, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                            mesh.vertices[tri[2]]);
      if (hit == detail::RayHit::OnSurface) return 1;
      if (hit == detail::RayHit::Degenerate) {
        degenerate = true;
        break;
      }
      if (hit == detail::RayHit::Hit) ++crossings;
    }
    if (!degenerate) break;
  }
  return static_cast<std::uint8_t>(crossings % 2);
}

inline Labels label_points(const Mesh& mesh, const std::vector<Vec3>& points, unsigned threads = 1) {
  Labels labels(points.size());
  for_each_chunk(points.size(), threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) labels[k] = point_in_mesh(mesh, points[k]);
  });
  return labels;
}

struct SamplingOptions {
  std::size_t n_surface = 0;
  std::size_t n_uniform = 0;
  std::uint64_t seed = 0;
  double domain_half_extent = 0.6;
  double surface_sigma = 0.05;
  unsigned threads = 1;
};

/// Uniform samples in [-h, h]^3 followed by near-surface samples (area-weighted
/// surface point plus isotropic Gaussian offset), labeled by point_in_mesh.
inline LabeledPointSet sample_labeled_points(const Mesh& mesh, const SamplingOptions& opt) {
  if (opt.n_surface == 0 && opt.n_uniform == 0) throw ConfigError("sample counts are both zero");
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-opt.domain_half_extent, opt.domain_half_extent);
  LabeledPointSet out;
  out.points.reserve(opt.n_surface + opt.n_uniform);
  for (std::size_t k = 0; k < opt.n_uniform; ++k) {
    const double x = uni(rng);
    const double y = uni(rng);
    const double z = uni(rng);
    out.points.emplace_back(x, y, z);
  }
  if (opt.n_surface > 0) {
    if (mesh.triangles.empty()) throw InputError("surface sampling needs triangles");
    std::vector<double> areas;
    areas.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
      const Vec3& a = mesh.vertices[t[0]];
      areas.push_back(0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm());
    }
    std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, opt.surface_sigma);
    for (std::size_t k = 0; k < opt.n_surface; ++k) {
      const auto& t = mesh.triangles[pick(rng)];
      double r1 = unit(rng);
      double r2 = unit(rng);
      if (r1 + r2 > 1.0) {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
      }
      const Vec3& a = mesh.vertices[t[0]];
      Vec3 p = a + r1 * (mesh.vertices[t[1]] - a) + r2 * (mesh.vertices[t[2]] - a);
      const double dx = noise(rng);
      const double dy = noise(rng);
      const double dz = noise(rng);
      out.points.push_back(p + Vec3(dx, dy, dz));
    }
  }
  out.labels = label_points(mesh, out.points, opt.threads);
  return out;
}

inline double inside_fraction(const Labels& labels) {
  if (labels.empty()) return 0.0;
  std::size_t n = 0;
  for (auto l : labels) n += l;
  return static_cast<double>(n) / static_cast<double>(labels.size());
}

// Synthetic shapes used by tests, demos and the acceptance suite.
namespace shapes {

/// Closed axis-aligned box, outward-facing triangles.
inline Mesh box(const Vec3& lo, const Vec3& hi) {
  Mesh m;
  for (int k = 0; k < 8; ++k)
    m.vertices.emplace_back((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(), (k & 4) ? hi.z() : lo.z());
  const std::array<std::array<std::uint32_t, 4>, 6> quads{{{0, 2, 3, 1},
                                                           {4, 5, 7, 6},
                                                           {0, 1, 5, 4},
                                                           {2, 6, 7, 3},
                                                           {0, 4, 6, 2},
                                                           {1, 3, 7, 5}}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

inline Mesh centered_box(const Vec3& center, const Vec3& half) {
  return box(center - half, center + half);
}

/// Latitude-longitude sphere with pole vertices shared.
inline Mesh uv_sphere(double radius, int n_lat = 32, int n_lon = 64, const Vec3& center = Vec3::Zero()) {
  Mesh m;
  m.vertices.push_back(center + Vec3(0, 0, -radius));
  for (int i = 1; i < n_lat; ++i) {
    const double theta = -std::numbers::pi / 2 + std::numbers::pi * i / n_lat;
    for (int j = 0; j < n_lon; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / n_lon;
      m.vertices.push_back(center + radius * Vec3(std::cos(theta) * std::cos(phi),
                                                  std::cos(theta) * std::sin(phi), std::sin(theta)));
    }
  }
  m.vertices.push_back(center + Vec3(0, 0, radius));
  const auto ring = [&](int i, int j) {
    return static_cast<std::uint32_t>(1 + (i - 1) * n_lon + (j % n_lon));
  };
  const auto top = static_cast<std::uint32_t>(m.vertices.size() - 1);
  for (int j = 0; j < n_lon; ++j) m.triangles.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i + 1 < n_lat; ++i)
    for (int j = 0; j < n_lon; ++j) {
      m.triangles.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)});
      m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)});
    }
  for (int j = 0; j < n_lon; ++j) m.triangles.push_back({ring(n_lat - 1, j), ring(n_lat - 1, j + 1), top});
  return m;
}

/// Two disjoint cubes of side `side` centered at +-(offset, 0, 0).
inline Mesh dumbbell(double side = 0.3, double offset = 0.3) {
  Mesh m = centered_box(Vec3(-offset, 0, 0), Vec3::Constant(side / 2));
  m.append(centered_box(Vec3(offset, 0, 0), Vec3::Constant(side / 2)));
  return m;
}

/// Table top with four legs; legs stop just below the top so the pieces stay
/// disjoint closed shells.
inline Mesh table() {
  Mesh m = box(Vec3(-0.5, -0.3, 0.35), Vec3(0.5, 0.3, 0.45));
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0}) {
      const Vec3 c(sx * 0.4, sy * 0.2, 0.0);
      m.append(box(c + Vec3(-0.05, -0.05, -0.45), c + Vec3(0.05, 0.05, 0.34)));
    }
  return m;
}

/// Fuselage along x with a wing along y, built from three face-adjacent boxes.
inline Mesh airplane() {
  Mesh m = box(Vec3(-0.5, -0.06, -0.05), Vec3(0.5, 0.06, 0.05));
  m.append(box(Vec3(-0.1, -0.45, -0.05), Vec3(0.1, -0.06, 0.05)));
  m.append(box(Vec3(-0.1, 0.06, -0.05), Vec3(0.1, 0.45, 0.05)));
  return m;
}

}  // namespace shapes

}  // namespace sqdecomp
