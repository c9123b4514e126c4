#pragma once

// Implicit space separation between the two superquadrics of a pair, and the
// child label sets derived from it.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sqdecomp/error.hpp"
#include "sqdecomp/geometry.hpp"
#include "sqdecomp/superquadric.hpp"

namespace sqdecomp {

enum class Side : std::uint8_t { A = 0, B = 1 };

inline char side_name(Side s) { return s == Side::A ? 'A' : 'B'; }
inline Side other(Side s) { return s == Side::A ? Side::B : Side::A; }

struct SplitAssignment {
  std::vector<Side> sides;

  std::size_t size() const { return sides.size(); }
};

/// Which superquadric of the pair owns x.
///   inside exactly one   -> that one
///   inside both          -> argmax F^e1
///   outside both         -> argmin radial distance
/// Boundary points (F^e1 == 1) count as inside; ties go to A.
inline Side split_point(const Superquadric& a, const Superquadric& b, const Vec3& x) {
  const double ga = inside_outside_stable(a, x);
  const double gb = inside_outside_stable(b, x);
  const bool in_a = ga <= 1.0;
  const bool in_b = gb <= 1.0;
  if (in_a && !in_b) return Side::A;
  if (in_b && !in_a) return Side::B;
  if (in_a && in_b) return gb > ga ? Side::B : Side::A;
  return radial_distance(b, x) < radial_distance(a, x) ? Side::B : Side::A;
}

inline SplitAssignment split_pair(const Superquadric& a, const Superquadric& b,
                                  std::span<const Vec3> points, unsigned threads = 1) {
  SplitAssignment out;
  out.sides.resize(points.size());
  for_each_chunk(points.size(), threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) out.sides[k] = split_point(a, b, points[k]);
  });
  return out;
}

/// parent AND (assignment == which).
inline Labels child_labels(std::span<const std::uint8_t> parent, const SplitAssignment& assignment,
                           Side which) {
  if (parent.size() != assignment.size())
    throw InputError("child_labels: " + std::to_string(parent.size()) + " labels vs " +
                     std::to_string(assignment.size()) + " assignments");
  Labels out(parent.size());
  for (std::size_t k = 0; k < parent.size(); ++k)
    out[k] = static_cast<std::uint8_t>(parent[k] != 0 && assignment.sides[k] == which);
  return out;
}

/// Planar slice through space. `plane` names the two varying world axes; the
/// third axis is fixed at `offset`. Grid columns run along the first axis.
struct SliceSpec {
  enum class Plane { XY, XZ, YZ };
  Plane plane = Plane::XY;
  double offset = 0.0;
  double center_u = 0.0;
  double center_v = 0.0;
  double half_extent = 1.0;
  int width = 128;
  int height = 128;

  /// Grid coordinate; symmetric about the center by construction.
  double u(int i) const { return center_u + half_extent * (2.0 * i - (width - 1)) / (width - 1); }
  double v(int j) const { return center_v + half_extent * (2.0 * j - (height - 1)) / (height - 1); }

  Vec3 point(int i, int j) const {
    switch (plane) {
      case Plane::XY: return {u(i), v(j), offset};
      case Plane::XZ: return {u(i), offset, v(j)};
      case Plane::YZ: return {offset, u(i), v(j)};
    }
    return {};
  }
};

inline SliceSpec::Plane parse_plane(const std::string& s) {
  if (s == "xy") return SliceSpec::Plane::XY;
  if (s == "xz") return SliceSpec::Plane::XZ;
  if (s == "yz") return SliceSpec::Plane::YZ;
  throw ConfigError("unknown slice plane '" + s + "' (expected xy, xz or yz)");
}

/// Dense per-cell evaluation of both superquadrics on a slice, row-major with
/// rows along v.
struct SplitField {
  SliceSpec slice;
  std::vector<double> u, v;
  std::vector<double> f_a, f_b;  // F^e1
  std::vector<double> d_a, d_b;  // radial distance
  std::vector<Side> selector;    // split_point
  std::vector<Side> selector_f;  // argmax F^e1 everywhere
  std::vector<Side> selector_d;  // argmin radial distance everywhere

  std::size_t size() const { return selector.size(); }
};

inline SplitField split_field_2d(const Superquadric& a, const Superquadric& b, const SliceSpec& slice) {
  if (slice.width < 2 || slice.height < 2) throw ConfigError("slice grid must be at least 2x2");
  if (!(slice.half_extent > 0.0)) throw ConfigError("slice half extent must be positive");
  SplitField f;
  f.slice = slice;
  const std::size_t n = static_cast<std::size_t>(slice.width) * slice.height;
  for (auto* vec : {&f.u, &f.v, &f.f_a, &f.f_b, &f.d_a, &f.d_b}) vec->reserve(n);
  for (int j = 0; j < slice.height; ++j) {
    for (int i = 0; i < slice.width; ++i) {
      const Vec3 x = slice.point(i, j);
      f.u.push_back(slice.u(i));
      f.v.push_back(slice.v(j));
      const double fa = inside_outside_stable(a, x);
      const double fb = inside_outside_stable(b, x);
      const double da = radial_distance(a, x);
      const double db = radial_distance(b, x);
      f.f_a.push_back(fa);
      f.f_b.push_back(fb);
      f.d_a.push_back(da);
      f.d_b.push_back(db);
      f.selector.push_back(split_point(a, b, x));
      f.selector_f.push_back(fb > fa ? Side::B : Side::A);
      f.selector_d.push_back(db < da ? Side::B : Side::A);
    }
  }
  return f;
}

}  // namespace sqdecomp
