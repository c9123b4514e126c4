#pragma once

// Superquadric primitives: parameters, the inside-outside function, the
// sigmoid occupancy built on it, and analytic parameter gradients.
//
// Local frame convention: a world point x maps to p = R(q)^T (x - t).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sqdecomp/error.hpp"

namespace sqdecomp {

using Vec3 = Eigen::Vector3d;

/// Lower clamp applied to |local coordinate| before fractional powers.
inline constexpr double kCoordClamp = 1e-9;

struct ParameterBounds {
  double a_min = 0.005;
  double a_max = 1.0;
  double e_min = 0.1;
  double e_max = 1.9;

  bool ordered() const {
    return a_min > 0.0 && a_min <= a_max && e_min > 0.0 && e_min <= e_max;
  }
};

/// Superquadric with sizes a1..a3, shape exponents e1 (latitude) and e2
/// (longitude), translation and unit quaternion rotation (scalar first when
/// written out as numbers).
struct Superquadric {
  Vec3 size = Vec3::Constant(0.5);
  double e1 = 1.0;
  double e2 = 1.0;
  Vec3 translation = Vec3::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  static Superquadric sphere(double radius, const Vec3& center = Vec3::Zero()) {
    Superquadric sq;
    sq.size = Vec3::Constant(radius);
    sq.translation = center;
    return sq;
  }

  /// Flat parameter list [a1 a2 a3 e1 e2 t1 t2 t3 qw qx qy qz].
  std::array<double, 12> to_array() const {
    return {size.x(),        size.y(),        size.z(),        e1,
            e2,              translation.x(), translation.y(), translation.z(),
            rotation.w(),    rotation.x(),    rotation.y(),    rotation.z()};
  }

  static Superquadric from_array(const std::array<double, 12>& p) {
    Superquadric sq;
    sq.size = Vec3(p[0], p[1], p[2]);
    sq.e1 = p[3];
    sq.e2 = p[4];
    sq.translation = Vec3(p[5], p[6], p[7]);
    sq.rotation = Eigen::Quaterniond(p[8], p[9], p[10], p[11]);
    return sq;
  }

  bool operator==(const Superquadric& o) const {
    return to_array() == o.to_array();
  }
};

/// Throws ConfigError when `sq` violates size/shape bounds or |q| != 1.
inline void validate(const Superquadric& sq, const ParameterBounds& bounds = {}) {
  const auto in = [](double v, double lo, double hi) {
    return std::isfinite(v) && v >= lo && v <= hi;
  };
  for (int k = 0; k < 3; ++k) {
    if (!in(sq.size[k], bounds.a_min, bounds.a_max))
      throw ConfigError("superquadric size a" + std::to_string(k + 1) + " = " +
                        std::to_string(sq.size[k]) + " outside bounds");
  }
  if (!in(sq.e1, bounds.e_min, bounds.e_max) || !in(sq.e2, bounds.e_min, bounds.e_max))
    throw ConfigError("superquadric shape exponent outside bounds");
  if (!sq.translation.allFinite())
    throw ConfigError("superquadric translation is not finite");
  if (std::abs(sq.rotation.norm() - 1.0) > 1e-9)
    throw ConfigError("superquadric rotation is not a unit quaternion");
}

struct OccupancyConfig {
  double sharpness = 10.0;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline Vec3 world_to_local(const Superquadric& sq, const Vec3& x) {
  return sq.rotation.conjugate() * (x - sq.translation);
}

inline Vec3 local_to_world(const Superquadric& sq, const Vec3& p) {
  return sq.rotation * p + sq.translation;
}

namespace detail {

// Intermediate quantities of the inside-outside function at a local point:
//   X = |px/a1|^(2/e2), Y = |py/a2|^(2/e2), Z = |pz/a3|^(2/e1)
//   S = X + Y, A = S^(e2/e1), F = A + Z, G = F^e1
struct ShapeTerms {
  Vec3 local;     // p
  Vec3 coord;     // clamped |p|
  Vec3 log_unit;  // log(|p_k| / a_k)
  double X, Y, Z, S, A, F, G;
  double log_S, log_F;
};

}  // namespace detail

/// Superquadric with its rotation matrix and per-parameter constants cached,
/// for evaluating many points against one parameter set.
class PreparedSq {
 public:
  explicit PreparedSq(const Superquadric& sq)
      : sq_(sq),
        rot_(sq.rotation.toRotationMatrix()),
        log_size_(sq.size.array().log().matrix()),
        pow_xy_(2.0 / sq.e2),
        pow_z_(2.0 / sq.e1),
        pow_s_(sq.e2 / sq.e1) {}

  const Superquadric& params() const { return sq_; }
  const Eigen::Matrix3d& rotation() const { return rot_; }

  Vec3 to_local(const Vec3& x) const { return rot_.transpose() * (x - sq_.translation); }

  detail::ShapeTerms terms_local(const Vec3& p) const {
    detail::ShapeTerms t;
    t.local = p;
    for (int k = 0; k < 3; ++k) {
      t.coord[k] = std::max(std::abs(p[k]), kCoordClamp);
      t.log_unit[k] = std::log(t.coord[k]) - log_size_[k];
    }
    t.X = std::exp(pow_xy_ * t.log_unit[0]);
    t.Y = std::exp(pow_xy_ * t.log_unit[1]);
    t.Z = std::exp(pow_z_ * t.log_unit[2]);
    t.S = t.X + t.Y;
    t.log_S = std::log(t.S);
    t.A = std::exp(pow_s_ * t.log_S);
    t.F = t.A + t.Z;
    t.log_F = std::log(t.F);
    t.G = std::exp(sq_.e1 * t.log_F);
    return t;
  }

  detail::ShapeTerms terms(const Vec3& x) const { return terms_local(to_local(x)); }

  /// F^e1 at a world point.
  double stable(const Vec3& x) const { return terms(x).G; }

  /// d(F^e1)/d(parameters) from precomputed terms; see ParamGradient.
  Eigen::Matrix<double, 11, 1> stable_gradient(const detail::ShapeTerms& t) const {
    const double e1 = sq_.e1;
    const double e2 = sq_.e2;
    const Vec3& p = t.local;
    const double dG_dF = e1 * t.G / t.F;
    const double dA_dS = e2 / e1 * t.A / t.S;

    // Zero where the coordinate clamp is active.
    Vec3 dG_dp = Vec3::Zero();
    const auto sgn = [](double v) { return v < 0.0 ? -1.0 : 1.0; };
    if (std::abs(p.x()) > kCoordClamp) dG_dp.x() = dG_dF * dA_dS * pow_xy_ * t.X / t.coord.x() * sgn(p.x());
    if (std::abs(p.y()) > kCoordClamp) dG_dp.y() = dG_dF * dA_dS * pow_xy_ * t.Y / t.coord.y() * sgn(p.y());
    if (std::abs(p.z()) > kCoordClamp) dG_dp.z() = dG_dF * pow_z_ * t.Z / t.coord.z() * sgn(p.z());

    Eigen::Matrix<double, 11, 1> g;
    g[0] = -dG_dF * dA_dS * pow_xy_ * t.X / sq_.size.x();
    g[1] = -dG_dF * dA_dS * pow_xy_ * t.Y / sq_.size.y();
    g[2] = -dG_dF * pow_z_ * t.Z / sq_.size.z();

    // e1 enters through G = F^e1, A = S^(e2/e1) and Z.
    const double dA_de1 = -t.A * t.log_S * e2 / (e1 * e1);
    const double dZ_de1 = -t.Z * t.log_unit.z() * 2.0 / (e1 * e1);
    g[3] = t.G * t.log_F + dG_dF * (dA_de1 + dZ_de1);

    // e2 enters through X, Y and the outer exponent of A.
    const double dX_de2 = -t.X * t.log_unit.x() * 2.0 / (e2 * e2);
    const double dY_de2 = -t.Y * t.log_unit.y() * 2.0 / (e2 * e2);
    g[4] = dG_dF * (t.A * t.log_S / e1 + dA_dS * (dX_de2 + dY_de2));

    // p = R^T (x - t)  =>  dG/dt = -R dG/dp.
    g.segment<3>(5) = -(rot_ * dG_dp);
    // Body-frame tangent: p(w) = exp(-[w]) p  =>  dG/dw = dG/dp x p.
    g.segment<3>(8) = dG_dp.cross(p);
    return g;
  }

 private:
  Superquadric sq_;
  Eigen::Matrix3d rot_;
  Vec3 log_size_;
  double pow_xy_;
  double pow_z_;
  double pow_s_;
};

/// Inside-outside function F: < 1 inside, 1 on the surface, > 1 outside.
inline double inside_outside(const Superquadric& sq, const Vec3& x) {
  return PreparedSq(sq).terms(x).F;
}

/// F^e1. Same ordering relative to 1 as F, better conditioned.
inline double inside_outside_stable(const Superquadric& sq, const Vec3& x) {
  return PreparedSq(sq).stable(x);
}

/// Distance from x to the surface along the ray from the superquadric center.
/// At the center itself this is the smallest semi-axis.
inline double radial_distance(const Superquadric& sq, const Vec3& x) {
  const PreparedSq prep(sq);
  const Vec3 p = prep.to_local(x);
  const double r = p.norm();
  if (r == 0.0) return sq.size.minCoeff();
  const auto t = prep.terms_local(p);
  return r * std::abs(1.0 - std::exp(-0.5 * sq.e1 * t.log_F));
}

/// Occupancy logit s * (1 - F^e1).
inline double occupancy_logit(const Superquadric& sq, const Vec3& x,
                              const OccupancyConfig& cfg) {
  return cfg.sharpness * (1.0 - inside_outside_stable(sq, x));
}

/// Soft insideness sigma(s * (1 - F^e1)) in (0, 1).
inline double occupancy(const Superquadric& sq, const Vec3& x,
                        const OccupancyConfig& cfg) {
  return sigmoid(occupancy_logit(sq, x, cfg));
}

/// Partials ordered (a1, a2, a3, e1, e2, t1, t2, t3, w1, w2, w3), where w is a
/// body-frame rotation tangent: q' = q * exp(w / 2).
using ParamGradient = Eigen::Matrix<double, 11, 1>;
inline constexpr int kParamCount = 11;

/// Value of F^e1 together with its gradient with respect to the parameters.
struct StableValueGradient {
  double value;
  ParamGradient gradient;
};

inline StableValueGradient inside_outside_stable_gradient(const Superquadric& sq,
                                                          const Vec3& x) {
  const PreparedSq prep(sq);
  const auto t = prep.terms(x);
  return {t.G, prep.stable_gradient(t)};
}

/// Gradient of the occupancy sigma(s (1 - F^e1)) with respect to the 11
/// parameters. Throws NumericalError if any component is not finite.
inline ParamGradient occupancy_gradient(const Superquadric& sq, const Vec3& x,
                                        const OccupancyConfig& cfg) {
  const auto vg = inside_outside_stable_gradient(sq, x);
  const double z = cfg.sharpness * (1.0 - vg.value);
  // dsigma/dz = sigma(z) sigma(-z)
  const double slope = sigmoid(z) * sigmoid(-z);
  ParamGradient g = -cfg.sharpness * slope * vg.gradient;
  if (!g.allFinite()) throw NumericalError("non-finite occupancy gradient");
  return g;
}

/// Rotation update q * exp(w / 2) followed by renormalization.
inline Eigen::Quaterniond rotate_by_tangent(const Eigen::Quaterniond& q, const Vec3& w) {
  const double angle = w.norm();
  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (angle > 0.0) dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle));
  Eigen::Quaterniond out = q * dq;
  out.normalize();
  return out;
}

/// Returns sq moved by `step` in the 11-parameter space (no bounds applied).
inline Superquadric offset_parameters(const Superquadric& sq, const ParamGradient& step) {
  Superquadric out = sq;
  out.size += step.segment<3>(0);
  out.e1 += step[3];
  out.e2 += step[4];
  out.translation += step.segment<3>(5);
  out.rotation = rotate_by_tangent(sq.rotation, step.segment<3>(8));
  return out;
}

/// Clamps sizes and exponents into `bounds`.
inline void project_to_bounds(Superquadric& sq, const ParameterBounds& bounds) {
  for (int k = 0; k < 3; ++k) sq.size[k] = std::clamp(sq.size[k], bounds.a_min, bounds.a_max);
  sq.e1 = std::clamp(sq.e1, bounds.e_min, bounds.e_max);
  sq.e2 = std::clamp(sq.e2, bounds.e_min, bounds.e_max);
  sq.rotation.normalize();
}

namespace detail {
inline double signed_pow(double base, double exponent) {
  const double m = std::pow(std::abs(base), exponent);
  return base < 0.0 ? -m : m;
}
}  // namespace detail

/// Local-frame surface point at latitude eta in [-pi/2, pi/2] and longitude
/// omega in [-pi, pi).
inline Vec3 surface_point_local(const Superquadric& sq, double eta, double omega) {
  const double ce = detail::signed_pow(std::cos(eta), sq.e1);
  const double se = detail::signed_pow(std::sin(eta), sq.e1);
  return {sq.size.x() * ce * detail::signed_pow(std::cos(omega), sq.e2),
          sq.size.y() * ce * detail::signed_pow(std::sin(omega), sq.e2),
          sq.size.z() * se};
}

/// World-space surface grid, row-major over n_theta latitudes (poles
/// included) by n_phi longitudes.
inline std::vector<Vec3> surface_points(const Superquadric& sq, int n_theta, int n_phi) {
  if (n_theta < 3 || n_phi < 3) throw ConfigError("surface grid needs at least 3x3 samples");
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  for (int i = 0; i < n_theta; ++i) {
    const double eta = -std::numbers::pi / 2 + std::numbers::pi * i / (n_theta - 1);
    for (int j = 0; j < n_phi; ++j) {
      const double omega = -std::numbers::pi + 2.0 * std::numbers::pi * j / n_phi;
      pts.push_back(local_to_world(sq, surface_point_local(sq, eta, omega)));
    }
  }
  return pts;
}

}  // namespace sqdecomp
