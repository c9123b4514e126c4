#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "sqdecomp.hpp"

namespace sqtest {

using sqdecomp::Superquadric;
using sqdecomp::Vec3;

inline Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

inline Superquadric random_sq(std::mt19937_64& rng, double a_lo = 0.2, double a_hi = 1.0, double e_lo = 0.3,
                              double e_hi = 1.7, double t = 0.5) {
  std::uniform_real_distribution<double> ua(a_lo, a_hi), ue(e_lo, e_hi), ut(-t, t);
  Superquadric sq;
  sq.size = Vec3(ua(rng), ua(rng), ua(rng));
  sq.e1 = ue(rng);
  sq.e2 = ue(rng);
  sq.translation = Vec3(ut(rng), ut(rng), ut(rng));
  sq.rotation = random_rotation(rng);
  return sq;
}

inline Vec3 random_point(std::mt19937_64& rng, double h) {
  std::uniform_real_distribution<double> u(-h, h);
  return {u(rng), u(rng), u(rng)};
}

/// Direction-uniform point whose local frame value of F is `f`.
inline Vec3 point_with_f(const Superquadric& sq, double f, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 dir(n(rng), n(rng), n(rng));
  dir.normalize();
  // F is homogeneous of degree 2/e1 along rays from the center.
  const double f1 = sqdecomp::inside_outside(sq, sqdecomp::local_to_world(sq, dir));
  const double scale = std::pow(f / f1, sq.e1 / 2.0);
  return sqdecomp::local_to_world(sq, scale * dir);
}

/// Central-difference gradient of fn over the 11 parameters, using the same
/// parameterization as the analytic gradient.
template <class Fn>
sqdecomp::ParamGradient fd_gradient(const Superquadric& sq, Fn fn, double h = 1e-5) {
  sqdecomp::ParamGradient g;
  for (int k = 0; k < sqdecomp::kParamCount; ++k) {
    sqdecomp::ParamGradient step = sqdecomp::ParamGradient::Zero();
    step[k] = h;
    const double plus = fn(sqdecomp::offset_parameters(sq, step));
    const double minus = fn(sqdecomp::offset_parameters(sq, -step));
    g[k] = (plus - minus) / (2.0 * h);
  }
  return g;
}

template <class V>
double relative_error(const V& analytic, const V& numeric) {
  const double scale = std::max(numeric.norm(), 1e-12);
  return (analytic - numeric).norm() / scale;
}

inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("sqdecomp_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string mesh_obj(const sqdecomp::Mesh& m) {
  std::string s;
  for (const auto& v : m.vertices)
    s += "v " + sqdecomp::format_double(v.x()) + " " + sqdecomp::format_double(v.y()) + " " +
         sqdecomp::format_double(v.z()) + "\n";
  for (const auto& t : m.triangles)
    s += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
  return s;
}

}  // namespace sqtest
