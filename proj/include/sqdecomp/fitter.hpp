#pragma once

// Hierarchical fitting of superquadric pairs by direct minimization of the
// per-node binary cross-entropy occupancy loss.

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "sqdecomp/error.hpp"
#include "sqdecomp/geometry.hpp"
#include "sqdecomp/metrics.hpp"
#include "sqdecomp/parallel.hpp"
#include "sqdecomp/splitter.hpp"
#include "sqdecomp/sqtree.hpp"
#include "sqdecomp/superquadric.hpp"

namespace sqdecomp {

struct FitConfig {
  int max_depth = 1;
  int iterations = 2000;
  double step_size = 0.01;
  double momentum = 0.9;
  /// Gradients with a larger Euclidean norm are rescaled to this norm before
  /// the momentum update; 0 disables clipping.
  double gradient_clip = 1.0;
  int restarts = 4;
  double sharpness = 10.0;
  /// Sharpness continuation: when sharpness > sharpness_start, the optimizer
  /// raises s geometrically from sharpness_start to sharpness over the first
  /// anneal_fraction of each run. Only iterates at the final sharpness are
  /// eligible as the result.
  double sharpness_start = 10.0;
  double anneal_fraction = 0.7;
  std::uint64_t seed = 0;
  ParameterBounds bounds;
  /// Translations are kept inside [-limit, limit]^3.
  double translation_limit = 1.0;
  std::size_t samples_uniform = 5000;
  std::size_t samples_surface = 5000;
  double surface_sigma = 0.05;
  unsigned threads = 0;

  OccupancyConfig occupancy() const { return {sharpness}; }

  void validate() const {
    if (max_depth < 1 || max_depth > 12) throw ConfigError("max_depth must be in [1, 12]");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (!(gradient_clip >= 0.0)) throw ConfigError("gradient_clip must be non-negative");
    if (!(sharpness > 0.0)) throw ConfigError("sharpness must be positive");
    if (!(sharpness_start > 0.0)) throw ConfigError("sharpness_start must be positive");
    if (!(anneal_fraction >= 0.0 && anneal_fraction <= 1.0)) throw ConfigError("anneal_fraction must be in [0, 1]");
    if (!bounds.ordered()) throw ConfigError("parameter bounds must be positive and ordered");
    if (!(translation_limit > 0.0)) throw ConfigError("translation_limit must be positive");
    if (samples_uniform + samples_surface == 0) throw ConfigError("sample counts are both zero");
    if (!(surface_sigma >= 0.0)) throw ConfigError("surface_sigma must be non-negative");
  }
};

struct FitReport {
  std::map<NodeId, double> node_loss;       // mean BCE per node
  std::map<NodeId, bool> node_degenerate;
  std::map<NodeId, long> node_iterations;
  std::vector<std::optional<double>> level_iou;  // on the training sample
  double total_loss_raw = 0.0;                   // sum over nodes and points
  double total_loss_mean = 0.0;                  // sum over nodes of per-node means
  double wall_seconds = 0.0;
};

using PairVector = Eigen::Matrix<double, 2 * kParamCount, 1>;

struct PairLoss {
  double loss = 0.0;
  PairVector gradient = PairVector::Zero();

  PairLoss& operator+=(const PairLoss& o) {
    loss += o.loss;
    gradient += o.gradient;
    return *this;
  }
};

namespace detail {

// BCE of sigmoid(z) against a binary label, written on the logit.
inline double bce_logit(double z, std::uint8_t label) { return label ? softplus(-z) : softplus(z); }

inline void check_inputs(std::span<const Vec3> points, std::span<const std::uint8_t> labels) {
  if (points.empty()) throw InputError("node loss: empty point set");
  if (points.size() != labels.size()) throw InputError("node loss: points and labels differ in length");
}

}  // namespace detail

/// Mean over points of BCE(max(g_a, g_b), label).
inline double node_loss(const Superquadric& a, const Superquadric& b, std::span<const Vec3> points,
                        std::span<const std::uint8_t> labels, const OccupancyConfig& cfg,
                        unsigned threads = 1) {
  detail::check_inputs(points, labels);
  const PreparedSq pa(a);
  const PreparedSq pb(b);
  const double sum = chunked_reduce(points.size(), threads, 0.0, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      const double g = std::min(pa.stable(points[k]), pb.stable(points[k]));
      s += detail::bce_logit(cfg.sharpness * (1.0 - g), labels[k]);
    }
    return s;
  });
  return sum / static_cast<double>(points.size());
}

/// node_loss with its gradient over the 22 pair parameters (A then B, each in
/// ParamGradient order). The max takes the subgradient of the larger branch,
/// ties to A.
inline PairLoss node_loss_gradient(const Superquadric& a, const Superquadric& b,
                                   std::span<const Vec3> points, std::span<const std::uint8_t> labels,
                                   const OccupancyConfig& cfg, unsigned threads = 1) {
  detail::check_inputs(points, labels);
  const double s = cfg.sharpness;
  const PreparedSq pa(a);
  const PreparedSq pb(b);
  PairLoss total = chunked_reduce(points.size(), threads, PairLoss{}, [&](std::size_t lo, std::size_t hi) {
    PairLoss part;
    for (std::size_t k = lo; k < hi; ++k) {
      const auto ta = pa.terms(points[k]);
      const auto tb = pb.terms(points[k]);
      const bool use_b = tb.G < ta.G;
      const double z = s * (1.0 - (use_b ? tb.G : ta.G));
      part.loss += detail::bce_logit(z, labels[k]);
      // d bce / dz = sigmoid(z) - label, dz / dG = -s
      const double dz = sigmoid(z) - static_cast<double>(labels[k]);
      if (dz == 0.0) continue;
      const auto grad = use_b ? pb.stable_gradient(tb) : pa.stable_gradient(ta);
      part.gradient.segment<kParamCount>(use_b ? kParamCount : 0) += -s * dz * grad;
    }
    return part;
  });
  const double inv_n = 1.0 / static_cast<double>(points.size());
  total.loss *= inv_n;
  total.gradient *= inv_n;
  if (!total.gradient.allFinite()) throw NumericalError("non-finite node loss gradient");
  return total;
}

struct InitPair {
  Superquadric a;
  Superquadric b;
};

/// Pair initialization from inside-point moments: two ellipsoids splitting the
/// principal axis at centroid +- L/4, where L is the full length of a uniform
/// distribution with the observed spread. Throws if no point is inside.
inline InitPair init_node(std::span<const Vec3> points, std::span<const std::uint8_t> labels,
                          const ParameterBounds& bounds = {}) {
  detail::check_inputs(points, labels);
  Vec3 centroid = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t k = 0; k < points.size(); ++k)
    if (labels[k]) {
      centroid += points[k];
      ++n;
    }
  if (n == 0) throw InputError("init_node: no inside-labeled points");
  centroid /= static_cast<double>(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < points.size(); ++k)
    if (labels[k]) {
      const Vec3 d = points[k] - centroid;
      cov += d * d.transpose();
    }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // Columns ordered by decreasing spread, right-handed.
  Eigen::Matrix3d axes;
  Vec3 spread;
  for (int k = 0; k < 3; ++k) {
    axes.col(k) = eig.eigenvectors().col(2 - k);
    spread[k] = std::sqrt(std::max(eig.eigenvalues()[2 - k], 0.0));
  }
  if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);
  const Eigen::Quaterniond rot(axes);

  const double kUniformHalf = std::sqrt(3.0);  // half-extent / std-dev of a uniform
  const double length = 2.0 * kUniformHalf * spread[0];
  const auto clamp_a = [&](double v) { return std::clamp(v, bounds.a_min, bounds.a_max); };

  InitPair pair;
  for (Superquadric* sq : {&pair.a, &pair.b}) {
    sq->e1 = std::clamp(1.0, bounds.e_min, bounds.e_max);
    sq->e2 = sq->e1;
    sq->rotation = rot.normalized();
    sq->size = Vec3(clamp_a(0.5 * kUniformHalf * spread[0]), clamp_a(kUniformHalf * spread[1]),
                    clamp_a(kUniformHalf * spread[2]));
  }
  pair.a.translation = centroid + 0.25 * length * axes.col(0);
  pair.b.translation = centroid - 0.25 * length * axes.col(0);
  return pair;
}

namespace detail {

// Alternative start: A covers the whole inside set, B sits nested at half size.
inline InitPair nested_init(const InitPair& split, const ParameterBounds& bounds) {
  InitPair out = split;
  const Vec3 center = 0.5 * (split.a.translation + split.b.translation);
  out.a.translation = center;
  out.b.translation = center;
  out.a.size.x() = std::clamp(2.0 * split.a.size.x(), bounds.a_min, bounds.a_max);
  out.b.size = (0.5 * out.a.size).cwiseMax(bounds.a_min);
  return out;
}

// Re-labels the local axes so that local z (the axis governed by e1) is the
// original local axis `z_axis`. Orientation stays right-handed.
inline InitPair with_z_axis(InitPair pair, int z_axis) {
  if (z_axis == 2) return pair;
  const int order[3][3] = {{1, 2, 0}, {0, 2, 1}, {0, 1, 2}};
  for (Superquadric* sq : {&pair.a, &pair.b}) {
    const Eigen::Matrix3d r = sq->rotation.toRotationMatrix();
    Eigen::Matrix3d out;
    Vec3 size;
    for (int k = 0; k < 3; ++k) {
      out.col(k) = r.col(order[z_axis][k]);
      size[k] = sq->size[order[z_axis][k]];
    }
    if (out.determinant() < 0.0) out.col(0) = -out.col(0);
    sq->rotation = Eigen::Quaterniond(out).normalized();
    sq->size = size;
  }
  return pair;
}

inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t node_seed(std::uint64_t seed, NodeId id) {
  return mix_seed(seed ^ mix_seed((static_cast<std::uint64_t>(id.depth) << 32) |
                                  static_cast<std::uint32_t>(id.index)));
}

inline void jitter(Superquadric& sq, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double scale = 0.25 * sq.size.maxCoeff();
  const double dx = n01(rng), dy = n01(rng), dz = n01(rng);
  sq.translation += scale * Vec3(dx, dy, dz);
  const double wx = n01(rng), wy = n01(rng), wz = n01(rng);
  sq.rotation = rotate_by_tangent(sq.rotation, 0.3 * Vec3(wx, wy, wz));
}

inline double sharpness_at(const FitConfig& cfg, int iteration) {
  if (cfg.sharpness <= cfg.sharpness_start) return cfg.sharpness;
  const double ramp = cfg.anneal_fraction * cfg.iterations;
  if (iteration >= ramp) return cfg.sharpness;
  return cfg.sharpness_start * std::pow(cfg.sharpness / cfg.sharpness_start, iteration / ramp);
}

}  // namespace detail

/// Starting pair of restart `r`: even restarts use init_node, odd ones the
/// nested variant; r / 2 selects which principal axis becomes local z
/// (smallest, largest, middle spread); restarts from 6 on are also jittered.
inline InitPair restart_start(const InitPair& split, const ParameterBounds& bounds, int restart,
                              std::mt19937_64& rng) {
  InitPair start = restart % 2 == 0 ? split : detail::nested_init(split, bounds);
  const int z_axis[3] = {2, 0, 1};
  start = detail::with_z_axis(start, z_axis[(restart / 2) % 3]);
  if (restart >= 6) {
    detail::jitter(start.a, rng);
    detail::jitter(start.b, rng);
    project_to_bounds(start.a, bounds);
    project_to_bounds(start.b, bounds);
  }
  return start;
}

/// Optional observer, called with the parameters at every iterate.
struct FitHooks {
  std::function<void(NodeId, int restart, int iteration, const Superquadric&, const Superquadric&)> on_iterate;
};

struct NodeFit {
  Superquadric a;
  Superquadric b;
  double loss = 0.0;
  double initial_loss = 0.0;
  bool degenerate = false;
  long iterations = 0;
};

/// Sentinel for nodes with nothing to fit: two minimum-size spheres at the
/// point centroid.
inline NodeFit degenerate_fit(std::span<const Vec3> points, std::span<const std::uint8_t> labels,
                              const FitConfig& cfg) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : points) c += p;
  if (!points.empty()) c /= static_cast<double>(points.size());
  NodeFit out;
  out.a = Superquadric::sphere(cfg.bounds.a_min, c);
  out.a.e1 = out.a.e2 = std::clamp(1.0, cfg.bounds.e_min, cfg.bounds.e_max);
  out.b = out.a;
  out.degenerate = true;
  if (!points.empty()) out.loss = out.initial_loss = node_loss(out.a, out.b, points, labels, cfg.occupancy(), cfg.threads);
  return out;
}

/// Best pair over `restarts` runs of heavy-ball gradient descent with cosine
/// step decay (see restart_start for the starting pairs). Each run keeps its
/// best iterate at the target sharpness, the starting pair included, so the
/// result never has a higher loss than the first start. Parameters are
/// projected to the bounds after every step.
inline NodeFit fit_node(std::span<const Vec3> points, std::span<const std::uint8_t> labels,
                        const FitConfig& cfg, NodeId id = {}, const FitHooks& hooks = {}) {
  cfg.validate();
  detail::check_inputs(points, labels);
  bool any_inside = false;
  for (auto l : labels) any_inside = any_inside || l != 0;
  if (!any_inside) return degenerate_fit(points, labels, cfg);

  const auto target = cfg.occupancy();
  const InitPair split = init_node(points, labels, cfg.bounds);
  std::mt19937_64 rng(detail::node_seed(cfg.seed, id));

  NodeFit best;
  best.loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    const InitPair start = restart_start(split, cfg.bounds, r, rng);
    Superquadric a = start.a;
    Superquadric b = start.b;
    Superquadric best_a = a, best_b = b;
    double run_best = node_loss(a, b, points, labels, target, cfg.threads);
    if (r == 0) best.initial_loss = run_best;
    PairVector velocity = PairVector::Zero();
    for (int it = 0; it < cfg.iterations; ++it) {
      if (hooks.on_iterate) hooks.on_iterate(id, r, it, a, b);
      const OccupancyConfig occ{detail::sharpness_at(cfg, it)};
      const PairLoss pl = node_loss_gradient(a, b, points, labels, occ, cfg.threads);
      if (occ.sharpness == target.sharpness && pl.loss < run_best) {
        run_best = pl.loss;
        best_a = a;
        best_b = b;
      }
      const double lr = cfg.step_size * 0.5 * (1.0 + std::cos(std::numbers::pi * it / cfg.iterations));
      PairVector grad = pl.gradient;
      if (const double norm = grad.norm(); cfg.gradient_clip > 0.0 && norm > cfg.gradient_clip)
        grad *= cfg.gradient_clip / norm;
      velocity = cfg.momentum * velocity + grad;
      a = offset_parameters(a, -lr * velocity.head<kParamCount>());
      b = offset_parameters(b, -lr * velocity.tail<kParamCount>());
      for (Superquadric* sq : {&a, &b}) {
        project_to_bounds(*sq, cfg.bounds);
        sq->translation = sq->translation.cwiseMax(-cfg.translation_limit).cwiseMin(cfg.translation_limit);
      }
    }
    const double last = node_loss(a, b, points, labels, target, cfg.threads);
    if (last < run_best) {
      run_best = last;
      best_a = a;
      best_b = b;
    }
    if (run_best < best.loss) {
      best.loss = run_best;
      best.a = best_a;
      best.b = best_b;
    }
    best.iterations += cfg.iterations;
  }
  return best;
}

/// Breadth-first fit of every node down to cfg.max_depth. Child labels are
/// the parent's labels restricted to the parent superquadric's share of the
/// split. Children of a degenerate node are degenerate without optimization.
inline std::pair<SqTree, FitReport> fit_tree(const LabeledPointSet& pointset, const FitConfig& cfg,
                                             const FitHooks& hooks = {}) {
  cfg.validate();
  if (pointset.size() == 0) throw InputError("fit_tree: empty point set");
  if (pointset.labels.size() != pointset.size()) throw InputError("fit_tree: label count mismatch");
  const auto start = std::chrono::steady_clock::now();

  SqTree tree(cfg.max_depth, pointset.points);
  FitReport report;
  const auto& pts = tree.points();
  for (int d = 1; d <= cfg.max_depth; ++d) {
    for (int i = 1; i <= nodes_at_level(d); ++i) {
      const NodeId id{d, i};
      SqPairNode node;
      node.id = id;
      node.labels = d == 1 ? pointset.labels : derive_labels(tree, id, cfg.threads);
      NodeFit fit;
      if (d > 1 && tree.node(parent_node(id)).degenerate)
        fit = degenerate_fit(pts, node.labels, cfg);
      else
        fit = fit_node(pts, node.labels, cfg, id, hooks);
      node.a = fit.a;
      node.b = fit.b;
      node.degenerate = fit.degenerate;
      node.loss = fit.loss;
      report.node_loss[id] = fit.loss;
      report.node_degenerate[id] = fit.degenerate;
      report.node_iterations[id] = fit.iterations;
      report.total_loss_mean += fit.loss;
      report.total_loss_raw += fit.loss * static_cast<double>(pts.size());
      tree.set_node(std::move(node));
    }
  }
  report.level_iou = evaluate_levels(tree, pointset, cfg.occupancy(), cfg.threads).per_level;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(tree), std::move(report)};
}

}  // namespace sqdecomp
