#pragma once

// Intersection-over-union between superquadric reconstructions and ground
// truth, on a labeled point sample or on a regular voxel grid.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqdecomp/geometry.hpp"
#include "sqdecomp/parallel.hpp"
#include "sqdecomp/sqtree.hpp"
#include "sqdecomp/superquadric.hpp"

namespace sqdecomp {

/// 1 iff some superquadric's occupancy is strictly above 0.5.
inline std::uint8_t predicted_label(std::span<const Superquadric> sqs, const Vec3& x,
                                    const OccupancyConfig& cfg) {
  for (const auto& sq : sqs)
    if (occupancy(sq, x, cfg) > 0.5) return 1;
  return 0;
}

inline Labels predicted_labels(std::span<const Superquadric> sqs, std::span<const Vec3> points,
                               const OccupancyConfig& cfg, unsigned threads = 1) {
  Labels out(points.size());
  for_each_chunk(points.size(), threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) out[k] = predicted_label(sqs, points[k], cfg);
  });
  return out;
}

/// |P and T| / |P or T|; nullopt when both label vectors are empty.
inline std::optional<double> iou(std::span<const std::uint8_t> predicted,
                                 std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) throw InputError("iou: label vectors differ in length");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const bool p = predicted[k] != 0;
    const bool t = truth[k] != 0;
    inter += static_cast<std::size_t>(p && t);
    uni += static_cast<std::size_t>(p || t);
  }
  if (uni == 0) return std::nullopt;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::optional<double> iou(std::span<const Superquadric> sqs, const LabeledPointSet& truth,
                                 const OccupancyConfig& cfg, unsigned threads = 1) {
  if (truth.size() == 0) throw InputError("iou: empty point set");
  return iou(predicted_labels(sqs, truth.points, cfg, threads), truth.labels);
}

/// Cell centers of a res^3 grid over [-h, h]^3.
inline std::vector<Vec3> voxel_centers(int resolution, double half_extent = 0.6) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(resolution) * resolution * resolution);
  const auto c = [&](int i) { return -half_extent + 2.0 * half_extent * (i + 0.5) / resolution; };
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      for (int k = 0; k < resolution; ++k) pts.emplace_back(c(i), c(j), c(k));
  return pts;
}

/// Voxel-grid IoU with mesh insideness from point_in_mesh.
inline std::optional<double> voxel_iou(std::span<const Superquadric> sqs, const Mesh& mesh, int resolution,
                                       const OccupancyConfig& cfg, unsigned threads = 1) {
  if (resolution < 8) throw ConfigError("voxel resolution must be at least 8");
  const auto centers = voxel_centers(resolution);
  return iou(predicted_labels(sqs, centers, cfg, threads), label_points(mesh, centers, threads));
}

struct IoUReport {
  std::string method = "sampled";
  std::size_t samples = 0;
  std::vector<std::optional<double>> per_level;  // index 0 is level 1

  /// Single tab-separated record: method, samples, then IoU per level in
  /// percent with one decimal ("n/a" where undefined).
  std::string to_tsv() const {
    std::string line = method + "\t" + std::to_string(samples);
    for (const auto& v : per_level) {
      char buf[32];
      if (v) std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
      else std::snprintf(buf, sizeof buf, "n/a");
      line += "\t";
      line += buf;
    }
    return line;
  }

  /// Column names matching to_tsv.
  std::string tsv_header() const {
    std::string line = "method\tsamples";
    for (std::size_t d = 1; d <= per_level.size(); ++d) line += "\tlevel_" + std::to_string(d);
    return line;
  }

  nlohmann::json to_json() const {
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t d = 0; d < per_level.size(); ++d) {
      nlohmann::json e{{"level", d + 1}};
      if (per_level[d]) {
        e["iou"] = *per_level[d];
        e["status"] = "ok";
      } else {
        e["iou"] = nullptr;
        e["status"] = "empty_union";
      }
      levels.push_back(std::move(e));
    }
    return {{"method", method}, {"samples", samples}, {"levels", levels}};
  }
};

/// Sampled IoU of every fitted level. Degenerate nodes contribute no volume.
inline IoUReport evaluate_levels(const SqTree& tree, const LabeledPointSet& truth,
                                 const OccupancyConfig& cfg, unsigned threads = 1) {
  IoUReport r;
  r.method = "sampled";
  r.samples = truth.size();
  for (int d = 1; d <= tree.fitted_depth(); ++d) {
    const auto sqs = tree.active_leaves_at(d);
    r.per_level.push_back(iou(sqs, truth, cfg, threads));
  }
  return r;
}

inline IoUReport evaluate_levels_voxel(const SqTree& tree, const Mesh& mesh, int resolution,
                                       const OccupancyConfig& cfg, unsigned threads = 1) {
  if (resolution < 8) throw ConfigError("voxel resolution must be at least 8");
  IoUReport r;
  r.method = "voxel";
  const auto centers = voxel_centers(resolution);
  r.samples = centers.size();
  const auto truth = label_points(mesh, centers, threads);
  for (int d = 1; d <= tree.fitted_depth(); ++d) {
    const auto sqs = tree.active_leaves_at(d);
    r.per_level.push_back(iou(predicted_labels(sqs, centers, cfg, threads), truth));
  }
  return r;
}

}  // namespace sqdecomp
