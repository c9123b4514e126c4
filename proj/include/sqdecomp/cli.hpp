#pragma once

// Command-line front end: fit, eval, export and split-demo subcommands.
//
// Exit codes: 0 success, 1 input error, 2 configuration error, 3 internal.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sqdecomp/config.hpp"
#include "sqdecomp/error.hpp"
#include "sqdecomp/export.hpp"
#include "sqdecomp/fitter.hpp"
#include "sqdecomp/geometry.hpp"
#include "sqdecomp/metrics.hpp"
#include "sqdecomp/splitter.hpp"

namespace sqdecomp::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kConfigError = 2, kInternalError = 3 };

/// Parses "a1,a2,a3,e1,e2,t1,t2,t3[,qw,qx,qy,qz]". The quaternion is
/// normalized; the result must satisfy the default parameter bounds.
inline Superquadric parse_sq_spec(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad superquadric spec '" + text + "'");
    }
  }
  if (v.size() != 8 && v.size() != 12)
    throw ConfigError("superquadric spec needs 8 or 12 comma-separated numbers, got " + std::to_string(v.size()));
  std::array<double, 12> p{};
  std::copy(v.begin(), v.end(), p.begin());
  if (v.size() == 8) p[8] = 1.0;
  Superquadric sq = Superquadric::from_array(p);
  if (!(sq.rotation.norm() > 0.0)) throw ConfigError("superquadric rotation quaternion is zero");
  sq.rotation.normalize();
  validate(sq);
  return sq;
}

/// Two overlapping superquadrics in the xy plane: a rotated box-like
/// superquadric and a rounded one.
inline std::pair<Superquadric, Superquadric> fig3_preset() {
  Superquadric a;
  a.size = Vec3(0.32, 0.14, 0.15);
  a.e1 = 0.4;
  a.e2 = 0.3;
  a.translation = Vec3(-0.12, -0.05, 0.0);
  a.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.5, Vec3::UnitZ()));
  Superquadric b;
  b.size = Vec3(0.18, 0.26, 0.2);
  b.e1 = 1.0;
  b.e2 = 1.0;
  b.translation = Vec3(0.2, 0.1, 0.0);
  return {a, b};
}

namespace detail {

inline std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
  return buf;
}

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw InputError("cannot create output directory '" + p.string() + "'");
  return p;
}

inline LabeledPointSet evaluation_sample(const Mesh& mesh, std::size_t n, std::uint64_t seed, unsigned threads) {
  SamplingOptions opt;
  opt.n_uniform = n;
  opt.seed = seed;
  opt.threads = threads;
  return sample_labeled_points(mesh, opt);
}

// Evaluation samples use a stream separate from the training samples.
inline std::uint64_t eval_seed(std::uint64_t seed) { return seed ^ 0x5EED0E7A1ULL; }

}  // namespace detail

struct FitOptions {
  std::string mesh_path;
  std::string config_path;
  std::string out_dir = ".";
  std::size_t eval_samples = 50000;
  bool store_labels = false;
};

/// Fit a mesh: writes tree.json and report.json into the output directory and
/// prints per-level IoU on a held-out uniform sample.
inline int cmd_fit(const FitOptions& opt, const FitConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Mesh mesh = normalize(load_mesh(opt.mesh_path));
  SamplingOptions samp;
  samp.n_uniform = cfg.samples_uniform;
  samp.n_surface = cfg.samples_surface;
  samp.surface_sigma = cfg.surface_sigma;
  samp.seed = cfg.seed;
  samp.threads = cfg.threads;
  const LabeledPointSet train = sample_labeled_points(mesh, samp);
  auto [tree, report] = fit_tree(train, cfg);

  const auto eval = detail::evaluation_sample(mesh, opt.eval_samples, detail::eval_seed(cfg.seed), cfg.threads);
  const IoUReport iou_report = evaluate_levels(tree, eval, cfg.occupancy(), cfg.threads);

  const auto dir = detail::ensure_dir(opt.out_dir);
  TreeMetadata meta;
  meta.config = fit_config_json(cfg);
  meta.config["mesh"] = std::filesystem::path(opt.mesh_path).filename().string();
  meta.config["eval_samples"] = opt.eval_samples;
  meta.level_iou = iou_report.per_level;
  meta.include_labels = opt.store_labels;
  save_tree(tree, (dir / "tree.json").string(), meta);

  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, loss] : report.node_loss)
    nodes.push_back({{"d", id.depth},
                     {"i", id.index},
                     {"loss", loss},
                     {"degenerate", report.node_degenerate.at(id)},
                     {"iterations", report.node_iterations.at(id)}});
  nlohmann::json train_iou = nlohmann::json::array();
  for (const auto& v : report.level_iou) train_iou.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  const nlohmann::json report_doc{{"nodes", nodes},
                                  {"total_loss_raw", report.total_loss_raw},
                                  {"total_loss_mean", report.total_loss_mean},
                                  {"train_level_iou", train_iou},
                                  {"eval", iou_report.to_json()},
                                  {"wall_seconds", report.wall_seconds}};
  sqdecomp::detail::write_text((dir / "report.json").string(), report_doc.dump(2) + "\n");

  out << "fitted " << tree.node_count() << " pair nodes to depth " << tree.fitted_depth() << " ("
      << train.size() << " training points, " << report.wall_seconds << " s)\n";
  for (std::size_t d = 0; d < iou_report.per_level.size(); ++d)
    out << "level " << d + 1 << ": IoU " << detail::percent(iou_report.per_level[d]) << "\n";
  out << "wrote " << (dir / "tree.json").string() << "\n";
  return kOk;
}

struct EvalOptions {
  std::string tree_path;
  std::string mesh_path;
  std::string out_dir;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  int voxel_resolution = 0;  // 0: sampled estimator
  unsigned threads = 0;
};

/// Per-level IoU of a saved tree against a mesh, as TSV on standard output
/// (and iou.json / iou.tsv when an output directory is given).
inline int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  const SqTree tree = load_tree(opt.tree_path);
  const Mesh mesh = normalize(load_mesh(opt.mesh_path));
  if (tree.fitted_depth() < 1) throw InputError("tree has no fitted level");
  const OccupancyConfig occ{};
  IoUReport report;
  if (opt.voxel_resolution > 0) {
    report = evaluate_levels_voxel(tree, mesh, opt.voxel_resolution, occ, opt.threads);
  } else {
    if (opt.samples == 0) throw ConfigError("--samples must be positive");
    const auto eval = detail::evaluation_sample(mesh, opt.samples, detail::eval_seed(opt.seed), opt.threads);
    report = evaluate_levels(tree, eval, occ, opt.threads);
  }
  out << report.tsv_header() << "\n" << report.to_tsv() << "\n";
  if (!opt.out_dir.empty()) {
    const auto dir = detail::ensure_dir(opt.out_dir);
    sqdecomp::detail::write_text((dir / "iou.json").string(), report.to_json().dump(2) + "\n");
    sqdecomp::detail::write_text((dir / "iou.tsv").string(), report.to_tsv() + "\n");
  }
  return kOk;
}

struct ExportOptions {
  std::string tree_path;
  std::string out_dir = ".";
  int level = 0;  // 0: every fitted level
  int resolution = 24;
};

inline int cmd_export(const ExportOptions& opt, std::ostream& out) {
  const SqTree tree = load_tree(opt.tree_path);
  const auto dir = detail::ensure_dir(opt.out_dir);
  const int first = opt.level == 0 ? 1 : opt.level;
  const int last = opt.level == 0 ? tree.fitted_depth() : opt.level;
  if (first < 1 || last < first) throw InputError("tree has no fitted level to export");
  for (int d = first; d <= last; ++d) {
    const auto path = dir / ("level_" + std::to_string(d) + ".obj");
    export_level_obj(tree, d, path.string(), opt.resolution);
    out << "wrote " << path.string() << " (" << 2 * nodes_at_level(d) << " superquadrics)\n";
  }
  return kOk;
}

struct SplitDemoOptions {
  std::string preset = "fig3";
  std::string sq_a;
  std::string sq_b;
  std::string plane = "xy";
  double offset = 0.0;
  double half_extent = 0.6;
  int width = 121;
  int height = 121;
  std::string out_dir = ".";
  std::string prefix = "split";
};

/// Writes <prefix>_F.csv (F^e1 fields and their argmax split),
/// <prefix>_d.csv (radial distances and their argmin split) and
/// <prefix>_split.csv (the combined inside/outside split).
inline int cmd_split_demo(const SplitDemoOptions& opt, std::ostream& out) {
  Superquadric a, b;
  if (!opt.sq_a.empty() || !opt.sq_b.empty()) {
    if (opt.sq_a.empty() || opt.sq_b.empty()) throw ConfigError("--sq-a and --sq-b must be given together");
    a = parse_sq_spec(opt.sq_a);
    b = parse_sq_spec(opt.sq_b);
  } else if (opt.preset == "fig3") {
    std::tie(a, b) = fig3_preset();
  } else {
    throw ConfigError("unknown preset '" + opt.preset + "'");
  }
  SliceSpec slice;
  slice.plane = parse_plane(opt.plane);
  slice.offset = opt.offset;
  slice.half_extent = opt.half_extent;
  slice.width = opt.width;
  slice.height = opt.height;
  const SplitField field = split_field_2d(a, b, slice);
  const auto dir = detail::ensure_dir(opt.out_dir);
  const std::vector<std::pair<std::string, std::string>> files{
      {opt.prefix + "_F.csv", field_csv(field, false)},
      {opt.prefix + "_d.csv", field_csv(field, true)},
      {opt.prefix + "_split.csv", split_csv(field)}};
  for (const auto& [name, text] : files) {
    sqdecomp::detail::write_text((dir / name).string(), text);
    out << "wrote " << (dir / name).string() << "\n";
  }
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Hierarchical superquadric-pair decomposition of 3D meshes"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  FitConfig cfg;
  auto* fit = app.add_subcommand("fit", "fit a superquadric-pair tree to a mesh");
  fit->add_option("mesh", fit_opt.mesh_path, "OBJ mesh")->required();
  fit->add_option("--config", fit_opt.config_path, "key = value config file");
  fit->add_option("--out-dir", fit_opt.out_dir, "output directory");
  fit->add_option("--eval-samples", fit_opt.eval_samples, "uniform evaluation samples");
  fit->add_flag("--store-labels", fit_opt.store_labels, "store points and node labels in tree.json");
  int max_depth = 0, iterations = 0, restarts = 0;
  double sharpness = 0.0, step_size = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples_uniform = 0, samples_surface = 0;
  unsigned threads = 0;
  auto* o_depth = fit->add_option("--max-depth", max_depth, "tree depth");
  auto* o_iter = fit->add_option("--iterations", iterations, "optimizer iterations per restart");
  auto* o_rest = fit->add_option("--restarts", restarts, "restarts per node");
  auto* o_sharp = fit->add_option("--sharpness", sharpness, "occupancy sharpness s");
  auto* o_step = fit->add_option("--step-size", step_size, "initial step size");
  auto* o_seed = fit->add_option("--seed", seed, "random seed");
  auto* o_su = fit->add_option("--samples-uniform", samples_uniform, "uniform training samples");
  auto* o_ss = fit->add_option("--samples-surface", samples_surface, "near-surface training samples");
  auto* o_thr = fit->add_option("--threads", threads, "worker threads (0 = auto)");

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "per-level IoU of a saved tree");
  eval->add_option("tree", eval_opt.tree_path, "tree JSON")->required();
  eval->add_option("mesh", eval_opt.mesh_path, "OBJ mesh")->required();
  eval->add_option("--samples", eval_opt.samples, "uniform evaluation samples");
  eval->add_option("--seed", eval_opt.seed, "sampling seed");
  eval->add_option("--voxel", eval_opt.voxel_resolution, "use a voxel grid of this resolution instead");
  eval->add_option("--threads", eval_opt.threads, "worker threads (0 = auto)");
  eval->add_option("--out-dir", eval_opt.out_dir, "also write iou.json and iou.tsv here");

  ExportOptions export_opt;
  auto* exp = app.add_subcommand("export", "write superquadric surfaces of a tree level as OBJ");
  exp->add_option("tree", export_opt.tree_path, "tree JSON")->required();
  exp->add_option("--level", export_opt.level, "level to export (default: all)");
  exp->add_option("--resolution", export_opt.resolution, "latitude bands per superquadric");
  exp->add_option("--out-dir", export_opt.out_dir, "output directory");

  SplitDemoOptions split_opt;
  auto* split = app.add_subcommand("split-demo", "tabulate the space split of a superquadric pair on a slice");
  split->add_option("--preset", split_opt.preset, "built-in pair (fig3)");
  split->add_option("--sq-a", split_opt.sq_a, "a1,a2,a3,e1,e2,t1,t2,t3[,qw,qx,qy,qz]");
  split->add_option("--sq-b", split_opt.sq_b, "a1,a2,a3,e1,e2,t1,t2,t3[,qw,qx,qy,qz]");
  split->add_option("--plane", split_opt.plane, "slice plane: xy, xz or yz");
  split->add_option("--offset", split_opt.offset, "slice position along the remaining axis");
  split->add_option("--extent", split_opt.half_extent, "half width of the slice");
  split->add_option("--width", split_opt.width, "grid columns");
  split->add_option("--height", split_opt.height, "grid rows");
  split->add_option("--out-dir", split_opt.out_dir, "output directory");
  split->add_option("--prefix", split_opt.prefix, "file name prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*fit) {
      if (!fit_opt.config_path.empty()) cfg = load_fit_config(fit_opt.config_path);
      if (o_depth->count()) cfg.max_depth = max_depth;
      if (o_iter->count()) cfg.iterations = iterations;
      if (o_rest->count()) cfg.restarts = restarts;
      if (o_sharp->count()) cfg.sharpness = sharpness;
      if (o_step->count()) cfg.step_size = step_size;
      if (o_seed->count()) cfg.seed = seed;
      if (o_su->count()) cfg.samples_uniform = samples_uniform;
      if (o_ss->count()) cfg.samples_surface = samples_surface;
      if (o_thr->count()) cfg.threads = threads;
      return cmd_fit(fit_opt, cfg, out);
    }
    if (*eval) return cmd_eval(eval_opt, out);
    if (*exp) return cmd_export(export_opt, out);
    if (*split) return cmd_split_demo(split_opt, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace sqdecomp::cli
