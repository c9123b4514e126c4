#pragma once

// Tree documents (JSON), superquadric surface meshes (OBJ) and split-field
// tables (CSV).

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "sqdecomp/error.hpp"
#include "sqdecomp/fitter.hpp"
#include "sqdecomp/splitter.hpp"
#include "sqdecomp/sqtree.hpp"

namespace sqdecomp {

inline constexpr int kTreeFormatVersion = 1;

namespace detail {

inline nlohmann::json params_json(const Superquadric& sq) {
  const auto a = sq.to_array();
  return nlohmann::json(std::vector<double>(a.begin(), a.end()));
}

inline Superquadric params_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 12) throw InputError("superquadric parameters must be an array of 12 numbers");
  std::array<double, 12> a{};
  for (std::size_t k = 0; k < 12; ++k) {
    if (!j[k].is_number()) throw InputError("superquadric parameter is not a number");
    a[k] = j[k].get<double>();
  }
  return Superquadric::from_array(a);
}

inline std::string labels_to_string(const Labels& labels) {
  std::string s(labels.size(), '0');
  for (std::size_t k = 0; k < labels.size(); ++k) s[k] = labels[k] ? '1' : '0';
  return s;
}

inline Labels labels_from_string(const std::string& s) {
  Labels out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] != '0' && s[k] != '1') throw InputError("labels must be a string of 0/1");
    out[k] = s[k] == '1';
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace detail

inline nlohmann::json fit_config_json(const FitConfig& c) {
  return {{"max_depth", c.max_depth},
          {"iterations", c.iterations},
          {"step_size", c.step_size},
          {"momentum", c.momentum},
          {"gradient_clip", c.gradient_clip},
          {"restarts", c.restarts},
          {"sharpness", c.sharpness},
          {"sharpness_start", c.sharpness_start},
          {"anneal_fraction", c.anneal_fraction},
          {"seed", c.seed},
          {"a_min", c.bounds.a_min},
          {"a_max", c.bounds.a_max},
          {"e_min", c.bounds.e_min},
          {"e_max", c.bounds.e_max},
          {"translation_limit", c.translation_limit},
          {"samples_uniform", c.samples_uniform},
          {"samples_surface", c.samples_surface},
          {"surface_sigma", c.surface_sigma}};
}

/// Extra content stored next to the tree.
struct TreeMetadata {
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::optional<double>> level_iou;
  bool include_labels = false;
};

/// JSON document: version, max_depth, nodes (d, i, lambda_a, lambda_b,
/// degenerate, loss), fit metadata. Parameters are written as 12 numbers
/// [a1 a2 a3 e1 e2 t1 t2 t3 qw qx qy qz] with round-trip precision.
inline nlohmann::json tree_to_json(const SqTree& tree, const TreeMetadata& meta = {}) {
  if (tree.fitted_depth() < 1) throw InputError("tree has no fitted level");
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, n] : tree.nodes()) {
    nlohmann::json e{{"d", id.depth},
                     {"i", id.index},
                     {"lambda_a", detail::params_json(n.a)},
                     {"lambda_b", detail::params_json(n.b)},
                     {"degenerate", n.degenerate},
                     {"loss", n.loss}};
    if (meta.include_labels) e["labels"] = detail::labels_to_string(n.labels);
    nodes.push_back(std::move(e));
  }
  nlohmann::json iou = nlohmann::json::array();
  for (const auto& v : meta.level_iou) iou.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  nlohmann::json doc{{"format", "sqdecomp-tree"},
                     {"version", kTreeFormatVersion},
                     {"max_depth", tree.max_depth()},
                     {"nodes", nodes},
                     {"metadata", {{"config", meta.config}, {"level_iou", iou}}}};
  if (meta.include_labels) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : tree.points()) pts.push_back({p.x(), p.y(), p.z()});
    doc["points"] = std::move(pts);
  }
  return doc;
}

inline SqTree tree_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("format", "") != "sqdecomp-tree")
      throw InputError("not a superquadric tree document");
    const int version = doc.at("version").get<int>();
    if (version != kTreeFormatVersion)
      throw InputError("unsupported tree format version " + std::to_string(version));
    std::vector<Vec3> points;
    if (doc.contains("points"))
      for (const auto& p : doc["points"]) points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    SqTree tree(doc.at("max_depth").get<int>(), std::move(points));
    std::vector<SqPairNode> nodes;
    for (const auto& e : doc.at("nodes")) {
      SqPairNode n;
      n.id = {e.at("d").get<int>(), e.at("i").get<int>()};
      n.a = detail::params_from_json(e.at("lambda_a"));
      n.b = detail::params_from_json(e.at("lambda_b"));
      n.degenerate = e.value("degenerate", false);
      n.loss = e.value("loss", 0.0);
      if (e.contains("labels")) n.labels = detail::labels_from_string(e["labels"].get<std::string>());
      nodes.push_back(std::move(n));
    }
    std::sort(nodes.begin(), nodes.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    for (std::size_t k = 1; k < nodes.size(); ++k)
      if (nodes[k].id == nodes[k - 1].id) throw InputError("duplicate node " + nodes[k].id.str());
    for (auto& n : nodes) tree.set_node(std::move(n));
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed tree document: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(std::string("malformed tree document: ") + e.what());
  }
}

inline void save_tree(const SqTree& tree, const std::string& path, const TreeMetadata& meta = {}) {
  detail::write_text(path, tree_to_json(tree, meta).dump(2) + "\n");
}

inline SqTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open tree file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corrupt tree file '" + path + "': " + e.what());
  }
  return tree_from_json(doc);
}

/// Closed triangle mesh of one superquadric surface: a latitude/longitude
/// lattice with `resolution` latitude bands and 2*resolution longitudes; the
/// pole rows collapse to single vertices capped by triangle fans.
inline Mesh superquadric_mesh(const Superquadric& sq, int resolution) {
  if (resolution < 3) throw ConfigError("surface resolution must be at least 3");
  const int n_lat = resolution;
  const int n_lon = 2 * resolution;
  Mesh m;
  const auto eta = [&](int i) { return -std::numbers::pi / 2 + std::numbers::pi * i / n_lat; };
  const auto omega = [&](int j) { return -std::numbers::pi + 2.0 * std::numbers::pi * j / n_lon; };
  m.vertices.push_back(local_to_world(sq, Vec3(0, 0, -sq.size.z())));
  for (int i = 1; i < n_lat; ++i)
    for (int j = 0; j < n_lon; ++j) m.vertices.push_back(local_to_world(sq, surface_point_local(sq, eta(i), omega(j))));
  m.vertices.push_back(local_to_world(sq, Vec3(0, 0, sq.size.z())));
  const auto ring = [&](int i, int j) { return static_cast<std::uint32_t>(1 + (i - 1) * n_lon + (j % n_lon)); };
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

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// OBJ text with one `g sq_<d>_<i>_<a|b>` group per superquadric at level d.
inline std::string level_obj(const SqTree& tree, int depth, int resolution) {
  if (!tree.level_complete(depth)) throw InputError("level " + std::to_string(depth) + " is not fitted");
  std::ostringstream out;
  out << "# superquadric tree level " << depth << "\n";
  std::size_t base = 0;
  for (int i = 1; i <= nodes_at_level(depth); ++i) {
    const auto& n = tree.node({depth, i});
    for (Side s : {Side::A, Side::B}) {
      const Mesh m = superquadric_mesh(n.get(s), resolution);
      out << "g sq_" << depth << "_" << i << "_" << (s == Side::A ? 'a' : 'b') << "\n";
      for (const auto& v : m.vertices)
        out << "v " << format_double(v.x()) << " " << format_double(v.y()) << " " << format_double(v.z()) << "\n";
      for (const auto& t : m.triangles)
        out << "f " << base + t[0] + 1 << " " << base + t[1] + 1 << " " << base + t[2] + 1 << "\n";
      base += m.vertices.size();
    }
  }
  return out.str();
}

inline void export_level_obj(const SqTree& tree, int depth, const std::string& path, int resolution = 24) {
  detail::write_text(path, level_obj(tree, depth, resolution));
}

inline constexpr const char* kSplitCsvHeader = "x,y,Fa,Fb,da,db,selector";

/// CSV text for a split field: header `x,y,Fa,Fb,da,db,selector`, one row
/// per grid cell, x/y being the slice's in-plane coordinates.
inline std::string split_csv(const SplitField& f) {
  std::string out = std::string(kSplitCsvHeader) + "\n";
  for (std::size_t k = 0; k < f.size(); ++k) {
    out += format_double(f.u[k]) + "," + format_double(f.v[k]) + "," + format_double(f.f_a[k]) + "," +
           format_double(f.f_b[k]) + "," + format_double(f.d_a[k]) + "," + format_double(f.d_b[k]) + "," +
           side_name(f.selector[k]) + "\n";
  }
  return out;
}

/// Single-criterion table: x,y,<name>a,<name>b,selector where the selector is
/// the split by that criterion alone.
inline std::string field_csv(const SplitField& f, bool radial) {
  std::string out = radial ? "x,y,da,db,selector\n" : "x,y,Fa,Fb,selector\n";
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double va = radial ? f.d_a[k] : f.f_a[k];
    const double vb = radial ? f.d_b[k] : f.f_b[k];
    const Side s = radial ? f.selector_d[k] : f.selector_f[k];
    out += format_double(f.u[k]) + "," + format_double(f.v[k]) + "," + format_double(va) + "," + format_double(vb) +
           "," + side_name(s) + "\n";
  }
  return out;
}

inline void export_split_csv(const Superquadric& a, const Superquadric& b, const SliceSpec& slice,
                             const std::string& path) {
  detail::write_text(path, split_csv(split_field_2d(a, b, slice)));
}

}  // namespace sqdecomp
