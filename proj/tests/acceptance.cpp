// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

#include "sqdecomp/cli.hpp"
#include "support.hpp"

using namespace sqdecomp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome sphere_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ur(0.01, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    Superquadric sq = Superquadric::sphere(ur(rng), sqtest::random_point(rng, 0.5));
    sq.rotation = sqtest::random_rotation(rng);
    for (int k = 0; k < 100; ++k) {
      const Vec3 x = sqtest::random_point(rng, 1.5);
      const double expected = std::abs(world_to_local(sq, x).norm() - sq.size.x());
      worst = std::max(worst, std::abs(radial_distance(sq, x) - expected));
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-12 && t < 1.0, fmt("max error %.2e, %.3f s", worst, t)};
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> uf(0.2, 5.0);
  const OccupancyConfig occ{10.0};
  double worst = 0.0;
  int tested = 0;
  while (tested < 1000) {
    const Superquadric sq = sqtest::random_sq(rng, 0.2, 1.0, 0.3, 1.7, 0.5);
    const Vec3 x = sqtest::point_with_f(sq, uf(rng), rng);
    if (world_to_local(sq, x).cwiseAbs().minCoeff() < 1e-3) continue;
    const auto analytic = occupancy_gradient(sq, x, occ);
    const auto numeric = sqtest::fd_gradient(sq, [&](const Superquadric& s) { return occupancy(s, x, occ); }, 1e-5);
    worst = std::max(worst, sqtest::relative_error(analytic, numeric));
    ++tested;
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 10.0, fmt("worst relative error %.2e over %d cases, %.2f s", worst, tested, t)};
}

Outcome sign_equivalence() {
  std::mt19937_64 rng(103);
  const OccupancyConfig occ{10.0};
  long violations = 0, excluded = 0;
  for (int k = 0; k < 100000; ++k) {
    const Superquadric sq = sqtest::random_sq(rng, 0.005, 1.0, 0.1, 1.9, 0.5);
    const Vec3 x = sqtest::random_point(rng, 1.2);
    const double f = inside_outside(sq, x);
    if (std::abs(f - 1.0) < 1e-12) {
      ++excluded;
      continue;
    }
    const bool a = f < 1.0;
    const bool b = inside_outside_stable(sq, x) < 1.0;
    const bool c = occupancy(sq, x, occ) > 0.5;
    violations += !(a == b && b == c);
  }
  return {violations == 0, fmt("%ld violations, %ld excluded", violations, excluded)};
}

struct SplitCorpus {
  long partition_violations = 0;
  long containment_violations = 0;
  long containment_checked = 0;
};

const SplitCorpus& split_corpus() {
  static const SplitCorpus corpus = [] {
    SplitCorpus c;
    std::mt19937_64 rng(104);
    std::bernoulli_distribution coin(0.5);
    for (int p = 0; p < 1000; ++p) {
      const Superquadric a = sqtest::random_sq(rng, 0.05, 0.6, 0.1, 1.9, 0.4);
      const Superquadric b = sqtest::random_sq(rng, 0.05, 0.6, 0.1, 1.9, 0.4);
      std::vector<Vec3> pts(1000);
      Labels parent(1000);
      for (int k = 0; k < 1000; ++k) {
        pts[k] = sqtest::random_point(rng, 1.0);
        parent[k] = coin(rng);
      }
      const auto s = split_pair(a, b, pts);
      const auto la = child_labels(parent, s, Side::A);
      const auto lb = child_labels(parent, s, Side::B);
      for (int k = 0; k < 1000; ++k) {
        if ((la[k] | lb[k]) != parent[k] || (la[k] & lb[k]) != 0) ++c.partition_violations;
        const double fa = inside_outside(a, pts[k]);
        const double fb = inside_outside(b, pts[k]);
        const bool in_a = fa < 1.0, in_b = fb < 1.0;
        if (in_a != in_b) {
          ++c.containment_checked;
          if (s.sides[k] != (in_a ? Side::A : Side::B)) ++c.containment_violations;
        }
      }
    }
    return c;
  }();
  return corpus;
}

Outcome split_partition() {
  const auto& c = split_corpus();
  return {c.partition_violations == 0, fmt("%ld violations over 10^6 points", c.partition_violations)};
}

Outcome containment_respect() {
  const auto& c = split_corpus();
  return {c.containment_violations == 0 && c.containment_checked > 0,
          fmt("%ld violations over %ld single-containment points", c.containment_violations, c.containment_checked)};
}

// ---------------------------------------------------------------------------

Superquadric random_ground_truth(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Superquadric gt;
  gt.size = Vec3(0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng));
  gt.e1 = 0.3 + 1.2 * u(rng);
  gt.e2 = 0.3 + 1.2 * u(rng);
  gt.translation = 0.2 * Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
  gt.rotation = sqtest::random_rotation(rng);
  return gt;
}

// Half uniform in the sampling domain, half near the surface; labels from the
// superquadric's own inside test.
LabeledPointSet ground_truth_points(const Superquadric& gt, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  LabeledPointSet ps;
  for (std::size_t k = 0; k < n / 2; ++k) ps.points.push_back(sqtest::random_point(rng, 0.6));
  for (std::size_t k = n / 2; k < n; ++k) {
    const double eta = (u(rng) - 0.5) * std::numbers::pi;
    const double omega = (2.0 * u(rng) - 1.0) * std::numbers::pi;
    const Vec3 p = local_to_world(gt, surface_point_local(gt, eta, omega));
    ps.points.push_back(p + Vec3(noise(rng), noise(rng), noise(rng)));
  }
  for (const auto& p : ps.points) ps.labels.push_back(inside_outside(gt, p) <= 1.0);
  return ps;
}

Outcome single_sq_recovery() {
  const auto t0 = Clock::now();
  FitConfig cfg;
  cfg.max_depth = 1;
  cfg.sharpness = 200.0;
  cfg.step_size = 0.002;
  cfg.restarts = 6;
  cfg.iterations = 400;
  cfg.threads = 0;
  std::mt19937_64 rng(106);
  int good = 0;
  std::string ious;
  for (int c = 0; c < 20; ++c) {
    const Superquadric gt = random_ground_truth(rng);
    const auto train = ground_truth_points(gt, 10000, rng);
    cfg.seed = static_cast<std::uint64_t>(c);
    const auto [tree, report] = fit_tree(train, cfg);
    // Evaluation sample: uniform in a box around the ground truth.
    LabeledPointSet eval;
    const double r = 1.2 * gt.size.maxCoeff();
    for (int k = 0; k < 50000; ++k) {
      const Vec3 p = gt.translation + sqtest::random_point(rng, r);
      eval.points.push_back(p);
      eval.labels.push_back(inside_outside(gt, p) <= 1.0);
    }
    const auto& node = tree.node({1, 1});
    double best = 0.0;
    for (const Superquadric* sq : {&node.a, &node.b}) {
      const std::vector<Superquadric> one{*sq};
      best = std::max(best, iou(one, eval, cfg.occupancy(), cfg.threads).value_or(0.0));
    }
    good += best >= 0.95;
    ious += fmt(" %.3f", best);
  }
  const double t = seconds_since(t0);
  return {good >= 18 && t < 300.0, fmt("%d/20 cases >= 0.95, %.1f s; best-SQ IoU:%s", good, t, ious.c_str())};
}

struct DumbbellFit {
  SqTree tree;
  std::vector<std::optional<double>> voxel;
  double seconds = 0.0;
};

const DumbbellFit& dumbbell_fit() {
  static const DumbbellFit fit = [] {
    const auto t0 = Clock::now();
    const Mesh mesh = normalize(shapes::dumbbell(0.3, 0.3));
    FitConfig cfg;
    cfg.max_depth = 2;
    cfg.iterations = 800;
    cfg.restarts = 8;
    cfg.sharpness = 200.0;
    cfg.step_size = 0.005;
    cfg.seed = 7;
    SamplingOptions opt;
    opt.n_uniform = cfg.samples_uniform;
    opt.n_surface = cfg.samples_surface;
    opt.seed = cfg.seed;
    const auto train = sample_labeled_points(mesh, opt);
    auto [tree, report] = fit_tree(train, cfg);
    DumbbellFit out;
    out.voxel = evaluate_levels_voxel(tree, mesh, 64, cfg.occupancy()).per_level;
    out.tree = std::move(tree);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return fit;
}

Outcome level_refinement() {
  const auto& f = dumbbell_fit();
  const double l1 = f.voxel[0].value_or(0.0);
  const double l2 = f.voxel[1].value_or(0.0);
  return {l2 >= 0.85 && l2 >= l1 - 0.02 && f.seconds < 120.0,
          fmt("voxel IoU level 1 %.3f, level 2 %.3f, %.1f s", l1, l2, f.seconds)};
}

SqTree quick_tree(const Mesh& mesh, int depth, int iterations, std::uint64_t seed) {
  FitConfig cfg;
  cfg.max_depth = depth;
  cfg.iterations = iterations;
  cfg.restarts = 2;
  cfg.seed = seed;
  cfg.samples_uniform = cfg.samples_surface = 4000;
  SamplingOptions opt;
  opt.n_uniform = cfg.samples_uniform;
  opt.n_surface = cfg.samples_surface;
  opt.seed = seed;
  return fit_tree(sample_labeled_points(mesh, opt), cfg).first;
}

const SqTree& table_tree() {
  static const SqTree tree = quick_tree(normalize(shapes::table()), 3, 150, 8);
  return tree;
}

Outcome tree_shape() {
  const SqTree& tree = table_tree();
  const std::size_t leaves = tree.all_leaves_at(3).size();
  const std::string obj = level_obj(tree, 3, 12);
  std::size_t groups = 0;
  std::istringstream in(obj);
  for (std::string line; std::getline(in, line);) groups += line.rfind("g sq_3_", 0) == 0;
  return {tree.node_count() == 7 && leaves == 8 && groups == 8,
          fmt("%zu pair nodes, %zu leaf SQs, %zu OBJ groups", tree.node_count(), leaves, groups)};
}

Outcome estimator_consistency() {
  std::string detail;
  bool pass = true;
  // Analytic case: unit sphere inside the cube of side 2.
  {
    std::mt19937_64 rng(109);
    LabeledPointSet cube;
    for (int k = 0; k < 100000; ++k) {
      cube.points.push_back(sqtest::random_point(rng, 1.0));
      cube.labels.push_back(1);
    }
    const std::vector<Superquadric> sphere{Superquadric::sphere(1.0)};
    const double v = iou(sphere, cube, OccupancyConfig{}).value_or(-1.0);
    pass = pass && std::abs(v - std::numbers::pi / 6) <= 0.02;
    detail += fmt("sphere-in-cube %.4f (pi/6 = %.4f)", v, std::numbers::pi / 6);
  }
  struct Case {
    const char* name;
    Mesh mesh;
    const SqTree* tree;
  };
  static const SqTree sphere_tree = quick_tree(normalize(shapes::uv_sphere(0.5)), 1, 200, 9);
  static const SqTree airplane_tree = quick_tree(normalize(shapes::airplane()), 2, 200, 10);
  const std::vector<Case> cases{{"sphere", normalize(shapes::uv_sphere(0.5)), &sphere_tree},
                                {"dumbbell", normalize(shapes::dumbbell()), &dumbbell_fit().tree},
                                {"table", normalize(shapes::table()), &table_tree()},
                                {"airplane", normalize(shapes::airplane()), &airplane_tree}};
  double worst = 0.0;
  for (const auto& c : cases) {
    SamplingOptions opt;
    opt.n_uniform = 100000;
    opt.seed = 1009;
    const auto eval = sample_labeled_points(c.mesh, opt);
    const auto sampled = evaluate_levels(*c.tree, eval, OccupancyConfig{}).per_level;
    const auto voxel = evaluate_levels_voxel(*c.tree, c.mesh, 64, OccupancyConfig{}).per_level;
    detail += fmt("; %s", c.name);
    for (std::size_t d = 0; d < sampled.size(); ++d) {
      const double diff = std::abs(sampled[d].value_or(0.0) - voxel[d].value_or(0.0));
      worst = std::max(worst, diff);
      detail += fmt(" L%zu %.3f/%.3f", d + 1, sampled[d].value_or(0.0), voxel[d].value_or(0.0));
    }
  }
  pass = pass && worst <= 0.02;
  return {pass, fmt("max |sampled - voxel| %.4f; ", worst) + detail};
}

std::string run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sqdecomp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw std::runtime_error("sqdecomp exited with " + std::to_string(code) + ": " + err.str());
  return out.str();
}

std::string g_cli_tree;  // tree.json written by the determinism check

Outcome determinism() {
  const std::string dir = sqtest::temp_dir("acceptance_determinism");
  sqtest::write_file(dir + "/table.obj", sqtest::mesh_obj(shapes::table()));
  std::vector<std::string> args{"fit",  dir + "/table.obj", "--max-depth", "2",    "--iterations", "80",
                                "--restarts", "2",          "--seed",      "42",   "--samples-uniform", "3000",
                                "--samples-surface", "3000", "--store-labels"};
  auto a1 = args, a2 = args;
  a1.insert(a1.end(), {"--out-dir", dir + "/run1"});
  a2.insert(a2.end(), {"--out-dir", dir + "/run2"});
  run_cli(a1);
  run_cli(a2);
  const std::string t1 = sqtest::read_file(dir + "/run1/tree.json");
  const std::string t2 = sqtest::read_file(dir + "/run2/tree.json");
  g_cli_tree = dir + "/run1/tree.json";
  return {!t1.empty() && t1 == t2, fmt("tree.json %zu bytes, identical: %s", t1.size(), t1 == t2 ? "yes" : "no")};
}

Outcome hierarchy_audit() {
  std::size_t trees = 0, nodes = 0, mismatches = 0;
  const auto audit = [&](const SqTree& t) {
    ++trees;
    nodes += t.node_count();
    mismatches += audit_labels(t);
  };
  audit(dumbbell_fit().tree);
  audit(table_tree());
  if (!g_cli_tree.empty()) audit(load_tree(g_cli_tree));
  return {mismatches == 0, fmt("%zu trees, %zu nodes, %zu label mismatches", trees, nodes, mismatches)};
}

struct CsvTable {
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  CsvTable t;
  std::istringstream in(sqtest::read_file(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Outcome split_demo_reproduction() {
  const std::string dir = sqtest::temp_dir("acceptance_split");
  const int w = 161, h = 161;
  run_cli({"split-demo", "--preset", "fig3", "--width", std::to_string(w), "--height", std::to_string(h), "--extent",
           "0.6", "--out-dir", dir});
  const auto [a, b] = cli::fig3_preset();
  const auto combined = read_csv(dir + "/split_split.csv");
  const auto f_table = read_csv(dir + "/split_F.csv");
  const auto d_table = read_csv(dir + "/split_d.csv");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (combined.rows.size() != n || f_table.rows.size() != n || d_table.rows.size() != n)
    return {false, "unexpected row count"};

  long value_errors = 0, rule_errors = 0, inside_boundaries = 0, outside_boundaries = 0, boundary_errors = 0;
  std::vector<double> fa(n), fb(n), da(n), db(n);
  std::vector<char> sel(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = combined.rows[k];
    const Vec3 x(std::stod(r[0]), std::stod(r[1]), 0.0);
    fa[k] = std::stod(r[2]);
    fb[k] = std::stod(r[3]);
    da[k] = std::stod(r[4]);
    db[k] = std::stod(r[5]);
    sel[k] = r[6][0];
    // Values are direct recomputations.
    const double rfa = inside_outside_stable(a, x), rfb = inside_outside_stable(b, x);
    const double rda = radial_distance(a, x), rdb = radial_distance(b, x);
    if (fa[k] != rfa || fb[k] != rfb || da[k] != rda || db[k] != rdb) ++value_errors;
    if (f_table.rows[k][2] != r[2] || f_table.rows[k][3] != r[3] || d_table.rows[k][2] != r[4] ||
        d_table.rows[k][3] != r[5])
      ++value_errors;
    const char by_f = rfb > rfa ? 'B' : 'A';
    const char by_d = rdb < rda ? 'B' : 'A';
    if (f_table.rows[k][4][0] != by_f || d_table.rows[k][4][0] != by_d) ++rule_errors;
    const bool in_a = rfa <= 1.0, in_b = rfb <= 1.0;
    char expected = by_d;
    if (in_a && in_b) expected = by_f;
    else if (in_a) expected = 'A';
    else if (in_b) expected = 'B';
    if (sel[k] != expected) ++rule_errors;
  }
  // Between neighbouring cells whose selector differs, the deciding quantity
  // must change sign: F^e1 difference inside both, radial distance outside both.
  const auto check = [&](std::size_t p, std::size_t q) {
    if (sel[p] == sel[q]) return;
    const bool both_in = fa[p] <= 1 && fb[p] <= 1 && fa[q] <= 1 && fb[q] <= 1;
    const bool both_out = fa[p] > 1 && fb[p] > 1 && fa[q] > 1 && fb[q] > 1;
    if (both_in) {
      ++inside_boundaries;
      if ((fb[p] > fa[p]) == (fb[q] > fa[q])) ++boundary_errors;
    } else if (both_out) {
      ++outside_boundaries;
      if ((db[p] < da[p]) == (db[q] < da[q])) ++boundary_errors;
    }
  };
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * w + i;
      if (i + 1 < w) check(k, k + 1);
      if (j + 1 < h) check(k, k + w);
    }
  const bool pass = value_errors == 0 && rule_errors == 0 && boundary_errors == 0 && inside_boundaries > 0 &&
                    outside_boundaries > 0;
  return {pass, fmt("%ld value errors, %ld rule errors, boundary edges inside %ld / outside %ld, %ld off-locus",
                    value_errors, rule_errors, inside_boundaries, outside_boundaries, boundary_errors)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sphere exactness", sphere_exactness},
      {"gradient correctness", gradient_correctness},
      {"sign equivalence", sign_equivalence},
      {"split partition", split_partition},
      {"containment respect", containment_respect},
      {"single-SQ recovery", single_sq_recovery},
      {"level-wise refinement", level_refinement},
      {"tree shape", tree_shape},
      {"estimator consistency", estimator_consistency},
      {"determinism", determinism},
      {"hierarchy audit", hierarchy_audit},
      {"split-demo reproduction", split_demo_reproduction},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
