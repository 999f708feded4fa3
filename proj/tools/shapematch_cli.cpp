// Command-line front end: precompute, match, adapt, eval, verify, report.
//
// Every command is deterministic: fixed inputs and flags produce
// byte-identical numeric outputs on the same platform. Exit codes:
// 0 success, 2 validation error, 3 numerical failure.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "shapematch/config.hpp"
#include "shapematch/descriptors.hpp"
#include "shapematch/evaluation.hpp"
#include "shapematch/fmap.hpp"
#include "shapematch/losses.hpp"
#include "shapematch/mesh.hpp"
#include "shapematch/pointmap.hpp"
#include "shapematch/spectral.hpp"
#include "shapematch/svg.hpp"
#include "shapematch/theory.hpp"

namespace fs = std::filesystem;
using namespace shapematch;

namespace {

struct RunSettings {
  SolverParams params;
  std::string descriptor = "wks";
  int num_features = 128;
  double variance_scale = 7.0;
  std::string map_source = "features";
  bool refine = false;
  int refine_from = 10;
  int refine_step = 2;
  int soft_top_t = 0;
  int jobs = 1;
  std::string cache_dir;
};

MaskKind parse_mask(const std::string& name) {
  if (name == "standard") return MaskKind::StandardLaplacian;
  if (name == "resolvent") return MaskKind::Resolvent;
  throw ParseError("unknown mask kind: " + name + " (expected standard|resolvent)");
}

RunSettings settings_from_config(const Config& cfg) {
  RunSettings s;
  s.params.lambda = cfg.get_double("solver.lambda0", 100.0);
  s.params.gamma = cfg.get_double("solver.gamma0", 0.5);
  s.params.tau = cfg.get_double("solver.tau", 0.07);
  s.params.k = cfg.get_int("solver.k", 30);
  s.params.w_bij = cfg.get_double("solver.w_bij", 1.0);
  s.params.w_orth = cfg.get_double("solver.w_orth", 1.0);
  s.params.w_couple = cfg.get_double("solver.w_couple", 1.0);
  s.params.w_contrast = cfg.get_double("solver.w_contrast", 10.0);
  s.params.mask_kind = parse_mask(cfg.get_string("solver.mask", "resolvent"));
  s.descriptor = cfg.get_string("descriptor.kind", "wks");
  s.num_features = cfg.get_int("descriptor.count", 128);
  s.variance_scale = cfg.get_double("descriptor.variance_scale", 7.0);
  s.map_source = cfg.get_string("match.map_source", "features");
  s.refine = cfg.get_bool("match.refine", false);
  s.refine_from = cfg.get_int("match.refine_from", 10);
  s.refine_step = cfg.get_int("match.refine_step", 2);
  s.soft_top_t = cfg.get_int("match.soft_top_t", 0);
  return s;
}

std::string mesh_stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string cache_path(const std::string& cache_dir, const std::string& mesh_path, int k) {
  return (fs::path(cache_dir) / (mesh_stem(mesh_path) + ".k" + std::to_string(k) + ".sbas"))
      .string();
}

/// cache-aware basis computation; warns and recomputes on a stale or
/// corrupt cache entry
SpectralBasis basis_for(const TriangleMesh& mesh, const std::string& mesh_path, int k,
                        const std::string& cache_dir, bool* cache_hit = nullptr) {
  if (cache_hit) *cache_hit = false;
  const std::uint64_t hash = mesh_content_hash(mesh);
  std::string path;
  if (!cache_dir.empty()) {
    path = cache_path(cache_dir, mesh_path, k);
    if (fs::exists(path)) {
      if (auto cached = load_basis_cache(path, hash, k)) {
        if (cache_hit) *cache_hit = true;
        return std::move(*cached);
      }
      std::cerr << "warning: stale or corrupt cache entry " << path << ", recomputing\n";
    }
  }
  const SpectralBasis basis = compute_basis(build_laplacian(mesh), k);
  if (!path.empty()) {
    fs::create_directories(cache_dir);
    save_basis_cache(path, basis, hash);
  }
  return basis;
}

FeatureMatrix features_for(const SpectralBasis& basis, const RunSettings& s,
                           const std::string& override_path) {
  if (!override_path.empty()) return load_features(basis, override_path);
  if (s.descriptor == "wks") return wks(basis, s.num_features, s.variance_scale);
  if (s.descriptor == "hks") return hks(basis, s.num_features);
  throw ParseError("unknown descriptor: " + s.descriptor + " (expected wks|hks)");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

int cmd_precompute(const std::vector<std::string>& meshes, int k, const std::string& cache_dir) {
  if (meshes.empty()) throw EmptyInput("precompute needs at least one --mesh");
  fs::create_directories(cache_dir);
  for (const std::string& path : meshes) {
    const TriangleMesh mesh = load_mesh(path);
    bool hit = false;
    basis_for(mesh, path, k, cache_dir, &hit);
    std::cout << (hit ? "cached " : "computed ") << cache_path(cache_dir, path, k) << "\n";
  }
  return 0;
}

struct MatchOutputs {
  FunctionalMap c_xy, c_yx, c_pi;
  PointMap pi_features, pi_fmap;
  std::optional<PointMap> pi_refined;
  LossReport losses;
};

MatchOutputs run_match(const SpectralBasis& bx, const SpectralBasis& by,
                       const FeatureMatrix& fx, const FeatureMatrix& fy,
                       const RunSettings& s) {
  MatchOutputs out;
  const Eigen::MatrixXd mask_xy = make_mask(bx.lambda, by.lambda, s.params.mask_kind, s.params.gamma);
  const Eigen::MatrixXd mask_yx = make_mask(by.lambda, bx.lambda, s.params.mask_kind, s.params.gamma);
  out.c_xy = solve_fmap(fx.a, fy.a, mask_xy, s.params.lambda);
  out.c_yx = solve_fmap(fy.a, fx.a, mask_yx, s.params.lambda);

  const PointMap pi_soft = pointmap_from_features(fx.f, fy.f, MatchMode::Softmax, s.params.tau);
  out.c_pi = fmap_from_pointmap(pi_soft, bx, by);

  out.pi_features = pointmap_from_features(fx.f, fy.f, MatchMode::HardNN, s.params.tau);
  out.pi_fmap = pointmap_from_fmap(out.c_xy, bx, by);
  if (s.refine) {
    const int k0 = std::min(s.refine_from, s.params.k);
    FunctionalMap c0;
    c0.c = out.c_xy.c.topLeftCorner(k0, k0);
    c0.provenance = Provenance::Solved;
    auto [c_ref, pi_ref] = refine_spectral_upsampling(c0, bx, by, k0, s.params.k, s.refine_step);
    out.pi_refined = std::move(pi_ref);
  }

  out.losses = make_loss_report(loss_bijectivity(out.c_xy, out.c_yx),
                                loss_orthogonality(out.c_xy, out.c_yx),
                                loss_coupling(out.c_xy, out.c_pi),
                                loss_contrastive(fx.f, bx, s.params.tau),
                                loss_contrastive(fy.f, by, s.params.tau), s.params);
  return out;
}

int cmd_match(const std::string& path_x, const std::string& path_y, const RunSettings& s,
              const std::string& features_x, const std::string& features_y,
              const std::string& out_dir, bool do_eval, const std::string& gt_path,
              const std::string& pair_name) {
  const TriangleMesh mesh_x = load_mesh(path_x);
  const TriangleMesh mesh_y = load_mesh(path_y);

  // validate the evaluation inputs up front: no partial outputs on error
  std::vector<int> gt;
  if (do_eval) {
    if (gt_path.empty()) throw EmptyInput("--eval requires --ground-truth");
    gt = load_correspondence(gt_path);
    if (static_cast<int>(gt.size()) != mesh_y.n())
      throw LengthMismatch("ground truth has " + std::to_string(gt.size()) +
                           " rows, target mesh has " + std::to_string(mesh_y.n()) + " vertices");
    for (int idx : gt)
      if (idx >= mesh_x.n()) throw LengthMismatch("ground-truth indexout of range");
  }

  const SpectralBasis bx = basis_for(mesh_x, path_x, s.params.k, s.cache_dir);
  const SpectralBasis by = basis_for(mesh_y, path_y, s.params.k, s.cache_dir);
  const FeatureMatrix fx = features_for(bx, s, features_x);
  const FeatureMatrix fy = features_for(by, s, features_y);

  const MatchOutputs out = run_match(bx, by, fx, fy, s);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_fmap_csv((dir / "fmap.csv").string(), out.c_xy);
  save_fmap_binary((dir / "fmap.bin").string(), out.c_xy);
  save_fmap_csv((dir / "fmap_converted.csv").string(), out.c_pi);
  save_pointmap((dir / "pointmap_features.txt").string(), out.pi_features);
  save_pointmap((dir / "pointmap_fmap.txt").string(), out.pi_fmap);
  if (out.pi_refined) save_pointmap((dir / "pointmap_refined.txt").string(), *out.pi_refined);
  const PointMap& primary = s.map_source == "fmap"
                                ? (out.pi_refined ? *out.pi_refined : out.pi_fmap)
                                : out.pi_features;
  save_pointmap((dir / "pointmap.txt").string(), primary);
  save_loss_report_csv((dir / "losses.csv").string(), pair_name, out.losses);
  if (s.soft_top_t > 0) {
    const Eigen::SparseMatrix<double> topt =
        soft_pointmap_topt(fx.f, fy.f, s.params.tau, s.soft_top_t);
    save_soft_pointmap((dir / "pointmap_soft.bin").string(), Eigen::MatrixXd(topt));
  }

  if (do_eval) {
    const Eigen::VectorXd thresholds = default_pck_thresholds();
    const EvalResult ev_feat = evaluate(out.pi_features, gt, mesh_x, thresholds);
    const EvalResult ev_fmap =
        evaluate(out.pi_refined ? *out.pi_refined : out.pi_fmap, gt, mesh_x, thresholds);
    save_eval_summary_csv((dir / (pair_name + "_features_summary.csv")).string(),
                          pair_name + "/features", ev_feat);
    save_eval_summary_csv((dir / (pair_name + "_fmap_summary.csv")).string(),
                          pair_name + "/fmap", ev_fmap);
    save_pck_csv((dir / (pair_name + "_features_pck.csv")).string(), ev_feat);
    save_pck_csv((dir / (pair_name + "_fmap_pck.csv")).string(), ev_fmap);
    save_eval_per_vertex_csv((dir / (pair_name + "_per_vertex.csv")).string(), ev_feat);
    std::cout << "eval(features): mean_error=" << ev_feat.mean_error << " (x100: "
              << 100.0 * ev_feat.mean_error << ") auc=" << ev_feat.auc
              << "\neval(fmap):     mean_error=" << ev_fmap.mean_error << " (x100: "
              << 100.0 * ev_fmap.mean_error << ") auc=" << ev_fmap.auc << "\n";
  }
  std::cout << "losses: bij=" << out.losses.bij << " orth=" << out.losses.orth
            << " couple=" << out.losses.couple << " contrast=("
            << out.losses.contrast_x << ", " << out.losses.contrast_y
            << ") total=" << out.losses.total << "\n";
  return 0;
}

int cmd_adapt(const std::string& pairs_file, const RunSettings& s, int steps, double step_size,
              AdaptOptimizer optimizer, const std::string& out_dir) {
  std::ifstream in(pairs_file);
  if (!in) throw IoError("cannot open pair list: " + pairs_file);
  std::vector<AdaptPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!(ls >> a >> b)) throw ParseError("pair list line needs two mesh paths: " + line);
    const TriangleMesh mesh_a = load_mesh(a);
    const TriangleMesh mesh_b = load_mesh(b);
    AdaptPair pair;
    pair.basis_x = basis_for(mesh_a, a, s.params.k, s.cache_dir);
    pair.basis_y = basis_for(mesh_b, b, s.params.k, s.cache_dir);
    pair.f_x = features_for(pair.basis_x, s, "");
    pair.f_y = features_for(pair.basis_y, s, "");
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) throw EmptyInput("pair list is empty: " + pairs_file);

  AdaptResult result;
  try {
    result = adapt_params(pairs, s.params, steps, step_size, s.jobs, optimizer);
  } catch (const NonFiniteLoss& e) {
    // abort reporting the last good parameters (the initial ones)
    fs::create_directories(out_dir);
    std::ostringstream params_text;
    params_text.precision(17);
    params_text << "[solver]\nlambda0 = " << s.params.lambda << "\ngamma0 = " << s.params.gamma
                << "\n";
    write_text((fs::path(out_dir) / "params_last_good.toml").string(), params_text.str());
    std::cerr << "error: " << e.what() << " (last good parameters saved)\n";
    return 3;
  }

  // monotonicity guard for the default optimizer: every accepted step must
  // strictly decrease the loss (Adam is non-monotone by nature)
  if (optimizer == AdaptOptimizer::Backtracking)
    for (std::size_t i = 1; i < result.trace.size(); ++i)
      if (!(result.trace[i] < result.trace[i - 1]))
        throw NonFiniteLoss("adaptation trace is not strictly decreasing");

  fs::create_directories(out_dir);
  std::ostringstream trace;
  trace.precision(17);
  trace << "step,lambda,gamma,total,bij,orth,couple,contrast\n";
  for (const AdaptStep& st : result.steps)
    trace << st.step << ',' << st.lambda << ',' << st.gamma << ',' << st.total << ',' << st.bij
          << ',' << st.orth << ',' << st.couple << ',' << st.contrast << '\n';
  write_text((fs::path(out_dir) / "trace.csv").string(), trace.str());

  std::ostringstream params_text;
  params_text.precision(17);
  params_text << "[solver]\nlambda0 = " << result.params.lambda
              << "\ngamma0 = " << result.params.gamma << "\ntau = " << result.params.tau
              << "\nk = " << result.params.k << "\nmask = \""
              << (result.params.mask_kind == MaskKind::Resolvent ? "resolvent" : "standard")
              << "\"\n";
  write_text((fs::path(out_dir) / "params.toml").string(), params_text.str());
  std::cout << "adapted lambda=" << result.params.lambda << " gamma=" << result.params.gamma
            << " over " << (result.trace.size() - 1) << " accepted steps; final loss "
            << result.trace.back() << "\n";
  return 0;
}

int cmd_eval(const std::string& map_path, const std::string& gt_path,
             const std::string& mesh_x_path, const std::string& out_dir,
             const std::string& name) {
  const TriangleMesh mesh_x = load_mesh(mesh_x_path);
  const PointMap predicted = load_pointmap(map_path, mesh_x.n());
  const std::vector<int> gt = load_correspondence(gt_path);
  const EvalResult result = evaluate(predicted, gt, mesh_x, default_pck_thresholds());

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_eval_summary_csv((dir / (name + "_summary.csv")).string(), name, result);
  save_eval_per_vertex_csv((dir / (name + "_per_vertex.csv")).string(), result);
  save_pck_csv((dir / (name + "_pck.csv")).string(), result);
  SvgSeries series{name, "#4477aa", {}};
  for (const auto& [t, f] : result.pck) series.points.emplace_back(t, f);
  svg_line_chart((dir / (name + "_pck.svg")).string(), "PCK", "geodesic error threshold",
                 "fraction correct", {series});
  std::cout << name << ": mean_error=" << result.mean_error << " (x100: "
            << 100.0 * result.mean_error << ") auc=" << result.auc
            << " unreachable=" << result.unreachable_count << "\n";
  return 0;
}

int cmd_verify(const std::vector<std::string>& mesh_paths, int seeds, std::uint64_t seed_base,
               const std::string& out_dir) {
  std::vector<std::pair<std::string, TriangleMesh>> meshes;
  for (const std::string& p : mesh_paths) meshes.emplace_back(mesh_stem(p), load_mesh(p));
  if (meshes.empty()) throw EmptyInput("verify needs at least one --mesh");

  std::ostringstream csv;
  csv.precision(17);
  csv << "check,instance,metric,value,threshold,passed\n";
  bool all_passed = true;
  auto note = [&](const std::string& check, const std::string& instance, const std::string& metric,
                  double value, double threshold, bool passed) {
    csv << check << ',' << instance << ',' << metric << ',' << value << ',' << threshold << ','
        << (passed ? "yes" : "no") << '\n';
    all_passed = all_passed && passed;
  };

  // uniqueness of the feature-similarity assignment under duplicated rows
  for (int seed = 0; seed < seeds; ++seed) {
    const int n_x = 4 + seed % 5, n_y = 2 + seed % 3;
    const LemmaReport dup =
        check_lemma_repeated_rows(n_x, n_y, 3, seed_base + static_cast<std::uint64_t>(seed), true);
    note("lemma_duplicated", "seed" + std::to_string(seed), "minimizer_count",
         dup.minimizer_count, 2, dup.minimizer_count >= 2);
    const LemmaReport ctl =
        check_lemma_repeated_rows(n_x, n_y, 3, seed_base + static_cast<std::uint64_t>(seed), false);
    note("lemma_control", "seed" + std::to_string(seed), "minimizer_count", ctl.minimizer_count,
         1, ctl.minimizer_count == 1);
  }

  // solver-vs-conversion equality on permuted copies
  for (const auto& [name, mesh] : meshes)
    for (int k : {2, 5, 10})
      for (int seed = 0; seed < seeds; ++seed) {
        const TheoremReport rep =
            check_theorem_map_equality(mesh, k, k + 3, seed_base + static_cast<std::uint64_t>(seed));
        note("theorem_equality", name + "/k" + std::to_string(k) + "/seed" + std::to_string(seed),
             "map_distance", rep.map_distance, 1e-8, rep.passed);
      }

  // necessity of the span condition (recorded, not asserted)
  const TheoremReport violated =
      check_theorem_span_violated(meshes.front().second, 5, 8, seed_base + 1, 0.1);
  csv << "theorem_span_violated," << meshes.front().first << ",map_distance,"
      << violated.map_distance << ",recorded,n/a\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "verify.csv").string(), csv.str());
  }
  std::cout << csv.str();
  std::cout << (all_passed ? "VERIFY PASS\n" : "VERIFY FAIL\n");
  return all_passed ? 0 : 3;
}

int cmd_report(const std::string& results_dir, const std::string& out_dir) {
  if (!fs::is_directory(results_dir)) throw EmptyInput("not a directory: " + results_dir);
  std::vector<std::string> skipped;
  std::vector<SvgSeries> pck_series;
  std::ostringstream summary;
  summary << "name,mean_error,auc,unreachable\n";
  int summaries = 0;

  std::vector<std::string> adapt_labels;
  std::vector<double> adapt_lambdas, adapt_gammas;

  const char* palette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                           "#66ccee", "#aa3377", "#bbbbbb"};
  std::vector<fs::path> entries;
  for (const auto& entry : fs::recursive_directory_iterator(results_dir))
    if (entry.is_regular_file()) entries.push_back(entry.path());
  std::sort(entries.begin(), entries.end());

  for (const fs::path& path : entries) {
    const std::string fname = path.filename().string();
    try {
      if (fname.size() > 8 && fname.substr(fname.size() - 8) == "_pck.csv") {
        std::ifstream in(path);
        std::string line;
        if (!std::getline(in, line) || line != "threshold,fraction")
          throw ParseError("bad PCK header");
        SvgSeries series;
        series.label = fname.substr(0, fname.size() - 8);
        series.color = palette[pck_series.size() % 7];
        while (std::getline(in, line)) {
          const auto comma = line.find(',');
          if (comma == std::string::npos) throw ParseError("bad PCK row");
          series.points.emplace_back(std::stod(line.substr(0, comma)),
                                     std::stod(line.substr(comma + 1)));
        }
        if (series.points.empty()) throw ParseError("empty PCK curve");
        pck_series.push_back(std::move(series));
      } else if (fname.size() > 12 && fname.substr(fname.size() - 12) == "_summary.csv") {
        std::ifstream in(path);
        std::string header, row;
        if (!std::getline(in, header) || header != "name,mean_error,auc,unreachable" ||
            !std::getline(in, row))
          throw ParseError("bad summary");
        summary << row << '\n';
        ++summaries;
      } else if (fname == "trace.csv") {
        std::ifstream in(path);
        std::string line, last;
        if (!std::getline(in, line) ||
            line != "step,lambda,gamma,total,bij,orth,couple,contrast")
          throw ParseError("bad trace header");
        while (std::getline(in, line))
          if (!line.empty()) last = line;
        if (last.empty()) throw ParseError("empty trace");
        std::istringstream ls(last);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() != 8) throw ParseError("bad trace row");
        adapt_labels.push_back(path.parent_path().filename().string());
        adapt_lambdas.push_back(cells[1]);
        adapt_gammas.push_back(cells[2]);
      }
    } catch (const std::exception&) {
      skipped.push_back(path.string());
    }
  }
  if (pck_series.empty() && summaries == 0 && adapt_labels.empty())
    throw EmptyInput("no readable results found in " + results_dir);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_text((dir / "summary.csv").string(), summary.str());
  if (!pck_series.empty())
    svg_line_chart((dir / "pck_curves.svg").string(), "PCK curves", "geodesic error threshold",
                   "fraction correct", pck_series);
  if (!adapt_labels.empty()) {
    svg_bar_chart((dir / "adapted_lambda.svg").string(), "adapted regularization strength",
                  adapt_labels, {{"lambda", "#4477aa", adapt_lambdas}});
    svg_bar_chart((dir / "adapted_gamma.svg").string(), "adapted mask shape", adapt_labels,
                  {{"gamma", "#ee6677", adapt_gammas}});
  }

  std::ostringstream footer;
  footer << "report over " << results_dir << ": " << summaries << " summaries, "
         << pck_series.size() << " PCK curves, " << adapt_labels.size() << " adapt traces\n";
  for (const std::string& s : skipped) footer << "skipped (malformed): " << s << '\n';
  write_text((dir / "report.txt").string(), footer.str());
  std::cout << footer.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral non-rigid shape matching toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "TOML-style config file")->capture_default_str();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for randomized checks");

  // precompute
  auto* pre = app.add_subcommand("precompute", "compute and cache spectral bases");
  std::vector<std::string> pre_meshes;
  int pre_k = 30;
  std::string pre_cache = "cache";
  pre->add_option("--mesh", pre_meshes, "mesh file (repeatable)")->required();
  pre->add_option("--k", pre_k, "basis size");
  pre->add_option("--cache-dir", pre_cache, "cache directory");

  // match
  auto* match = app.add_subcommand("match", "match two meshes end to end");
  std::string match_x, match_y, match_fx, match_fy, match_out = "out", match_gt, match_name = "pair";
  bool match_eval = false;
  int match_k = -1, match_nf = -1, match_refine_from = -1, match_refine_step = -1,
      match_topt = -1;
  double match_lambda = -1, match_gamma = -1, match_tau = -1;
  std::string match_mask, match_desc, match_source, match_cache;
  bool match_refine = false;
  match->add_option("--source", match_x, "mesh X (targets live here)")->required();
  match->add_option("--target", match_y, "mesh Y (each vertex gets a match in X)")->required();
  match->add_option("--features", match_fx, "external features for X (CSV or binary)");
  match->add_option("--features-target", match_fy, "external features for Y");
  match->add_option("--out-dir", match_out, "output directory");
  match->add_option("--k", match_k, "basis size");
  match->add_option("--mask", match_mask, "standard|resolvent");
  match->add_option("--lambda0", match_lambda, "regularization strength");
  match->add_option("--gamma0", match_gamma, "resolvent mask shape in (0,1]");
  match->add_option("--tau", match_tau, "softmax temperature");
  match->add_option("--descriptor", match_desc, "wks|hks");
  match->add_option("--num-features", match_nf, "descriptor dimension");
  match->add_flag("--refine", match_refine, "spectral upsampling refinement");
  match->add_option("--refine-from", match_refine_from, "refinement start size");
  match->add_option("--refine-step", match_refine_step, "refinement step");
  match->add_option("--soft-top-t", match_topt, "also write a sparse top-t soft map");
  match->add_option("--map-source", match_source, "features|fmap (primary point map)");
  match->add_option("--cache-dir", match_cache, "spectral cache directory");
  match->add_flag("--eval", match_eval, "evaluate against ground truth");
  match->add_option("--ground-truth", match_gt, "correspondence file (one X index per Y vertex)");
  match->add_option("--name", match_name, "pair name used in reports");

  // adapt
  auto* adapt = app.add_subcommand("adapt", "self-adaptive solver parameter optimization");
  std::string adapt_pairs, adapt_out = "out";
  int adapt_steps = 100, adapt_jobs = -1, adapt_k = -1;
  double adapt_step_size = 0.5, adapt_lambda = -1, adapt_gamma = -1, adapt_tau = -1;
  std::string adapt_mask, adapt_desc, adapt_cache, adapt_opt = "gd";
  int adapt_nf = -1;
  adapt->add_option("--pairs", adapt_pairs, "file with one 'meshA meshB' pair per line")
      ->required();
  adapt->add_option("--out-dir", adapt_out, "output directory");
  adapt->add_option("--adapt-steps", adapt_steps, "gradient steps");
  adapt->add_option("--step-size", adapt_step_size, "initial step size (learning rate for adam)");
  adapt->add_option("--optimizer", adapt_opt, "gd (monotone backtracking, default) | adam");
  adapt->add_option("--k", adapt_k, "basis size");
  adapt->add_option("--lambda0", adapt_lambda, "initial lambda");
  adapt->add_option("--gamma0", adapt_gamma, "initial gamma");
  adapt->add_option("--tau", adapt_tau, "softmax temperature");
  adapt->add_option("--mask", adapt_mask, "standard|resolvent");
  adapt->add_option("--descriptor", adapt_desc, "wks|hks");
  adapt->add_option("--num-features", adapt_nf, "descriptor dimension");
  adapt->add_option("--cache-dir", adapt_cache, "spectral cache directory");
  adapt->add_option("--jobs", adapt_jobs, "worker threads");

  // eval
  auto* eval = app.add_subcommand("eval", "score a point map against ground truth");
  std::string eval_map, eval_gt, eval_mesh, eval_out = "out", eval_name = "result";
  eval->add_option("--map", eval_map, "predicted map (text, one X index per Y vertex)")
      ->required();
  eval->add_option("--ground-truth", eval_gt, "ground-truth correspondence file")->required();
  eval->add_option("--mesh-x", eval_mesh, "mesh X carrying the geodesics")->required();
  eval->add_option("--out-dir", eval_out, "output directory");
  eval->add_option("--name", eval_name, "label used in file names");

  // verify
  auto* verify = app.add_subcommand("verify", "numerical checks of the map-relation results");
  std::vector<std::string> verify_meshes;
  int verify_seeds = 10;
  std::string verify_out;
  verify->add_option("--mesh", verify_meshes, "mesh file (repeatable)")->required();
  verify->add_option("--seeds", verify_seeds, "seeds per instance");
  verify->add_option("--out-dir", verify_out, "where to write verify.csv");

  // report
  auto* report = app.add_subcommand("report", "aggregate results into CSV and SVG charts");
  std::string report_dir, report_out = "report";
  report->add_option("--results-dir", report_dir, "directory with result files")->required();
  report->add_option("--out-dir", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::from_file(config_path);
    RunSettings s = settings_from_config(cfg);

    if (pre->parsed()) return cmd_precompute(pre_meshes, pre_k, pre_cache);

    if (match->parsed()) {
      if (match_k > 0) s.params.k = match_k;
      if (match_lambda > 0) s.params.lambda = match_lambda;
      if (match_gamma > 0) s.params.gamma = match_gamma;
      if (match_tau > 0) s.params.tau = match_tau;
      if (!match_mask.empty()) s.params.mask_kind = parse_mask(match_mask);
      if (!match_desc.empty()) s.descriptor = match_desc;
      if (match_nf > 0) s.num_features = match_nf;
      if (match_refine) s.refine = true;
      if (match_refine_from > 0) s.refine_from = match_refine_from;
      if (match_refine_step > 0) s.refine_step = match_refine_step;
      if (match_topt > 0) s.soft_top_t = match_topt;
      if (!match_source.empty()) s.map_source = match_source;
      if (!match_cache.empty()) s.cache_dir = match_cache;
      if (s.map_source != "features" && s.map_source != "fmap")
        throw ParseError("--map-source must be features or fmap");
      s.params.validate();
      return cmd_match(match_x, match_y, s, match_fx, match_fy, match_out, match_eval, match_gt,
                       match_name);
    }

    if (adapt->parsed()) {
      if (adapt_k > 0) s.params.k = adapt_k;
      if (adapt_lambda > 0) s.params.lambda = adapt_lambda;
      if (adapt_gamma > 0) s.params.gamma = adapt_gamma;
      if (adapt_tau > 0) s.params.tau = adapt_tau;
      if (!adapt_mask.empty()) s.params.mask_kind = parse_mask(adapt_mask);
      if (!adapt_desc.empty()) s.descriptor = adapt_desc;
      if (adapt_nf > 0) s.num_features = adapt_nf;
      if (!adapt_cache.empty()) s.cache_dir = adapt_cache;
      if (adapt_jobs > 0) s.jobs = adapt_jobs;
      s.params.validate();
      AdaptOptimizer optimizer;
      if (adapt_opt == "gd")
        optimizer = AdaptOptimizer::Backtracking;
      else if (adapt_opt == "adam")
        optimizer = AdaptOptimizer::Adam;
      else
        throw ParseError("--optimizer must be gd or adam");
      return cmd_adapt(adapt_pairs, s, adapt_steps, adapt_step_size, optimizer, adapt_out);
    }

    if (eval->parsed()) return cmd_eval(eval_map, eval_gt, eval_mesh, eval_out, eval_name);
    if (verify->parsed()) return cmd_verify(verify_meshes, verify_seeds, seed, verify_out);
    if (report->parsed()) return cmd_report(report_dir, report_out);
  } catch (const ConvergenceFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const SingularSystem& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const NonFiniteLoss& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const RankDeficientDraw& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
