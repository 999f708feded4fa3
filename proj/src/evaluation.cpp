#include "shapematch/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace shapematch {

Eigen::VectorXd default_pck_thresholds() {
  Eigen::VectorXd t(200);
  for (int i = 0; i < 200; ++i) t[i] = 0.2 * static_cast<double>(i) / 199.0;
  return t;
}

EvalResult evaluate(const PointMap& predicted, const std::vector<int>& ground_truth,
                    const TriangleMesh& mesh_x, const Eigen::VectorXd& thresholds) {
  if (predicted.kind != PointMapKind::Hard)
    throw DimensionMismatch("evaluation expects a hard point map");
  if (predicted.hard.size() != ground_truth.size())
    throw LengthMismatch("predicted and ground-truth maps have different lengths");
  for (Eigen::Index i = 1; i < thresholds.size(); ++i)
    if (thresholds[i] < thresholds[i - 1])
      throw DimensionMismatch("thresholds must be ascending");
  for (int idx : ground_truth)
    if (idx < 0 || idx >= mesh_x.n())
      throw LengthMismatch("ground-truth index " + std::to_string(idx) + " out of range");
  if (predicted.n_x != mesh_x.n())
    throw BasisMeshMismatch("predicted map targets a different mesh");

  const double norm = std::sqrt(surface_area(mesh_x));
  const auto n_y = static_cast<Eigen::Index>(ground_truth.size());

  // distance fields per ground-truth source, computed on demand
  std::unordered_map<int, Eigen::VectorXd> field_cache;
  auto distance_field = [&](int source) -> const Eigen::VectorXd& {
    auto it = field_cache.find(source);
    if (it == field_cache.end())
      it = field_cache.emplace(source, geodesic_distances(mesh_x, source)).first;
    return it->second;
  };

  EvalResult result;
  result.per_vertex_error.resize(n_y);
  double total = 0.0;
  Eigen::Index reachable = 0;
  for (Eigen::Index i = 0; i < n_y; ++i) {
    const int truth = ground_truth[static_cast<std::size_t>(i)];
    const int pred = predicted.hard[static_cast<std::size_t>(i)];
    const double d = distance_field(truth)[pred];
    if (std::isfinite(d)) {
      result.per_vertex_error[i] = d / norm;
      total += result.per_vertex_error[i];
      ++reachable;
    } else {
      result.per_vertex_error[i] = std::numeric_limits<double>::infinity();
      ++result.unreachable_count;
    }
  }
  result.mean_error = reachable > 0 ? total / static_cast<double>(reachable) : 0.0;

  result.pck.reserve(static_cast<std::size_t>(thresholds.size()));
  for (Eigen::Index t = 0; t < thresholds.size(); ++t) {
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < n_y; ++i)
      if (std::isfinite(result.per_vertex_error[i]) &&
          result.per_vertex_error[i] <= thresholds[t])
        ++hits;
    const double frac =
        reachable > 0 ? static_cast<double>(hits) / static_cast<double>(reachable) : 0.0;
    result.pck.emplace_back(thresholds[t], frac);
  }

  // normalized trapezoidal area under the curve
  if (thresholds.size() >= 2) {
    const double range = thresholds[thresholds.size() - 1] - thresholds[0];
    double area = 0.0;
    for (std::size_t t = 0; t + 1 < result.pck.size(); ++t)
      area += 0.5 * (result.pck[t].second + result.pck[t + 1].second) *
              (result.pck[t + 1].first - result.pck[t].first);
    result.auc = range > 0.0 ? area / range : 0.0;
  } else {
    result.auc = result.pck.empty() ? 0.0 : result.pck.front().second;
  }
  return result;
}

void save_eval_summary_csv(const std::string& path, const std::string& name,
                           const EvalResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write eval summary: " + path);
  out.precision(17);
  out << "name,mean_error,auc,unreachable\n";
  out << name << ',' << result.mean_error << ',' << result.auc << ','
      << result.unreachable_count << '\n';
}

void save_eval_per_vertex_csv(const std::string& path, const EvalResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write per-vertex errors: " + path);
  out.precision(17);
  out << "vertex,error\n";
  for (Eigen::Index i = 0; i < result.per_vertex_error.size(); ++i)
    out << i << ',' << result.per_vertex_error[i] << '\n';
}

void save_pck_csv(const std::string& path, const EvalResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write PCK curve: " + path);
  out.precision(17);
  out << "threshold,fraction\n";
  for (const auto& [t, f] : result.pck) out << t << ',' << f << '\n';
}

}  // namespace shapematch
