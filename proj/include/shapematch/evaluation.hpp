#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "shapematch/mesh.hpp"
#include "shapematch/pointmap.hpp"

namespace shapematch {

/// Correspondence quality scores. Per-vertex errors are geodesic distances
/// on X between predicted and true targets, normalized by sqrt(total
/// surface area); unreachable vertices carry +infinity and are excluded
/// from the aggregates.
struct EvalResult {
  Eigen::VectorXd per_vertex_error;               // length n_Y
  double mean_error = 0.0;
  std::vector<std::pair<double, double>> pck;     // (threshold, fraction)
  double auc = 0.0;                               // trapezoidal, normalized to [0,1]
  int unreachable_count = 0;
};

/// 200 uniform thresholds in [0, 0.2].
Eigen::VectorXd default_pck_thresholds();

EvalResult evaluate(const PointMap& predicted, const std::vector<int>& ground_truth,
                    const TriangleMesh& mesh_x, const Eigen::VectorXd& thresholds);

void save_eval_summary_csv(const std::string& path, const std::string& name,
                           const EvalResult& result);
void save_eval_per_vertex_csv(const std::string& path, const EvalResult& result);
void save_pck_csv(const std::string& path, const EvalResult& result);

}  // namespace shapematch
