#pragma once

#include <Eigen/Core>
#include <string>

#include "shapematch/spectral.hpp"

namespace shapematch {

/// Per-vertex descriptor rows F and their spectral coefficients A = phi_dagger F.
/// A is always derived from F at construction, never stored stale.
struct FeatureMatrix {
  Eigen::MatrixXd f;  // n x c
  Eigen::MatrixXd a;  // k x c

  int c() const { return static_cast<int>(f.cols()); }
};

/// Wraps raw per-vertex features: validates (no all-zero rows) and projects.
FeatureMatrix make_features(const SpectralBasis& basis, Eigen::MatrixXd f);

/// Heat kernel signature: sum_i exp(-lambda_i t) phi[x,i]^2 at num_times
/// samples log-spaced in [4 ln10 / lambda_max, 4 ln10 / lambda_min_nonzero].
/// Columns are normalized to unit M-weighted norm.
FeatureMatrix hks(const SpectralBasis& basis, int num_times);

/// Raw heat kernel values at caller-chosen time samples (no normalization).
Eigen::MatrixXd hks_at(const SpectralBasis& basis, const Eigen::VectorXd& times);

/// Wave kernel signature with Gaussian log-energy bands over the nonzero
/// spectrum; sigma = variance_scale * (log-spectrum range) / num_energies,
/// energies linearly spaced in [ln l_1 + 2 sigma, ln l_max - 2 sigma].
/// Columns are normalized to unit M-weighted norm.
FeatureMatrix wks(const SpectralBasis& basis, int num_energies, double variance_scale = 7.0);

/// External n x c features from CSV (one row per vertex) or binary float64
/// (see the file-format section of the README).
FeatureMatrix load_features(const SpectralBasis& basis, const std::string& path);
void save_features(const std::string& path, const Eigen::MatrixXd& f);

}  // namespace shapematch
