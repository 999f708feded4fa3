#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <string>
#include <utility>
#include <vector>

#include "shapematch/fmap.hpp"
#include "shapematch/spectral.hpp"

namespace shapematch {

enum class PointMapKind { Hard, Soft };

/// Point-wise map from Y vertices to X vertices. Hard maps pick one target
/// per row; soft maps are row-stochastic matrices.
struct PointMap {
  PointMapKind kind = PointMapKind::Hard;
  std::vector<int> hard;   // length n_Y, values in [0, n_X)
  Eigen::MatrixXd soft;    // n_Y x n_X when kind == Soft
  int n_x = 0;

  int n_y() const {
    return kind == PointMapKind::Hard ? static_cast<int>(hard.size())
                                      : static_cast<int>(soft.rows());
  }
};

PointMap make_hard_pointmap(std::vector<int> hard, int n_x);
PointMap make_soft_pointmap(Eigen::MatrixXd soft);

enum class MatchMode { HardNN, Softmax };

/// HardNN: each Y row maps to the X row with minimal squared feature
/// distance (ties to the smallest index). Softmax: row-wise softmax of
/// F_Y F_X^T / tau.
PointMap pointmap_from_features(const Eigen::MatrixXd& f_x, const Eigen::MatrixXd& f_y,
                                MatchMode mode, double tau);

/// Row-sparse variant for large meshes: keeps the top_t largest entries of
/// each softmax row, renormalized.
Eigen::SparseMatrix<double> soft_pointmap_topt(const Eigen::MatrixXd& f_x,
                                               const Eigen::MatrixXd& f_y, double tau, int top_t);

/// phi_Y_dagger * Pi * phi_X, truncated to k_y x k_x basis columns
/// (defaults: full bases). Provenance is ConvertedFromPointwise.
FunctionalMap fmap_from_pointmap(const PointMap& pi, const SpectralBasis& basis_x,
                                 const SpectralBasis& basis_y, int k_x = -1, int k_y = -1);
FunctionalMap fmap_from_pointmap(const Eigen::SparseMatrix<double>& pi_soft,
                                 const SpectralBasis& basis_x, const SpectralBasis& basis_y,
                                 int k_x = -1, int k_y = -1);

/// Hard map matching rows of phi_Y against rows of phi_X C^T by Euclidean
/// nearest neighbour (ties to the smallest index).
PointMap pointmap_from_fmap(const FunctionalMap& map, const SpectralBasis& basis_x,
                            const SpectralBasis& basis_y);

/// Alternates pointmap_from_fmap / fmap_from_pointmap while growing the
/// spectral dimension from k_start to k_end by `step`.
std::pair<FunctionalMap, PointMap> refine_spectral_upsampling(const FunctionalMap& c0,
                                                              const SpectralBasis& basis_x,
                                                              const SpectralBasis& basis_y,
                                                              int k_start, int k_end, int step);

/// Explicit partial-permutation check: every column hit at most once.
bool is_partial_permutation(const PointMap& pi);

/// In-place row softmax with max-subtraction; used by soft maps and the
/// contrastive loss.
void softmax_rows(Eigen::MatrixXd& m);

// hard maps share the ground-truth correspondence text format
void save_pointmap(const std::string& path, const PointMap& pi);
PointMap load_pointmap(const std::string& path, int n_x);
void save_soft_pointmap(const std::string& path, const Eigen::MatrixXd& soft);
Eigen::MatrixXd load_soft_pointmap(const std::string& path);

}  // namespace shapematch
