#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

#include "shapematch/mesh.hpp"

namespace shapematch {

/// Truncated generalized eigenbasis of (W, M): the k smoothest
/// M-orthonormal functions on the surface. phi_dagger = phi^T * diag(mass)
/// is the exact pseudo-inverse under M-orthonormality.
struct SpectralBasis {
  Eigen::MatrixXd phi;         // n x k eigenfunctions
  Eigen::VectorXd lambda;      // k eigenvalues, non-negative, ascending
  Eigen::MatrixXd phi_dagger;  // k x n
  Eigen::VectorXd mass;        // n lumped vertex masses used

  int n() const { return static_cast<int>(phi.rows()); }
  int k() const { return static_cast<int>(phi.cols()); }

  /// View of the same basis truncated to its first k_sub columns.
  SpectralBasis truncated(int k_sub) const;
};

/// k smallest generalized eigenpairs of W phi = lambda M phi via
/// shift-invert Lanczos (shift slightly below zero, full
/// reorthogonalization). Deterministic: seeded start vectors and a fixed
/// sign convention (first nonzero entry of each eigenvector, scanned in
/// vertex order, is positive).
///
/// Eigen-residual policy: ||W phi - lambda M phi|| <= 1e-8 ||W||_inf per
/// column, else ConvergenceFailure. Throws KTooLarge when k >= n.
SpectralBasis compute_basis(const LaplacianPair& lap, int k);

/// Spectral coefficients phi_dagger * f of an n x c function matrix.
Eigen::MatrixXd project(const SpectralBasis& basis, const Eigen::MatrixXd& f);

/// Builds a SpectralBasis from parts; recomputes phi_dagger.
SpectralBasis make_basis(Eigen::MatrixXd phi, Eigen::VectorXd lambda, Eigen::VectorXd mass);

// Binary cache of (phi, lambda, mass), little-endian float64 arrays with a
// versioned header, keyed by mesh content hash and k.
void save_basis_cache(const std::string& path, const SpectralBasis& basis,
                      std::uint64_t mesh_hash);
/// nullopt when the file is missing, corrupt, or hash/k do not match.
std::optional<SpectralBasis> load_basis_cache(const std::string& path,
                                              std::uint64_t mesh_hash, int k);

}  // namespace shapematch
