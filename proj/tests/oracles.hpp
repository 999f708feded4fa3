#pragma once

// independent oracles shared by the unit and acceptance suites; these must
// not reuse the implementation paths they check

#include <Eigen/Dense>
#include <stdexcept>

#include "shapematch/fmap.hpp"

namespace oracles {

inline double fmap_objective(const Eigen::MatrixXd& c, const Eigen::MatrixXd& a_x,
                             const Eigen::MatrixXd& a_y, const Eigen::MatrixXd& mask,
                             double lambda) {
  return (c * a_x - a_y).squaredNorm() + lambda * (mask.array() * c.array().square()).sum();
}

/// Vectorizes C and solves the full (k_y k_x) x (k_y k_x) normal system.
/// The system is assembled from finite differences of the objective, which
/// are exact for a quadratic, so no solver code is shared with solve_fmap.
inline Eigen::MatrixXd vectorized_dense_solve(const Eigen::MatrixXd& a_x,
                                              const Eigen::MatrixXd& a_y,
                                              const Eigen::MatrixXd& mask, double lambda) {
  const Eigen::Index k_y = a_y.rows(), k_x = a_x.rows();
  const Eigen::Index dim = k_y * k_x;
  auto basis_mat = [&](Eigen::Index a) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(k_y, k_x);
    e(a / k_x, a % k_x) = 1.0;
    return e;
  };
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(k_y, k_x);
  const double e0 = fmap_objective(zero, a_x, a_y, mask, lambda);
  Eigen::VectorXd single(dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    single[a] = fmap_objective(basis_mat(a), a_x, a_y, mask, lambda);
  Eigen::MatrixXd hess(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = a; b < dim; ++b) {
      const double eab = fmap_objective(basis_mat(a) + basis_mat(b), a_x, a_y, mask, lambda);
      hess(a, b) = hess(b, a) = eab - single[a] - single[b] + e0;
    }
  Eigen::VectorXd grad(dim);
  for (Eigen::Index a = 0; a < dim; ++a) grad[a] = single[a] - e0 - 0.5 * hess(a, a);
  const Eigen::VectorXd vec = hess.ldlt().solve(-grad);
  Eigen::MatrixXd c(k_y, k_x);
  for (Eigen::Index a = 0; a < dim; ++a) c(a / k_x, a % k_x) = vec[a];
  return c;
}

}  // namespace oracles
