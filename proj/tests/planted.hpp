#pragma once

// Planted-parameter construction for the adaptation recovery test.
//
// Synthetic identity bases (phi = I, M = I, n = k) make the feature matrix
// its own coefficient matrix and the soft map its own converted functional
// map. F_X = I and F_Y = tau (ln P + beta_i) give softmax(F_Y F_X^T / tau)
// = P exactly; P itself is built per entry so the regularized row solve at
// the planted (lambda*, gamma*) returns exactly P. The coupling loss then
// has its global zero at the planted parameters.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "shapematch/descriptors.hpp"
#include "shapematch/fmap.hpp"
#include "shapematch/pointmap.hpp"
#include "testutil.hpp"

namespace planted {

/// right-branch root of p*a - tau*ln(p) - tau*beta = 0
inline double solve_entry(double a, double beta, double tau) {
  const double vertex = tau / a;
  if (vertex * a - tau * std::log(vertex) - tau * beta > 0.0)
    throw std::runtime_error("planted construction: no root for this beta");
  double hi = std::max(1.0, 2.0 * vertex);
  while (hi * a - tau * std::log(hi) - tau * beta <= 0.0) hi *= 2.0;
  double lo = vertex;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid * a - tau * std::log(mid) - tau * beta > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

inline shapematch::AdaptPair make_pair(testutil::Rng& rng, int k, double lambda_star,
                                       double gamma_star, double tau) {
  using namespace shapematch;
  Eigen::VectorXd lam(k);
  lam[0] = 0.0;
  for (int i = 1; i < k; ++i) lam[i] = 0.3 + 7.7 * rng.uniform();
  std::sort(lam.data(), lam.data() + k);
  const Eigen::MatrixXd m_star = mask_resolvent(lam, lam, gamma_star);

  Eigen::MatrixXd p(k, k);
  Eigen::VectorXd betas(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd a = (1.0 + lambda_star * m_star.row(i).array()).matrix();
    double feasible = -1e300;
    for (int j = 0; j < k; ++j)
      feasible = std::max(feasible, 1.0 - std::log(tau) + std::log(a[j]));
    double lo = feasible + 1e-9, hi = feasible + 400.0;
    auto row_sum = [&](double beta) {
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += solve_entry(a[j], beta, tau);
      return s;
    };
    if (row_sum(lo) > 1.0)
      throw std::runtime_error("planted construction infeasible for this draw");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (row_sum(mid) > 1.0 ? hi : lo) = mid;
    }
    betas[i] = 0.5 * (lo + hi);
    for (int j = 0; j < k; ++j) p(i, j) = solve_entry(a[j], betas[i], tau);
  }

  Eigen::MatrixXd f_y(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) f_y(i, j) = tau * (std::log(p(i, j)) + betas[i]);

  const SpectralBasis basis =
      make_basis(Eigen::MatrixXd::Identity(k, k), lam, Eigen::VectorXd::Ones(k));
  AdaptPair pair;
  pair.basis_x = basis;
  pair.basis_y = basis;
  pair.f_x = make_features(basis, Eigen::MatrixXd::Identity(k, k));
  pair.f_y = make_features(basis, f_y);

  // consistency of the construction through the real pipeline
  const PointMap pi = pointmap_from_features(pair.f_x.f, pair.f_y.f, MatchMode::Softmax, tau);
  if ((pi.soft - p).cwiseAbs().maxCoeff() > 1e-9)
    throw std::runtime_error("planted construction: softmax inversion failed");
  const FunctionalMap c_star = solve_fmap(pair.f_x.a, pair.f_y.a, m_star, lambda_star);
  if ((c_star.c - p).cwiseAbs().maxCoeff() > 1e-6)
    throw std::runtime_error("planted construction: solver consistency failed");
  return pair;
}

}  // namespace planted
