#pragma once

#include <Eigen/Core>
#include <vector>

#include "shapematch/descriptors.hpp"
#include "shapematch/spectral.hpp"

namespace shapematch {

enum class MaskKind { StandardLaplacian, Resolvent };

/// Regularization strength, mask shape and loss weights of the solver.
/// lambda and gamma are exposed through a log / logistic reparameterization
/// so gradient steps can never leave lambda > 0, gamma in (0,1).
struct SolverParams {
  double lambda = 100.0;
  double gamma = 0.5;
  double tau = 0.07;
  int k = 30;
  double w_bij = 1.0;
  double w_orth = 1.0;
  double w_couple = 1.0;
  double w_contrast = 10.0;
  MaskKind mask_kind = MaskKind::Resolvent;

  double u() const;                      // log lambda
  double v() const;                      // logit gamma
  void set_unconstrained(double u, double v);
  void validate() const;                 // lambda > 0, gamma in (0,1], tau > 0
};

enum class Provenance { Solved, ConvertedFromPointwise };

/// k_Y x k_X map between spectral bases.
struct FunctionalMap {
  Eigen::MatrixXd c;
  Provenance provenance = Provenance::Solved;

  int k_y() const { return static_cast<int>(c.rows()); }
  int k_x() const { return static_cast<int>(c.cols()); }
};

/// Laplacian-commutativity penalty: entry[i][j] = (l_y[i] - l_x[j])^2.
Eigen::MatrixXd mask_standard(const Eigen::VectorXd& lambda_x, const Eigen::VectorXd& lambda_y);

/// Resolvent penalty, gamma in (0,1]: squared difference of
/// l^g/(l^2g + 1) plus squared difference of 1/(l^2g + 1), with 0^g == 0.
/// Entries lie in [0, 1.25].
Eigen::MatrixXd mask_resolvent(const Eigen::VectorXd& lambda_x, const Eigen::VectorXd& lambda_y,
                               double gamma);

/// Entrywise derivative of mask_resolvent with respect to gamma.
Eigen::MatrixXd mask_resolvent_dgamma(const Eigen::VectorXd& lambda_x,
                                      const Eigen::VectorXd& lambda_y, double gamma);

Eigen::MatrixXd make_mask(const Eigen::VectorXd& lambda_x, const Eigen::VectorXd& lambda_y,
                          MaskKind kind, double gamma);

/// Minimizer of ||C A_X - A_Y||_F^2 + lambda sum_ij mask_ij C_ij^2, solved
/// row by row: the mask penalty is diagonal per row, so row i solves
/// (A_X A_X^T + lambda diag(mask row i)) c_i = A_X (A_Y row i)^T.
/// Throws SingularSystem when a row system has condition number > 1e12.
FunctionalMap solve_fmap(const Eigen::MatrixXd& a_x, const Eigen::MatrixXd& a_y,
                         const Eigen::MatrixXd& mask, double lambda);

struct ParamGradients {
  double d_lambda = 0.0;  // with respect to u = log lambda
  double d_gamma = 0.0;   // with respect to v = logit gamma
};

/// Implicit-function gradients of a scalar loss through solve_fmap, given
/// the upstream dLoss/dC. Returned values are with respect to the
/// unconstrained (u, v) parameterization.
ParamGradients fmap_param_gradients(const FunctionalMap& solution, const Eigen::MatrixXd& a_x,
                                    const Eigen::MatrixXd& a_y, const Eigen::VectorXd& lambda_x,
                                    const Eigen::VectorXd& lambda_y, const SolverParams& params,
                                    const Eigen::MatrixXd& upstream);

/// One training pair for adaptation: features and bases are frozen.
struct AdaptPair {
  FeatureMatrix f_x, f_y;
  SpectralBasis basis_x, basis_y;
};

struct AdaptStep {
  int step = 0;
  double lambda = 0.0, gamma = 0.0;
  double total = 0.0, bij = 0.0, orth = 0.0, couple = 0.0, contrast = 0.0;
};

struct AdaptResult {
  SolverParams params;
  std::vector<double> trace;      // total loss at step 0 and each accepted step
  std::vector<AdaptStep> steps;   // same rows with the loss breakdown
};

enum class AdaptOptimizer { Backtracking, Adam };

/// Optimizes (lambda, gamma) in unconstrained space on the mean total loss
/// over pairs. The default is gradient descent with Armijo backtracking
/// (factor 0.5, c = 1e-4): accepted steps strictly decrease the loss, so
/// traces are monotone by construction. Adam (beta1 0.9, beta2 0.999,
/// step_size as the learning rate) is the non-monotone alternative; a
/// numerical blow-up mid-run stops early at the last good parameters.
/// Throws NonFiniteLoss if the initial loss is not finite.
AdaptResult adapt_params(const std::vector<AdaptPair>& pairs, const SolverParams& params0,
                         int steps, double step_size, int jobs = 1,
                         AdaptOptimizer optimizer = AdaptOptimizer::Backtracking);

// Functional-map serialization: CSV (row-major, k_Y rows) and binary
// float64 with a (k_Y, k_X, provenance) header.
void save_fmap_csv(const std::string& path, const FunctionalMap& map);
FunctionalMap load_fmap_csv(const std::string& path);
void save_fmap_binary(const std::string& path, const FunctionalMap& map);
FunctionalMap load_fmap_binary(const std::string& path);

}  // namespace shapematch
