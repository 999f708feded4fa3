#pragma once

#include <Eigen/Core>

#include "shapematch/fmap.hpp"

namespace shapematch {

/// All unsupervised loss terms of one pair plus their weighted total.
struct LossReport {
  double bij = 0.0;
  double orth = 0.0;
  double couple = 0.0;
  double contrast_x = 0.0;
  double contrast_y = 0.0;
  double total = 0.0;
};

/// ||C_XY C_YX - I||_F^2 + ||C_YX C_XY - I||_F^2
double loss_bijectivity(const FunctionalMap& c_xy, const FunctionalMap& c_yx);

/// ||C_XY^T C_XY - I||_F^2 + ||C_YX^T C_YX - I||_F^2. The per-map form is
/// used; the mixed-map variant found in some writeups repeats one term and
/// is not a proper orthogonality penalty.
double loss_orthogonality(const FunctionalMap& c_xy, const FunctionalMap& c_yx);

/// ||C_solved - C_converted||_F^2 with provenance checked on both sides.
double loss_coupling(const FunctionalMap& c_solved, const FunctionalMap& c_converted);

/// ||phi_dagger Softmax(F F^T / tau) phi - I||_F^2: the functional-map
/// defect of the soft self-map, small when feature rows are discriminative.
double loss_contrastive(const Eigen::MatrixXd& f, const SpectralBasis& basis, double tau);

/// Assembles the weighted total; total = w_bij*bij + w_orth*orth +
/// w_couple*couple + w_contrast*(contrast_x + contrast_y).
LossReport make_loss_report(double bij, double orth, double couple, double contrast_x,
                            double contrast_y, const SolverParams& params);

void save_loss_report_csv(const std::string& path, const std::string& pair_name,
                          const LossReport& report);

}  // namespace shapematch
