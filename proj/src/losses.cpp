#include "shapematch/losses.hpp"

#include <fstream>

#include "shapematch/pointmap.hpp"

namespace shapematch {

double loss_bijectivity(const FunctionalMap& c_xy, const FunctionalMap& c_yx) {
  if (c_xy.k_x() != c_yx.k_y() || c_xy.k_y() != c_yx.k_x())
    throw DimensionMismatch("bijectivity loss needs composable maps");
  const Eigen::MatrixXd eye_y = Eigen::MatrixXd::Identity(c_xy.k_y(), c_xy.k_y());
  const Eigen::MatrixXd eye_x = Eigen::MatrixXd::Identity(c_yx.k_y(), c_yx.k_y());
  return (c_xy.c * c_yx.c - eye_y).squaredNorm() + (c_yx.c * c_xy.c - eye_x).squaredNorm();
}

double loss_orthogonality(const FunctionalMap& c_xy, const FunctionalMap& c_yx) {
  if (c_xy.k_x() != c_xy.k_y() || c_yx.k_x() != c_yx.k_y())
    throw DimensionMismatch("orthogonality loss needs square maps");
  const Eigen::MatrixXd eye_x = Eigen::MatrixXd::Identity(c_xy.k_x(), c_xy.k_x());
  const Eigen::MatrixXd eye_y = Eigen::MatrixXd::Identity(c_yx.k_x(), c_yx.k_x());
  return (c_xy.c.transpose() * c_xy.c - eye_x).squaredNorm() +
         (c_yx.c.transpose() * c_yx.c - eye_y).squaredNorm();
}

double loss_coupling(const FunctionalMap& c_solved, const FunctionalMap& c_converted) {
  if (c_solved.provenance != Provenance::Solved)
    throw ProvenanceMismatch("first argument must come from the solver");
  if (c_converted.provenance != Provenance::ConvertedFromPointwise)
    throw ProvenanceMismatch("second argument must be converted from a point map");
  if (c_solved.k_x() != c_converted.k_x() || c_solved.k_y() != c_converted.k_y())
    throw DimensionMismatch("coupling loss needs equal map dimensions");
  return (c_solved.c - c_converted.c).squaredNorm();
}

double loss_contrastive(const Eigen::MatrixXd& f, const SpectralBasis& basis, double tau) {
  if (f.rows() != basis.phi.rows())
    throw DimensionMismatch("features and basis live on different meshes");
  if (!(tau > 0.0)) throw GammaOutOfRange("tau must be positive");
  Eigen::MatrixXd sim = f * f.transpose() / tau;
  softmax_rows(sim);
  const Eigen::MatrixXd c_self = basis.phi_dagger * (sim * basis.phi);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(basis.k(), basis.k());
  return (c_self - eye).squaredNorm();
}

LossReport make_loss_report(double bij, double orth, double couple, double contrast_x,
                            double contrast_y, const SolverParams& params) {
  LossReport r;
  r.bij = bij;
  r.orth = orth;
  r.couple = couple;
  r.contrast_x = contrast_x;
  r.contrast_y = contrast_y;
  r.total = params.w_bij * bij + params.w_orth * orth + params.w_couple * couple +
            params.w_contrast * (contrast_x + contrast_y);
  return r;
}

void save_loss_report_csv(const std::string& path, const std::string& pair_name,
                          const LossReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss report: " + path);
  out.precision(17);
  out << "pair,bij,orth,couple,contrast_x,contrast_y,total\n";
  out << pair_name << ',' << report.bij << ',' << report.orth << ',' << report.couple << ','
      << report.contrast_x << ',' << report.contrast_y << ',' << report.total << '\n';
}

}  // namespace shapematch
