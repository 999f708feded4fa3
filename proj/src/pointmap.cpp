#include "shapematch/pointmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

#include "shapematch/kernels.hpp"

namespace shapematch {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<int> nearest_rows(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& queries) {
  const RowMajorMatrix rows = targets;  // contiguous rows for the kernel scan
  const RowMajorMatrix qs = queries;
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < qs.rows(); ++i)
    out[static_cast<std::size_t>(i)] = static_cast<int>(
        kernels::nearest_row(qs.data() + i * qs.cols(), rows.data(),
                             static_cast<std::size_t>(rows.rows()),
                             static_cast<std::size_t>(rows.cols()),
                             static_cast<std::size_t>(rows.cols())));
  return out;
}

}  // namespace

PointMap make_hard_pointmap(std::vector<int> hard, int n_x) {
  for (int idx : hard)
    if (idx < 0 || idx >= n_x)
      throw DimensionMismatch("hard map index " + std::to_string(idx) + " outside [0, " +
                              std::to_string(n_x) + ")");
  PointMap pi;
  pi.kind = PointMapKind::Hard;
  pi.hard = std::move(hard);
  pi.n_x = n_x;
  return pi;
}

PointMap make_soft_pointmap(Eigen::MatrixXd soft) {
  for (Eigen::Index i = 0; i < soft.rows(); ++i) {
    if ((soft.row(i).array() < 0.0).any())
      throw DimensionMismatch("soft map has negative entries in row " + std::to_string(i));
    const double s = soft.row(i).sum();
    if (std::abs(s - 1.0) > 1e-9)
      throw DimensionMismatch("soft map row " + std::to_string(i) + " sums to " +
                              std::to_string(s));
  }
  PointMap pi;
  pi.kind = PointMapKind::Soft;
  pi.n_x = static_cast<int>(soft.cols());
  pi.soft = std::move(soft);
  return pi;
}

void softmax_rows(Eigen::MatrixXd& m) {
  RowMajorMatrix rm = m;
  const auto cols = static_cast<std::size_t>(rm.cols());
  for (Eigen::Index i = 0; i < rm.rows(); ++i) {
    double* row = rm.data() + i * rm.cols();
    const double mx = kernels::max_value(row, cols);
    for (std::size_t j = 0; j < cols; ++j) row[j] = std::exp(row[j] - mx);
    const double s = kernels::sum(row, cols);
    kernels::scale(row, 1.0 / s, cols);
  }
  m = rm;
}

PointMap pointmap_from_features(const Eigen::MatrixXd& f_x, const Eigen::MatrixXd& f_y,
                                MatchMode mode, double tau) {
  if (f_x.cols() != f_y.cols())
    throw DimensionMismatch("feature dimensions disagree: " + std::to_string(f_x.cols()) +
                            " vs " + std::to_string(f_y.cols()));
  if (mode == MatchMode::HardNN) {
    return make_hard_pointmap(nearest_rows(f_x, f_y), static_cast<int>(f_x.rows()));
  }
  if (!(tau > 0.0)) throw GammaOutOfRange("tau must be positive");
  Eigen::MatrixXd s = f_y * f_x.transpose() / tau;
  softmax_rows(s);
  PointMap pi;
  pi.kind = PointMapKind::Soft;
  pi.n_x = static_cast<int>(f_x.rows());
  pi.soft = std::move(s);
  return pi;
}

Eigen::SparseMatrix<double> soft_pointmap_topt(const Eigen::MatrixXd& f_x,
                                               const Eigen::MatrixXd& f_y, double tau,
                                               int top_t) {
  if (f_x.cols() != f_y.cols()) throw DimensionMismatch("feature dimensions disagree");
  if (!(tau > 0.0)) throw GammaOutOfRange("tau must be positive");
  if (top_t < 1) throw DimensionMismatch("top_t must be >= 1");
  const Eigen::Index n_y = f_y.rows(), n_x = f_x.rows();
  const int t = std::min<int>(top_t, static_cast<int>(n_x));

  Eigen::SparseMatrix<double> pi(n_y, n_x);
  pi.reserve(Eigen::VectorXi::Constant(static_cast<int>(n_y), t));
  std::vector<int> idx(static_cast<std::size_t>(n_x));
  for (Eigen::Index i = 0; i < n_y; ++i) {
    const Eigen::VectorXd sim = f_x * f_y.row(i).transpose() / tau;
    std::iota(idx.begin(), idx.end(), 0);
    // largest similarity first; ties to the smallest index
    std::partial_sort(idx.begin(), idx.begin() + t, idx.end(), [&](int a, int b) {
      if (sim[a] != sim[b]) return sim[a] > sim[b];
      return a < b;
    });
    double mx = sim[idx[0]];
    double total = 0.0;
    std::vector<double> vals(static_cast<std::size_t>(t));
    for (int j = 0; j < t; ++j) {
      vals[static_cast<std::size_t>(j)] = std::exp(sim[idx[static_cast<std::size_t>(j)]] - mx);
      total += vals[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < t; ++j)
      pi.insert(i, idx[static_cast<std::size_t>(j)]) = vals[static_cast<std::size_t>(j)] / total;
  }
  pi.makeCompressed();
  return pi;
}

namespace {

void resolve_truncation(const SpectralBasis& basis_x, const SpectralBasis& basis_y, int& k_x,
                        int& k_y) {
  if (k_x < 0) k_x = basis_x.k();
  if (k_y < 0) k_y = basis_y.k();
  if (k_x > basis_x.k() || k_y > basis_y.k())
    throw BasisTooSmall("requested spectral size exceeds the available basis");
  if (k_x < 1 || k_y < 1) throw BasisTooSmall("spectral size must be >= 1");
}

}  // namespace

FunctionalMap fmap_from_pointmap(const PointMap& pi, const SpectralBasis& basis_x,
                                 const SpectralBasis& basis_y, int k_x, int k_y) {
  resolve_truncation(basis_x, basis_y, k_x, k_y);
  if (pi.n_x != basis_x.n() || pi.n_y() != basis_y.n())
    throw BasisMeshMismatch("point map dimensions do not match the bases");
  FunctionalMap out;
  out.provenance = Provenance::ConvertedFromPointwise;
  if (pi.kind == PointMapKind::Hard) {
    Eigen::MatrixXd gathered(pi.n_y(), k_x);
    for (int i = 0; i < pi.n_y(); ++i)
      gathered.row(i) = basis_x.phi.row(pi.hard[static_cast<std::size_t>(i)]).head(k_x);
    out.c = basis_y.phi_dagger.topRows(k_y) * gathered;
  } else {
    out.c = basis_y.phi_dagger.topRows(k_y) * (pi.soft * basis_x.phi.leftCols(k_x));
  }
  return out;
}

FunctionalMap fmap_from_pointmap(const Eigen::SparseMatrix<double>& pi_soft,
                                 const SpectralBasis& basis_x, const SpectralBasis& basis_y,
                                 int k_x, int k_y) {
  resolve_truncation(basis_x, basis_y, k_x, k_y);
  if (pi_soft.cols() != basis_x.n() || pi_soft.rows() != basis_y.n())
    throw BasisMeshMismatch("point map dimensions do not match the bases");
  FunctionalMap out;
  out.provenance = Provenance::ConvertedFromPointwise;
  out.c = basis_y.phi_dagger.topRows(k_y) * (pi_soft * basis_x.phi.leftCols(k_x));
  return out;
}

PointMap pointmap_from_fmap(const FunctionalMap& map, const SpectralBasis& basis_x,
                            const SpectralBasis& basis_y) {
  if (map.k_x() > basis_x.k() || map.k_y() > basis_y.k())
    throw BasisTooSmall("functional map larger than the available bases");
  // align embeddings: rows of phi_X C^T against rows of phi_Y
  const Eigen::MatrixXd emb_x = basis_x.phi.leftCols(map.k_x()) * map.c.transpose();
  const Eigen::MatrixXd emb_y = basis_y.phi.leftCols(map.k_y());
  return make_hard_pointmap(nearest_rows(emb_x, emb_y), basis_x.n());
}

std::pair<FunctionalMap, PointMap> refine_spectral_upsampling(const FunctionalMap& c0,
                                                              const SpectralBasis& basis_x,
                                                              const SpectralBasis& basis_y,
                                                              int k_start, int k_end, int step) {
  if (k_start < 1 || k_start > k_end) throw BasisTooSmall("need 1 <= k_start <= k_end");
  if (k_end > basis_x.k() || k_end > basis_y.k())
    throw BasisTooSmall("k_end exceeds the available basis size");
  if (step < 1) throw BasisTooSmall("step must be >= 1");
  if (c0.k_x() != k_start || c0.k_y() != k_start)
    throw DimensionMismatch("initial map must be k_start x k_start");

  FunctionalMap current = c0;
  int k = k_start;
  while (k < k_end) {
    const int k_next = std::min(k + step, k_end);
    const PointMap pi = pointmap_from_fmap(current, basis_x, basis_y);
    current = fmap_from_pointmap(pi, basis_x, basis_y, k_next, k_next);
    k = k_next;
  }
  PointMap final_pi = pointmap_from_fmap(current, basis_x, basis_y);
  return {std::move(current), std::move(final_pi)};
}

bool is_partial_permutation(const PointMap& pi) {
  if (pi.kind != PointMapKind::Hard) return false;
  std::vector<char> hit(static_cast<std::size_t>(pi.n_x), 0);
  for (int idx : pi.hard) {
    if (hit[static_cast<std::size_t>(idx)]) return false;
    hit[static_cast<std::size_t>(idx)] = 1;
  }
  return true;
}

void save_pointmap(const std::string& path, const PointMap& pi) {
  if (pi.kind != PointMapKind::Hard) throw DimensionMismatch("text format stores hard maps only");
  save_correspondence(path, pi.hard);
}

PointMap load_pointmap(const std::string& path, int n_x) {
  return make_hard_pointmap(load_correspondence(path), n_x);
}

namespace {

constexpr std::uint32_t kSoftMagic = 0x53504d50;  // "SPMP"
constexpr std::uint32_t kSoftVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* p = reinterpret_cast<unsigned char*>(&value);
    std::reverse(p, p + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_le(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) return false;
  if constexpr (std::endian::native == std::endian::big) {
    auto* p = reinterpret_cast<unsigned char*>(&value);
    std::reverse(p, p + sizeof(T));
  }
  return true;
}

}  // namespace

void save_soft_pointmap(const std::string& path, const Eigen::MatrixXd& soft) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write soft map: " + path);
  write_le(out, kSoftMagic);
  write_le(out, kSoftVersion);
  write_le(out, static_cast<std::uint64_t>(soft.rows()));
  write_le(out, static_cast<std::uint64_t>(soft.cols()));
  for (Eigen::Index i = 0; i < soft.rows(); ++i)
    for (Eigen::Index j = 0; j < soft.cols(); ++j) write_le(out, soft(i, j));
}

Eigen::MatrixXd load_soft_pointmap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open soft map: " + path);
  std::uint32_t magic, version;
  std::uint64_t n_y, n_x;
  if (!read_le(in, magic) || magic != kSoftMagic || !read_le(in, version) ||
      version != kSoftVersion || !read_le(in, n_y) || !read_le(in, n_x))
    throw ParseError("bad soft map header: " + path);
  Eigen::MatrixXd soft(static_cast<Eigen::Index>(n_y), static_cast<Eigen::Index>(n_x));
  for (Eigen::Index i = 0; i < soft.rows(); ++i)
    for (Eigen::Index j = 0; j < soft.cols(); ++j)
      if (!read_le(in, soft(i, j))) throw ParseError("truncated soft map: " + path);
  return soft;
}

}  // namespace shapematch
