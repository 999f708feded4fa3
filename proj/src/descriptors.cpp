#include "shapematch/descriptors.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "shapematch/kernels.hpp"

namespace shapematch {

namespace {

// eigenvalues at or below this fraction of lambda_max count as zero modes
constexpr double kZeroModeRel = 1e-8;

int first_nonzero_mode(const SpectralBasis& basis) {
  const double lam_max = basis.lambda[basis.k() - 1];
  const double thresh = kZeroModeRel * lam_max;
  for (int i = 0; i < basis.k(); ++i)
    if (basis.lambda[i] > thresh) return i;
  return basis.k();
}

void normalize_columns_m(Eigen::MatrixXd& f, const Eigen::VectorXd& mass) {
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    const double norm =
        std::sqrt(kernels::weighted_sqnorm(f.col(c).data(), mass.data(), static_cast<std::size_t>(f.rows())));
    if (norm > 0.0) kernels::scale(f.col(c).data(), 1.0 / norm, static_cast<std::size_t>(f.rows()));
  }
}

}  // namespace

FeatureMatrix make_features(const SpectralBasis& basis, Eigen::MatrixXd f) {
  if (f.rows() != basis.phi.rows())
    throw DimensionMismatch("feature matrix has " + std::to_string(f.rows()) +
                            " rows, mesh has " + std::to_string(basis.phi.rows()));
  for (Eigen::Index r = 0; r < f.rows(); ++r)
    if (f.row(r).isZero(0.0))
      throw DegenerateFeatures("feature row " + std::to_string(r) + " is all-zero");
  FeatureMatrix fm;
  fm.a = project(basis, f);
  fm.f = std::move(f);
  return fm;
}

Eigen::MatrixXd hks_at(const SpectralBasis& basis, const Eigen::VectorXd& times) {
  const int k = basis.k();
  Eigen::MatrixXd weights(k, times.size());
  for (int i = 0; i < k; ++i)
    for (Eigen::Index t = 0; t < times.size(); ++t)
      weights(i, t) = std::exp(-basis.lambda[i] * times[t]);
  const Eigen::MatrixXd phi2 = basis.phi.array().square().matrix();
  return phi2 * weights;
}

FeatureMatrix hks(const SpectralBasis& basis, int num_times) {
  if (num_times < 1) throw DimensionMismatch("num_times must be >= 1");
  const int i0 = first_nonzero_mode(basis);
  if (basis.k() - i0 < 2) throw DegenerateSpectrum("need at least 2 nonzero eigenvalues");
  const double lam_min = basis.lambda[i0];
  const double lam_max = basis.lambda[basis.k() - 1];
  const double t_min = 4.0 * std::log(10.0) / lam_max;
  const double t_max = 4.0 * std::log(10.0) / lam_min;
  Eigen::VectorXd times(num_times);
  for (int j = 0; j < num_times; ++j) {
    const double s = num_times == 1 ? 0.0 : static_cast<double>(j) / (num_times - 1);
    times[j] = std::exp(std::log(t_min) + s * (std::log(t_max) - std::log(t_min)));
  }
  Eigen::MatrixXd f = hks_at(basis, times);
  normalize_columns_m(f, basis.mass);
  return make_features(basis, std::move(f));
}

FeatureMatrix wks(const SpectralBasis& basis, int num_energies, double variance_scale) {
  if (num_energies < 1) throw DimensionMismatch("num_energies must be >= 1");
  if (variance_scale <= 0.0) throw DimensionMismatch("variance_scale must be positive");
  const int i0 = first_nonzero_mode(basis);
  const int k = basis.k();
  if (k - i0 < 2) throw DegenerateSpectrum("need at least 2 nonzero eigenvalues");
  const double e_lo = std::log(basis.lambda[i0]);
  const double e_hi = std::log(basis.lambda[k - 1]);
  if (!(e_hi > e_lo)) throw DegenerateSpectrum("nonzero spectrum has no spread");
  const double sigma = variance_scale * (e_hi - e_lo) / num_energies;
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

  Eigen::VectorXd energies(num_energies);
  const double lo = e_lo + 2.0 * sigma, hi = e_hi - 2.0 * sigma;
  for (int j = 0; j < num_energies; ++j) {
    const double s = num_energies == 1 ? 0.0 : static_cast<double>(j) / (num_energies - 1);
    energies[j] = lo + s * (hi - lo);
  }

  // weights over nonzero modes only; each column normalized by its weight sum
  const int n = basis.n();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, num_energies);
  Eigen::MatrixXd weights(k - i0, num_energies);
  for (int i = i0; i < k; ++i) {
    const double lnl = std::log(basis.lambda[i]);
    for (int j = 0; j < num_energies; ++j) {
      const double d = energies[j] - lnl;
      weights(i - i0, j) = std::exp(-d * d * inv_2s2);
    }
  }
  const Eigen::MatrixXd phi2 = basis.phi.rightCols(k - i0).array().square().matrix();
  f = phi2 * weights;
  for (int j = 0; j < num_energies; ++j) {
    const double weight_sum = weights.col(j).sum();
    if (!(weight_sum > 0.0))
      throw DegenerateSpectrum("energy band " + std::to_string(j) + " has no spectral support");
    f.col(j) /= weight_sum;
  }
  normalize_columns_m(f, basis.mass);
  return make_features(basis, std::move(f));
}

namespace {

constexpr std::uint32_t kFeatureMagic = 0x53464541;  // "SFEA"
constexpr std::uint32_t kFeatureVersion = 1;

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

Eigen::MatrixXd read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("malformed feature CSV cell: " + cell);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged feature CSV row in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty feature CSV: " + path);
  Eigen::MatrixXd f(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return f;
}

Eigen::MatrixXd read_features_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  std::uint32_t magic, version;
  std::uint64_t n, c;
  if (!read_le(in, magic) || magic != kFeatureMagic || !read_le(in, version) ||
      version != kFeatureVersion || !read_le(in, n) || !read_le(in, c))
    throw ParseError("bad binary feature header: " + path);
  Eigen::MatrixXd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  for (Eigen::Index r = 0; r < f.rows(); ++r)
    for (Eigen::Index j = 0; j < f.cols(); ++j)
      if (!read_le(in, f(r, j))) throw ParseError("truncated binary feature file: " + path);
  return f;
}

}  // namespace

FeatureMatrix load_features(const SpectralBasis& basis, const std::string& path) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  Eigen::MatrixXd f = csv ? read_features_csv(path) : read_features_binary(path);
  return make_features(basis, std::move(f));
}

void save_features(const std::string& path, const Eigen::MatrixXd& f) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  if (csv) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature file: " + path);
    out.precision(17);
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.cols(); ++c) out << (c ? "," : "") << f(r, c);
      out << '\n';
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file: " + path);
  write_le(out, kFeatureMagic);
  write_le(out, kFeatureVersion);
  write_le(out, static_cast<std::uint64_t>(f.rows()));
  write_le(out, static_cast<std::uint64_t>(f.cols()));
  for (Eigen::Index r = 0; r < f.rows(); ++r)
    for (Eigen::Index c = 0; c < f.cols(); ++c) write_le(out, f(r, c));
}

}  // namespace shapematch
