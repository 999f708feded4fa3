#include "shapematch/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace shapematch {

namespace {

double sparse_inf_norm(const Eigen::SparseMatrix<double>& W) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(W.rows());
  for (int col = 0; col < W.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(W, col); it; ++it)
      row_sums[it.row()] += std::abs(it.value());
  return row_sums.maxCoeff();
}

// deterministic splitmix64 stream; avoids implementation-defined
// std::normal_distribution sequences
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform_pm1() {  // in [-1, 1)
    return 2.0 * (static_cast<double>(next() >> 11) * 0x1.0p-53) - 1.0;
  }
};

double m_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& mass, const Eigen::VectorXd& b) {
  return (a.array() * mass.array() * b.array()).sum();
}

// Lanczos on op(v) = (W - sigma M)^{-1} M v with M-inner products and full
// reorthogonalization. An exact invariant subspace (beta ~ 0) triggers a
// restart with a fresh deflated random vector; T stays block tridiagonal
// and the global basis stays M-orthonormal.
struct LanczosResult {
  Eigen::VectorXd values;   // eigenvalues, ascending
  Eigen::MatrixXd vectors;  // M-orthonormal columns
  bool converged = false;
};

LanczosResult lanczos_shift_invert(const Eigen::SparseMatrix<double>& W,
                                   const Eigen::VectorXd& mass, int k, int max_basis,
                                   double sigma,
                                   const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>& solver,
                                   double residual_tol) {
  const int n = static_cast<int>(W.rows());
  LanczosResult out;

  SplitMix64 rng(0x5eedULL);
  Eigen::MatrixXd V(n, max_basis);
  std::vector<double> alphas, betas;
  alphas.reserve(static_cast<std::size_t>(max_basis));
  betas.reserve(static_cast<std::size_t>(max_basis));

  auto reorthogonalize = [&](Eigen::VectorXd& w, int cols) {
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coef =
          V.leftCols(cols).transpose() * (mass.array() * w.array()).matrix();
      w.noalias() -= V.leftCols(cols) * coef;
    }
  };

  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform_pm1();
  v /= std::sqrt(m_dot(v, mass, v));
  V.col(0) = v;

  int m = 0;
  for (int j = 0; j < max_basis; ++j) {
    Eigen::VectorXd w = solver.solve((mass.array() * V.col(j).array()).matrix());
    alphas.push_back(m_dot(w, mass, V.col(j)));
    reorthogonalize(w, j + 1);
    m = j + 1;
    if (j + 1 >= max_basis) break;
    const double beta = std::sqrt(std::max(m_dot(w, mass, w), 0.0));
    if (beta < 1e-12) {
      betas.push_back(0.0);
      Eigen::VectorXd fresh(n);
      for (int i = 0; i < n; ++i) fresh[i] = rng.uniform_pm1();
      reorthogonalize(fresh, j + 1);
      const double nv = std::sqrt(m_dot(fresh, mass, fresh));
      if (nv < 1e-12) break;  // whole space exhausted
      V.col(j + 1) = fresh / nv;
    } else {
      betas.push_back(beta);
      V.col(j + 1) = w / beta;
    }
  }

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) T(i, i) = alphas[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < m; ++i)
    T(i, i + 1) = T(i + 1, i) = betas[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes(T);
  if (tes.info() != Eigen::Success) return out;

  // largest theta of the shift-inverted operator <-> smallest lambda
  if (m < k) return out;
  Eigen::VectorXd lam(k);
  Eigen::MatrixXd Phi(n, k);
  const double w_norm = sparse_inf_norm(W);
  for (int i = 0; i < k; ++i) {
    const int src = m - 1 - i;  // eigh ascending; take the k largest
    const double theta = tes.eigenvalues()[src];
    if (theta == 0.0) return out;
    lam[i] = sigma + 1.0 / theta;
    Eigen::VectorXd phi = V.leftCols(m) * tes.eigenvectors().col(src);
    phi /= std::sqrt(m_dot(phi, mass, phi));
    const double res = (W * phi - lam[i] * (mass.array() * phi.array()).matrix()).norm();
    if (!(res <= residual_tol * w_norm)) return out;
    Phi.col(i) = phi;
  }
  // ascending eigenvalue order
  std::vector<int> order(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lam[a] < lam[b]; });
  out.values.resize(k);
  out.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    out.values[i] = lam[order[static_cast<std::size_t>(i)]];
    out.vectors.col(i) = Phi.col(order[static_cast<std::size_t>(i)]);
  }
  out.converged = true;
  return out;
}

void fix_signs(Eigen::MatrixXd& phi) {
  for (Eigen::Index c = 0; c < phi.cols(); ++c)
    for (Eigen::Index r = 0; r < phi.rows(); ++r)
      if (phi(r, c) != 0.0) {
        if (phi(r, c) < 0.0) phi.col(c) = -phi.col(c);
        break;
      }
}

}  // namespace

SpectralBasis SpectralBasis::truncated(int k_sub) const {
  if (k_sub < 1 || k_sub > k()) throw BasisTooSmall("truncation to k=" + std::to_string(k_sub));
  SpectralBasis b;
  b.phi = phi.leftCols(k_sub);
  b.lambda = lambda.head(k_sub);
  b.phi_dagger = phi_dagger.topRows(k_sub);
  b.mass = mass;
  return b;
}

SpectralBasis make_basis(Eigen::MatrixXd phi, Eigen::VectorXd lambda, Eigen::VectorXd mass) {
  if (phi.rows() != mass.size() || phi.cols() != lambda.size())
    throw DimensionMismatch("basis parts have inconsistent shapes");
  SpectralBasis b;
  b.phi_dagger = phi.transpose() * mass.asDiagonal();
  b.phi = std::move(phi);
  b.lambda = std::move(lambda);
  b.mass = std::move(mass);
  return b;
}

SpectralBasis compute_basis(const LaplacianPair& lap, int k) {
  const int n = static_cast<int>(lap.W.rows());
  if (k < 1) throw KTooLarge("k must be >= 1");
  if (k >= n) throw KTooLarge("k=" + std::to_string(k) + " must be < n=" + std::to_string(n));

  // shift slightly below zero keeps W - sigma M positive definite
  const double scale = lap.W.diagonal().sum() / lap.mass.sum();
  const double sigma = -1e-4 * scale;
  Eigen::SparseMatrix<double> A = lap.W;
  for (int i = 0; i < n; ++i) A.coeffRef(i, i) -= sigma * lap.mass[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("factorization of shifted stiffness matrix failed");

  constexpr double kResidualTol = 1e-8;  // artifact policy, documented
  int basis_size = std::min(n, std::max(2 * k + 20, 40));
  LanczosResult res;
  for (int attempt = 0; attempt < 5; ++attempt) {
    res = lanczos_shift_invert(lap.W, lap.mass, k, basis_size, sigma, solver, kResidualTol);
    if (res.converged) break;
    if (basis_size == n) break;
    basis_size = std::min(n, 2 * basis_size);
  }
  if (!res.converged)
    throw ConvergenceFailure("eigensolver did not reach the residual tolerance for k=" +
                             std::to_string(k));

  // clamp numerically tiny negative values of the null mode to zero; the
  // operator scale covers the k=1 case where lambda_max itself is ~0
  const double lam_scale = std::max(std::max(res.values[k - 1], 0.0), scale);
  for (int i = 0; i < k; ++i) {
    if (res.values[i] < -1e-8 * lam_scale)
      throw ConvergenceFailure("significantly negative eigenvalue computed");
    res.values[i] = std::max(res.values[i], 0.0);
  }
  fix_signs(res.vectors);
  return make_basis(std::move(res.vectors), std::move(res.values), lap.mass);
}

Eigen::MatrixXd project(const SpectralBasis& basis, const Eigen::MatrixXd& f) {
  if (f.rows() != basis.phi.rows())
    throw DimensionMismatch("function matrix has " + std::to_string(f.rows()) +
                            " rows, basis expects " + std::to_string(basis.phi.rows()));
  return basis.phi_dagger * f;
}

namespace {

constexpr std::uint32_t kCacheMagic = 0x53424153;  // "SBAS"
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
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

void save_basis_cache(const std::string& path, const SpectralBasis& basis,
                      std::uint64_t mesh_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write basis cache: " + path);
  write_le(out, kCacheMagic);
  write_le(out, kCacheVersion);
  write_le(out, mesh_hash);
  write_le(out, static_cast<std::uint64_t>(basis.n()));
  write_le(out, static_cast<std::uint64_t>(basis.k()));
  for (int i = 0; i < basis.k(); ++i) write_le(out, basis.lambda[i]);
  for (int r = 0; r < basis.n(); ++r)
    for (int c = 0; c < basis.k(); ++c) write_le(out, basis.phi(r, c));
  for (int i = 0; i < basis.n(); ++i) write_le(out, basis.mass[i]);
  if (!out) throw IoError("failed writing basis cache: " + path);
}

std::optional<SpectralBasis> load_basis_cache(const std::string& path,
                                              std::uint64_t mesh_hash, int k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint32_t magic, version;
  std::uint64_t hash, n_stored, k_stored;
  if (!read_le(in, magic) || magic != kCacheMagic) return std::nullopt;
  if (!read_le(in, version) || version != kCacheVersion) return std::nullopt;
  if (!read_le(in, hash) || hash != mesh_hash) return std::nullopt;
  if (!read_le(in, n_stored) || !read_le(in, k_stored)) return std::nullopt;
  if (k_stored != static_cast<std::uint64_t>(k)) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(n_stored);
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(k));
  Eigen::MatrixXd phi(n, static_cast<Eigen::Index>(k));
  Eigen::VectorXd mass(n);
  for (int i = 0; i < k; ++i)
    if (!read_le(in, lambda[i])) return std::nullopt;
  for (Eigen::Index r = 0; r < n; ++r)
    for (int c = 0; c < k; ++c)
      if (!read_le(in, phi(r, c))) return std::nullopt;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!read_le(in, mass[i])) return std::nullopt;
  return make_basis(std::move(phi), std::move(lambda), std::move(mass));
}

}  // namespace shapematch
