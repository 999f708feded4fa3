#include "shapematch/theory.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "shapematch/fmap.hpp"
#include "shapematch/pointmap.hpp"

namespace shapematch {

namespace {

struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform_pm1() { return 2.0 * (static_cast<double>(next() >> 11) * 0x1.0p-53) - 1.0; }
  int uniform_int(int bound) { return static_cast<int>(next() % static_cast<std::uint64_t>(bound)); }
};

Eigen::MatrixXd random_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform_pm1();
  return m;
}

std::vector<int> random_permutation(SplitMix64& rng, int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(p[static_cast<std::size_t>(i)],
                                            p[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
  return p;
}

// enumerate all injective maps {0..n_y-1} -> {0..n_x-1}, collecting the
// assignment objective of each
void enumerate_objectives(const Eigen::MatrixXd& cost, int depth, double acc,
                          std::vector<char>& used, std::vector<double>& out) {
  const int n_y = static_cast<int>(cost.rows());
  const int n_x = static_cast<int>(cost.cols());
  if (depth == n_y) {
    out.push_back(acc);
    return;
  }
  for (int j = 0; j < n_x; ++j) {
    if (used[static_cast<std::size_t>(j)]) continue;
    used[static_cast<std::size_t>(j)] = 1;
    enumerate_objectives(cost, depth + 1, acc + cost(depth, j), used, out);
    used[static_cast<std::size_t>(j)] = 0;
  }
}

LemmaReport analyze_instance(const Eigen::MatrixXd& f_x, const Eigen::MatrixXd& f_y) {
  const int n_y = static_cast<int>(f_y.rows());
  const int n_x = static_cast<int>(f_x.rows());
  Eigen::MatrixXd cost(n_y, n_x);
  for (int i = 0; i < n_y; ++i)
    for (int j = 0; j < n_x; ++j) cost(i, j) = (f_y.row(i) - f_x.row(j)).squaredNorm();

  std::vector<double> objectives;
  std::vector<char> used(static_cast<std::size_t>(n_x), 0);
  enumerate_objectives(cost, 0, 0.0, used, objectives);

  LemmaReport rep;
  rep.min_objective = *std::min_element(objectives.begin(), objectives.end());
  double runner_up = std::numeric_limits<double>::infinity();
  for (double obj : objectives) {
    if (obj - rep.min_objective <= 1e-12) {
      ++rep.minimizer_count;
    } else {
      runner_up = std::min(runner_up, obj);
    }
  }
  rep.runner_up_gap = runner_up - rep.min_objective;
  return rep;
}

}  // namespace

LemmaReport check_lemma_repeated_rows(int n_x, int n_y, int c, std::uint64_t seed,
                                      bool duplicated) {
  if (n_x > 8 || n_y > n_x || n_y < 1 || c < 1)
    throw DimensionMismatch("need 1 <= n_y <= n_x <= 8 and c >= 1");
  SplitMix64 rng(seed * 2654435761ull + 1);
  Eigen::MatrixXd f_x = random_matrix(rng, n_x, c);
  Eigen::MatrixXd f_y = random_matrix(rng, n_y, c);
  if (duplicated) {
    if (n_x < 2) throw DimensionMismatch("duplicated instance needs n_x >= 2");
    f_x.row(1) = f_x.row(0);  // exactly one duplicated pair
    f_y.row(0) = f_x.row(0);  // a query that must use a duplicate
  }
  LemmaReport rep = analyze_instance(f_x, f_y);
  rep.duplicated_rows = duplicated;
  if (!duplicated && rep.minimizer_count != 1) {
    // measure-zero tie in the control draw: re-seed once and flag it
    SplitMix64 rng2(seed * 2654435761ull + 7777);
    f_x = random_matrix(rng2, n_x, c);
    f_y = random_matrix(rng2, n_y, c);
    rep = analyze_instance(f_x, f_y);
    rep.duplicated_rows = false;
    rep.reseeded = true;
  }
  return rep;
}

namespace {

struct PermutedPair {
  SpectralBasis basis_x, basis_y;
  std::vector<int> perm;  // Y vertex i corresponds to X vertex perm[i]
};

PermutedPair permuted_copy_bases(const TriangleMesh& mesh, int k, SplitMix64& rng) {
  const LaplacianPair lap = build_laplacian(mesh);
  PermutedPair pair;
  pair.basis_x = compute_basis(lap, k);
  pair.perm = random_permutation(rng, mesh.n());
  const int n = mesh.n();
  Eigen::MatrixXd phi_y(n, k);
  Eigen::VectorXd mass_y(n);
  for (int i = 0; i < n; ++i) {
    phi_y.row(i) = pair.basis_x.phi.row(pair.perm[static_cast<std::size_t>(i)]);
    mass_y[i] = pair.basis_x.mass[pair.perm[static_cast<std::size_t>(i)]];
  }
  // the permuted eigenvectors are a valid basis of the permuted mesh; using
  // them directly avoids eigenvector sign and rotation ambiguity
  pair.basis_y = make_basis(std::move(phi_y), pair.basis_x.lambda, std::move(mass_y));
  return pair;
}

Eigen::MatrixXd draw_full_rank(SplitMix64& rng, int k, int c, double* min_sv) {
  for (int attempt = 0; attempt < 5; ++attempt) {
    Eigen::MatrixXd a = random_matrix(rng, k, c);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const double smax = svd.singularValues()[0];
    const double smin = svd.singularValues()[svd.singularValues().size() - 1];
    if (smin > 0.0 && smax / smin <= 1e10) {
      if (min_sv) *min_sv = smin;
      return a;
    }
  }
  throw RankDeficientDraw("could not draw a well-conditioned coefficient matrix");
}

}  // namespace

TheoremReport check_theorem_map_equality(const TriangleMesh& mesh, int k, int c,
                                         std::uint64_t seed) {
  if (k >= mesh.n()) throw KTooLarge("k must be < n");
  if (c < k) throw DimensionMismatch("theorem construction needs c >= k");
  SplitMix64 rng(seed * 0x9e3779b97f4a7c15ull + 13);
  PermutedPair pair = permuted_copy_bases(mesh, k, rng);

  TheoremReport rep;
  const Eigen::MatrixXd a_x0 = draw_full_rank(rng, k, c, &rep.min_singular_value);
  const Eigen::MatrixXd f_x = pair.basis_x.phi * a_x0;
  Eigen::MatrixXd f_y(mesh.n(), c);
  for (int i = 0; i < mesh.n(); ++i) f_y.row(i) = f_x.row(pair.perm[static_cast<std::size_t>(i)]);

  const Eigen::MatrixXd a_x = project(pair.basis_x, f_x);
  const Eigen::MatrixXd a_y = project(pair.basis_y, f_y);
  const Eigen::MatrixXd zero_mask = Eigen::MatrixXd::Zero(k, k);
  const FunctionalMap c_solved = solve_fmap(a_x, a_y, zero_mask, 0.0);

  const PointMap pi = make_hard_pointmap(pair.perm, mesh.n());
  const FunctionalMap c_pi = fmap_from_pointmap(pi, pair.basis_x, pair.basis_y);

  rep.map_distance = (c_solved.c - c_pi.c).norm();
  rep.data_residual = (c_solved.c * a_x - a_y).norm();
  rep.passed = rep.map_distance < 1e-8 && rep.data_residual < 1e-10;
  return rep;
}

TheoremReport check_theorem_span_violated(const TriangleMesh& mesh, int k, int c,
                                          std::uint64_t seed, double noise_rel) {
  // Under the permuted-copy construction, out-of-span noise stays exactly
  // M-orthogonal after the permutation and the equality survives. To show
  // the hypothesis is needed, both sides share one basis here and the
  // correspondence is a random permutation of the same mesh, which does
  // not commute with the spectral projection.
  if (k >= mesh.n()) throw KTooLarge("k must be < n");
  if (c < k) throw DimensionMismatch("theorem construction needs c >= k");
  SplitMix64 rng(seed * 0x9e3779b97f4a7c15ull + 13);
  const LaplacianPair lap = build_laplacian(mesh);
  const SpectralBasis basis = compute_basis(lap, k);
  const std::vector<int> perm = random_permutation(rng, mesh.n());

  TheoremReport rep;
  const Eigen::MatrixXd a_x0 = draw_full_rank(rng, k, c, &rep.min_singular_value);
  Eigen::MatrixXd f_x = basis.phi * a_x0;
  if (noise_rel > 0.0) {
    Eigen::MatrixXd noise = random_matrix(rng, mesh.n(), c);
    noise -= basis.phi * (basis.phi_dagger * noise);  // keep only the out-of-span part
    noise *= noise_rel * f_x.norm() / noise.norm();
    f_x += noise;
  }
  Eigen::MatrixXd f_y(mesh.n(), c);
  for (int i = 0; i < mesh.n(); ++i) f_y.row(i) = f_x.row(perm[static_cast<std::size_t>(i)]);

  const Eigen::MatrixXd a_x = project(basis, f_x);
  const Eigen::MatrixXd a_y = project(basis, f_y);
  const FunctionalMap c_solved = solve_fmap(a_x, a_y, Eigen::MatrixXd::Zero(k, k), 0.0);
  const FunctionalMap c_pi = fmap_from_pointmap(make_hard_pointmap(perm, mesh.n()), basis, basis);

  rep.map_distance = (c_solved.c - c_pi.c).norm();
  rep.data_residual = (c_solved.c * a_x - a_y).norm();
  rep.passed = rep.map_distance < 1e-8 && rep.data_residual < 1e-10;
  return rep;
}

}  // namespace shapematch
