#include "shapematch/fmap.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "shapematch/losses.hpp"
#include "shapematch/pointmap.hpp"

namespace shapematch {

double SolverParams::u() const { return std::log(lambda); }

double SolverParams::v() const { return std::log(gamma / (1.0 - gamma)); }

void SolverParams::set_unconstrained(double u_new, double v_new) {
  lambda = std::exp(u_new);
  gamma = 1.0 / (1.0 + std::exp(-v_new));
}

void SolverParams::validate() const {
  if (!(lambda > 0.0)) throw GammaOutOfRange("lambda must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw GammaOutOfRange("gamma must lie in (0, 1]");
  if (!(tau > 0.0)) throw GammaOutOfRange("tau must be positive");
}

Eigen::MatrixXd mask_standard(const Eigen::VectorXd& lambda_x, const Eigen::VectorXd& lambda_y) {
  Eigen::MatrixXd m(lambda_y.size(), lambda_x.size());
  for (Eigen::Index i = 0; i < lambda_y.size(); ++i)
    for (Eigen::Index j = 0; j < lambda_x.size(); ++j) {
      const double d = lambda_y[i] - lambda_x[j];
      m(i, j) = d * d;
    }
  return m;
}

namespace {

// l^g / (l^2g + 1) and 1 / (l^2g + 1) with 0^g == 0
struct ResolventParts {
  Eigen::VectorXd f, g;
};

ResolventParts resolvent_parts(const Eigen::VectorXd& lambda, double gamma) {
  ResolventParts out;
  out.f.resize(lambda.size());
  out.g.resize(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double lam = std::max(lambda[i], 0.0);
    const double p = lam > 0.0 ? std::pow(lam, gamma) : 0.0;
    const double denom = p * p + 1.0;
    out.f[i] = p / denom;
    out.g[i] = 1.0 / denom;
  }
  return out;
}

// d/dgamma of the same parts; p' = p ln(lambda)
struct ResolventDerivs {
  Eigen::VectorXd df, dg;
};

ResolventDerivs resolvent_derivs(const Eigen::VectorXd& lambda, double gamma) {
  ResolventDerivs out;
  out.df.resize(lambda.size());
  out.dg.resize(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double lam = std::max(lambda[i], 0.0);
    if (lam == 0.0) {
      out.df[i] = 0.0;
      out.dg[i] = 0.0;
      continue;
    }
    const double p = std::pow(lam, gamma);
    const double dp = p * std::log(lam);
    const double denom = p * p + 1.0;
    out.df[i] = (1.0 - p * p) / (denom * denom) * dp;
    out.dg[i] = -2.0 * p / (denom * denom) * dp;
  }
  return out;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw GammaOutOfRange("gamma=" + std::to_string(gamma) + " outside (0, 1]");
}

}  // namespace

Eigen::MatrixXd mask_resolvent(const Eigen::VectorXd& lambda_x, const Eigen::VectorXd& lambda_y,
                               double gamma) {
  check_gamma(gamma);
  const ResolventParts px = resolvent_parts(lambda_x, gamma);
  const ResolventParts py = resolvent_parts(lambda_y, gamma);
  Eigen::MatrixXd m(lambda_y.size(), lambda_x.size());
  for (Eigen::Index i = 0; i < lambda_y.size(); ++i)
    for (Eigen::Index j = 0; j < lambda_x.size(); ++j) {
      const double re = py.f[i] - px.f[j];
      const double im = py.g[i] - px.g[j];
      m(i, j) = re * re + im * im;
    }
  return m;
}

Eigen::MatrixXd mask_resolvent_dgamma(const Eigen::VectorXd& lambda_x,
                                      const Eigen::VectorXd& lambda_y, double gamma) {
  check_gamma(gamma);
  const ResolventParts px = resolvent_parts(lambda_x, gamma);
  const ResolventParts py = resolvent_parts(lambda_y, gamma);
  const ResolventDerivs dx = resolvent_derivs(lambda_x, gamma);
  const ResolventDerivs dy = resolvent_derivs(lambda_y, gamma);
  Eigen::MatrixXd m(lambda_y.size(), lambda_x.size());
  for (Eigen::Index i = 0; i < lambda_y.size(); ++i)
    for (Eigen::Index j = 0; j < lambda_x.size(); ++j)
      m(i, j) = 2.0 * (py.f[i] - px.f[j]) * (dy.df[i] - dx.df[j]) +
                2.0 * (py.g[i] - px.g[j]) * (dy.dg[i] - dx.dg[j]);
  return m;
}

Eigen::MatrixXd make_mask(const Eigen::VectorXd& lambda_x, const Eigen::VectorXd& lambda_y,
                          MaskKind kind, double gamma) {
  return kind == MaskKind::StandardLaplacian ? mask_standard(lambda_x, lambda_y)
                                             : mask_resolvent(lambda_x, lambda_y, gamma);
}

FunctionalMap solve_fmap(const Eigen::MatrixXd& a_x, const Eigen::MatrixXd& a_y,
                         const Eigen::MatrixXd& mask, double lambda) {
  if (a_x.cols() != a_y.cols())
    throw DimensionMismatch("coefficient matrices disagree on feature count");
  if (mask.rows() != a_y.rows() || mask.cols() != a_x.rows())
    throw DimensionMismatch("mask must be k_Y x k_X");
  if (lambda < 0.0) throw GammaOutOfRange("lambda must be non-negative");
  const Eigen::Index k_x = a_x.rows(), k_y = a_y.rows();

  const Eigen::MatrixXd gram = a_x * a_x.transpose();
  const Eigen::MatrixXd rhs = a_x * a_y.transpose();  // column i is row i's b

  // Weyl bounds certify most row systems from one Gram eigendecomposition;
  // only uncertified rows pay for an exact per-row eigensolve.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(gram);
  if (gram_eig.info() != Eigen::Success) throw SingularSystem("gram eigensolver failed");
  const double g_min = gram_eig.eigenvalues()[0];
  const double g_max = gram_eig.eigenvalues()[k_x - 1];

  FunctionalMap out;
  out.c.resize(k_y, k_x);
  out.provenance = Provenance::Solved;
  Eigen::MatrixXd h(k_x, k_x);
  for (Eigen::Index i = 0; i < k_y; ++i) {
    h = gram;
    h.diagonal() += lambda * mask.row(i).transpose();
    const double lo = g_min + lambda * mask.row(i).minCoeff();
    const double hi = g_max + lambda * mask.row(i).maxCoeff();
    if (lo > 0.0 && hi / lo <= 1e12) {
      out.c.row(i) = h.ldlt().solve(rhs.col(i)).transpose();
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw SingularSystem("row eigensolver failed");
    const double emin = es.eigenvalues()[0];
    const double emax = es.eigenvalues()[k_x - 1];
    if (!(emin > 0.0) || emax / emin > 1e12)
      throw SingularSystem("row " + std::to_string(i) +
                           " system is singular or has condition number > 1e12");
    out.c.row(i) = (es.eigenvectors() *
                    (es.eigenvalues().cwiseInverse().asDiagonal() *
                     (es.eigenvectors().transpose() * rhs.col(i))))
                       .transpose();
  }
  return out;
}

ParamGradients fmap_param_gradients(const FunctionalMap& solution, const Eigen::MatrixXd& a_x,
                                    const Eigen::MatrixXd& a_y, const Eigen::VectorXd& lambda_x,
                                    const Eigen::VectorXd& lambda_y, const SolverParams& params,
                                    const Eigen::MatrixXd& upstream) {
  if (solution.provenance != Provenance::Solved)
    throw ProvenanceMismatch("gradients require a Solved functional map");
  if (upstream.rows() != solution.c.rows() || upstream.cols() != solution.c.cols())
    throw DimensionMismatch("upstream gradient shape mismatch");
  params.validate();

  const Eigen::MatrixXd mask = make_mask(lambda_x, lambda_y, params.mask_kind, params.gamma);
  const Eigen::MatrixXd dmask = params.mask_kind == MaskKind::Resolvent
                                    ? mask_resolvent_dgamma(lambda_x, lambda_y, params.gamma)
                                    : Eigen::MatrixXd::Zero(mask.rows(), mask.cols());

  const Eigen::MatrixXd gram = a_x * a_x.transpose();
  const Eigen::Index k_x = a_x.rows(), k_y = a_y.rows();
  double d_lam = 0.0, d_gam = 0.0;
  Eigen::MatrixXd h(k_x, k_x);
  for (Eigen::Index i = 0; i < k_y; ++i) {
    h = gram;
    h.diagonal() += params.lambda * mask.row(i).transpose();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    const Eigen::VectorXd s = ldlt.solve(upstream.row(i).transpose());
    const Eigen::VectorXd c_i = solution.c.row(i).transpose();
    // dc/dlambda = -H^{-1} diag(m_i) c_i ; dc/dgamma = -H^{-1} lambda diag(dm_i) c_i
    d_lam -= s.dot(mask.row(i).transpose().cwiseProduct(c_i));
    d_gam -= params.lambda * s.dot(dmask.row(i).transpose().cwiseProduct(c_i));
  }
  ParamGradients g;
  g.d_lambda = d_lam * params.lambda;                        // chain through lambda = exp(u)
  g.d_gamma = d_gam * params.gamma * (1.0 - params.gamma);   // chain through logistic(v)
  return g;
}

namespace {

// feature-dependent quantities that stay fixed while (lambda, gamma) move
struct PairContext {
  Eigen::MatrixXd a_x, a_y;
  Eigen::VectorXd lambda_x, lambda_y;
  Eigen::MatrixXd c_pi;  // converted map, the coupling target
  double contrast = 0.0;
};

PairContext build_context(const AdaptPair& pair, const SolverParams& params) {
  if (pair.basis_x.k() != pair.basis_y.k())
    throw DimensionMismatch("adaptation pairs need bases of equal spectral size");
  PairContext ctx;
  ctx.a_x = pair.f_x.a;
  ctx.a_y = pair.f_y.a;
  ctx.lambda_x = pair.basis_x.lambda;
  ctx.lambda_y = pair.basis_y.lambda;
  const PointMap pi =
      pointmap_from_features(pair.f_x.f, pair.f_y.f, MatchMode::Softmax, params.tau);
  ctx.c_pi = fmap_from_pointmap(pi, pair.basis_x, pair.basis_y).c;
  ctx.contrast = loss_contrastive(pair.f_x.f, pair.basis_x, params.tau) +
                 loss_contrastive(pair.f_y.f, pair.basis_y, params.tau);
  return ctx;
}

struct PairEval {
  double bij = 0.0, orth = 0.0, couple = 0.0, contrast = 0.0, total = 0.0;
  ParamGradients grad;
};

PairEval eval_pair(const PairContext& ctx, const SolverParams& params, bool want_grad) {
  PairEval ev;
  const Eigen::MatrixXd mask_xy =
      make_mask(ctx.lambda_x, ctx.lambda_y, params.mask_kind, params.gamma);
  const Eigen::MatrixXd mask_yx =
      make_mask(ctx.lambda_y, ctx.lambda_x, params.mask_kind, params.gamma);
  const FunctionalMap c_xy = solve_fmap(ctx.a_x, ctx.a_y, mask_xy, params.lambda);
  const FunctionalMap c_yx = solve_fmap(ctx.a_y, ctx.a_x, mask_yx, params.lambda);

  const Eigen::Index k = c_xy.c.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd prod_xy = c_xy.c * c_yx.c - eye;
  const Eigen::MatrixXd prod_yx = c_yx.c * c_xy.c - eye;
  const Eigen::MatrixXd orth_x = c_xy.c.transpose() * c_xy.c - eye;
  const Eigen::MatrixXd orth_y = c_yx.c.transpose() * c_yx.c - eye;
  const Eigen::MatrixXd couple_diff = c_xy.c - ctx.c_pi;

  ev.bij = prod_xy.squaredNorm() + prod_yx.squaredNorm();
  ev.orth = orth_x.squaredNorm() + orth_y.squaredNorm();
  ev.couple = couple_diff.squaredNorm();
  ev.contrast = ctx.contrast;
  ev.total = params.w_bij * ev.bij + params.w_orth * ev.orth + params.w_couple * ev.couple +
             params.w_contrast * ev.contrast;
  if (!want_grad) return ev;

  const Eigen::MatrixXd up_xy = params.w_bij * 2.0 *
                                    (prod_xy * c_yx.c.transpose() + c_yx.c.transpose() * prod_yx) +
                                params.w_orth * 4.0 * (c_xy.c * orth_x) +
                                params.w_couple * 2.0 * couple_diff;
  const Eigen::MatrixXd up_yx = params.w_bij * 2.0 *
                                    (prod_yx * c_xy.c.transpose() + c_xy.c.transpose() * prod_xy) +
                                params.w_orth * 4.0 * (c_yx.c * orth_y);
  const ParamGradients g_xy =
      fmap_param_gradients(c_xy, ctx.a_x, ctx.a_y, ctx.lambda_x, ctx.lambda_y, params, up_xy);
  const ParamGradients g_yx =
      fmap_param_gradients(c_yx, ctx.a_y, ctx.a_x, ctx.lambda_y, ctx.lambda_x, params, up_yx);
  ev.grad.d_lambda = g_xy.d_lambda + g_yx.d_lambda;
  ev.grad.d_gamma = g_xy.d_gamma + g_yx.d_gamma;
  return ev;
}

PairEval eval_mean(const std::vector<PairContext>& ctxs, const SolverParams& params,
                   bool want_grad, int jobs) {
  std::vector<PairEval> evals(ctxs.size());
  if (jobs > 1 && ctxs.size() > 1) {
    std::vector<std::future<PairEval>> futures;
    futures.reserve(ctxs.size());
    for (const auto& ctx : ctxs)
      futures.push_back(std::async(std::launch::async,
                                   [&ctx, &params, want_grad] { return eval_pair(ctx, params, want_grad); }));
    for (std::size_t i = 0; i < futures.size(); ++i) evals[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < ctxs.size(); ++i) evals[i] = eval_pair(ctxs[i], params, want_grad);
  }
  PairEval mean;  // reduce in pair order: deterministic regardless of jobs
  for (const PairEval& ev : evals) {
    mean.bij += ev.bij;
    mean.orth += ev.orth;
    mean.couple += ev.couple;
    mean.contrast += ev.contrast;
    mean.total += ev.total;
    mean.grad.d_lambda += ev.grad.d_lambda;
    mean.grad.d_gamma += ev.grad.d_gamma;
  }
  const double inv = 1.0 / static_cast<double>(ctxs.size());
  mean.bij *= inv;
  mean.orth *= inv;
  mean.couple *= inv;
  mean.contrast *= inv;
  mean.total *= inv;
  mean.grad.d_lambda *= inv;
  mean.grad.d_gamma *= inv;
  return mean;
}

}  // namespace

AdaptResult adapt_params(const std::vector<AdaptPair>& pairs, const SolverParams& params0,
                         int steps, double step_size, int jobs, AdaptOptimizer optimizer) {
  if (pairs.empty()) throw EmptyInput("adapt_params needs at least one pair");
  if (steps < 0) throw DimensionMismatch("steps must be >= 0");
  if (!(step_size > 0.0)) throw DimensionMismatch("step_size must be positive");
  params0.validate();

  std::vector<PairContext> ctxs;
  ctxs.reserve(pairs.size());
  for (const AdaptPair& pair : pairs) ctxs.push_back(build_context(pair, params0));

  AdaptResult result;
  result.params = params0;
  double u = params0.u(), v = params0.v();

  PairEval current;
  try {
    current = eval_mean(ctxs, result.params, false, jobs);
  } catch (const SingularSystem& e) {
    throw NonFiniteLoss(std::string("initial solve blew up: ") + e.what());
  }
  if (!std::isfinite(current.total))
    throw NonFiniteLoss("initial total loss is not finite");
  auto record = [&](int step) {
    result.trace.push_back(current.total);
    result.steps.push_back({step, result.params.lambda, result.params.gamma, current.total,
                            current.bij, current.orth, current.couple, current.contrast});
  };
  record(0);

  if (optimizer == AdaptOptimizer::Adam) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    double m_u = 0, m_v = 0, v_u = 0, v_v = 0;
    for (int it = 1; it <= steps; ++it) {
      const PairEval with_grad = eval_mean(ctxs, result.params, true, jobs);
      const double gu = with_grad.grad.d_lambda, gv = with_grad.grad.d_gamma;
      m_u = kBeta1 * m_u + (1 - kBeta1) * gu;
      m_v = kBeta1 * m_v + (1 - kBeta1) * gv;
      v_u = kBeta2 * v_u + (1 - kBeta2) * gu * gu;
      v_v = kBeta2 * v_v + (1 - kBeta2) * gv * gv;
      const double corr1 = 1.0 - std::pow(kBeta1, it);
      const double corr2 = 1.0 - std::pow(kBeta2, it);
      const double nu = u - step_size * (m_u / corr1) / (std::sqrt(v_u / corr2) + kEps);
      const double nv = v - step_size * (m_v / corr1) / (std::sqrt(v_v / corr2) + kEps);
      SolverParams trial = result.params;
      trial.set_unconstrained(nu, nv);
      PairEval next;
      try {
        next = eval_mean(ctxs, trial, false, jobs);
      } catch (const SingularSystem&) {
        break;  // blow-up: stop at the last good parameters
      }
      if (!std::isfinite(next.total)) break;
      u = nu;
      v = nv;
      result.params = trial;
      current = next;
      record(it);
    }
    return result;
  }

  constexpr double kArmijoC = 1e-4;
  for (int it = 1; it <= steps; ++it) {
    const PairEval with_grad = eval_mean(ctxs, result.params, true, jobs);
    const double gu = with_grad.grad.d_lambda, gv = with_grad.grad.d_gamma;
    const double grad_sq = gu * gu + gv * gv;
    if (grad_sq < 1e-30) break;  // stationary

    double t = step_size;
    bool accepted = false;
    SolverParams trial = result.params;
    for (int bt = 0; bt < 60; ++bt) {
      trial.set_unconstrained(u - t * gu, v - t * gv);
      PairEval cand;
      try {
        cand = eval_mean(ctxs, trial, false, jobs);
      } catch (const SingularSystem&) {
        t *= 0.5;  // overshoot into a singular regime: backtrack
        continue;
      }
      // the explicit strict comparison keeps the trace guarantee exact even
      // when the Armijo decrement rounds below double resolution
      if (std::isfinite(cand.total) && cand.total < current.total &&
          cand.total <= current.total - kArmijoC * t * grad_sq) {
        u -= t * gu;
        v -= t * gv;
        result.params = trial;
        current = cand;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent direction progress
    record(it);
  }
  return result;
}

namespace {

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

constexpr std::uint32_t kFmapMagic = 0x53464d50;  // "SFMP"
constexpr std::uint32_t kFmapVersion = 1;

}  // namespace

void save_fmap_csv(const std::string& path, const FunctionalMap& map) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write functional map: " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < map.c.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.c.cols(); ++j) out << (j ? "," : "") << map.c(i, j);
    out << '\n';
  }
}

FunctionalMap load_fmap_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open functional map: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged functional map CSV: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty functional map CSV: " + path);
  FunctionalMap map;
  map.c.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      map.c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return map;
}

void save_fmap_binary(const std::string& path, const FunctionalMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write functional map: " + path);
  write_le(out, kFmapMagic);
  write_le(out, kFmapVersion);
  write_le(out, static_cast<std::uint64_t>(map.c.rows()));
  write_le(out, static_cast<std::uint64_t>(map.c.cols()));
  write_le(out, static_cast<std::uint32_t>(map.provenance == Provenance::Solved ? 0 : 1));
  for (Eigen::Index i = 0; i < map.c.rows(); ++i)
    for (Eigen::Index j = 0; j < map.c.cols(); ++j) write_le(out, map.c(i, j));
}

FunctionalMap load_fmap_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open functional map: " + path);
  std::uint32_t magic, version, prov;
  std::uint64_t k_y, k_x;
  if (!read_le(in, magic) || magic != kFmapMagic || !read_le(in, version) ||
      version != kFmapVersion || !read_le(in, k_y) || !read_le(in, k_x) || !read_le(in, prov))
    throw ParseError("bad functional map header: " + path);
  FunctionalMap map;
  map.provenance = prov == 0 ? Provenance::Solved : Provenance::ConvertedFromPointwise;
  map.c.resize(static_cast<Eigen::Index>(k_y), static_cast<Eigen::Index>(k_x));
  for (Eigen::Index i = 0; i < map.c.rows(); ++i)
    for (Eigen::Index j = 0; j < map.c.cols(); ++j)
      if (!read_le(in, map.c(i, j))) throw ParseError("truncated functional map: " + path);
  return map;
}

}  // namespace shapematch
