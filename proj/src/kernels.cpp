#include "shapematch/kernels.hpp"

#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace shapematch::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double max_value(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double weighted_sqnorm(const double* x, const double* w, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

}  // namespace scalar

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*squared_distance)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*max_value)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double*, double, std::size_t);
  double (*weighted_sqnorm)(const double*, const double*, std::size_t);
};

constexpr Table kScalarTable = {scalar::dot,   scalar::squared_distance,
                                scalar::sum,   scalar::max_value,
                                scalar::axpy,  scalar::scale,
                                scalar::weighted_sqnorm};

#ifdef SHAPEMATCH_HAVE_AVX2
constexpr Table kAvx2Table = {avx2::dot,   avx2::squared_distance,
                              avx2::sum,   avx2::max_value,
                              avx2::axpy,  avx2::scale,
                              avx2::weighted_sqnorm};
#endif

bool cpu_has_avx2() {
#if defined(SHAPEMATCH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("SHAPEMATCH_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && backend_supported(Backend::Avx2)) return Backend::Avx2;
  }
  return backend_supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

// mutable dispatch state, initialized on first use
Backend g_backend = detect_backend();
const Table* g_table = nullptr;

const Table* table_for(Backend b) {
#ifdef SHAPEMATCH_HAVE_AVX2
  if (b == Backend::Avx2) return &kAvx2Table;
#endif
  (void)b;
  return &kScalarTable;
}

const Table& active_table() {
  if (!g_table) g_table = table_for(g_backend);
  return *g_table;
}

}  // namespace

Backend active_backend() {
  active_table();
  return g_backend;
}

bool backend_supported(Backend b) {
  if (b == Backend::Scalar) return true;
  return cpu_has_avx2();
}

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw std::runtime_error("kernel backend not supported on this machine: " + backend_name(b));
  g_backend = b;
  g_table = table_for(b);
}

std::string backend_name(Backend b) {
  return b == Backend::Scalar ? "scalar" : "avx2";
}

double dot(const double* a, const double* b, std::size_t n) {
  return active_table().dot(a, b, n);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  return active_table().squared_distance(a, b, n);
}

double sum(const double* x, std::size_t n) { return active_table().sum(x, n); }

double max_value(const double* x, std::size_t n) { return active_table().max_value(x, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active_table().axpy(alpha, x, y, n);
}

void scale(double* x, double alpha, std::size_t n) { active_table().scale(x, alpha, n); }

double weighted_sqnorm(const double* x, const double* w, std::size_t n) {
  return active_table().weighted_sqnorm(x, w, n);
}

std::size_t nearest_row(const double* query, const double* rows, std::size_t n_rows,
                        std::size_t c, std::size_t stride, double* best_out) {
  const auto& t = active_table();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double d = t.squared_distance(query, rows + r * stride, c);
    if (d < best_d) {  // strict: ties keep the smallest index
      best_d = d;
      best = r;
    }
  }
  if (best_out) *best_out = best_d;
  return best;
}

}  // namespace shapematch::kernels
