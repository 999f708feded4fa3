#pragma once

#include <cstddef>
#include <string>

// Data-parallel double-precision primitives used by the inner loops
// (feature nearest-neighbour scans, softmax rows, weighted norms).
// Each primitive has a scalar reference implementation and, on x86-64,
// an AVX2+FMA variant selected at runtime. The two backends are
// equivalence-tested against each other; results may differ by summation
// order only (bounded by a few ulps).
//
// The environment variable SHAPEMATCH_KERNELS={scalar,avx2} overrides the
// automatic selection.

namespace shapematch::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
bool backend_supported(Backend b);
/// Switch the active backend; throws std::runtime_error if unsupported.
void set_backend(Backend b);
std::string backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);  // n >= 1
/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, double alpha, std::size_t n);
/// sum_i w[i] * x[i]^2
double weighted_sqnorm(const double* x, const double* w, std::size_t n);

/// Index of the row of `rows` (row-major, n_rows x c, consecutive rows
/// `stride` doubles apart) closest in squared Euclidean distance to
/// `query`. Ties resolve to the smallest index.
std::size_t nearest_row(const double* query, const double* rows, std::size_t n_rows,
                        std::size_t c, std::size_t stride, double* best_out = nullptr);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, double alpha, std::size_t n);
double weighted_sqnorm(const double* x, const double* w, std::size_t n);
}  // namespace scalar

#ifdef SHAPEMATCH_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, double alpha, std::size_t n);
double weighted_sqnorm(const double* x, const double* w, std::size_t n);
}  // namespace avx2
#endif

}  // namespace shapematch::kernels
