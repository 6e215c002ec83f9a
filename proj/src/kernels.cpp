#include "semlink/kernels.hpp"

#include <omp.h>

#include <cstring>

namespace semlink::kernels {
namespace {

// Per-row worker functions shared by the serial and parallel drivers. Each
// output element accumulates in a fixed order, so the two drivers agree
// bit for bit.

inline void nn_row(const double* a, const double* b, double* c, std::size_t i,
                   std::size_t k, std::size_t n) {
  double* ci = c + i * n;
  const double* ai = a + i * k;
  std::memset(ci, 0, n * sizeof(double));
  for (std::size_t p = 0; p < k; ++p) {
    const double av = ai[p];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void nt_row(const double* a, const double* b, double* c, std::size_t i,
                   std::size_t k, std::size_t n, bool accumulate) {
  double* ci = c + i * n;
  const double* ai = a + i * k;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
    if (accumulate) {
      ci[j] += acc;
    } else {
      ci[j] = acc;
    }
  }
}

// One row of c = a^T * g, i.e. c[r, :] += sum_i a[i, r] * g[i, :].
inline void tn_row(const double* a, const double* g, double* c, std::size_t r,
                   std::size_t m, std::size_t k, std::size_t n) {
  double* cr = c + r * n;
  for (std::size_t i = 0; i < m; ++i) {
    const double av = a[i * k + r];
    const double* gi = g + i * n;
    for (std::size_t j = 0; j < n; ++j) cr[j] += av * gi[j];
  }
}

inline void dist_row(const double* x, std::size_t rows, std::size_t d,
                     double* out, std::size_t i) {
  const double* xi = x + i * d;
  double* oi = out + i * rows;
  for (std::size_t j = 0; j < rows; ++j) {
    const double* xj = x + j * d;
    double acc = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      const double diff = xi[p] - xj[p];
      acc += diff * diff;
    }
    oi[j] = acc;
  }
}

constexpr std::size_t kParallelFlops = 1 << 14;

}  // namespace

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) nn_row(a, b, c, i, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) nt_row(a, b, c, i, k, n, false);
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) nt_row(a, b, c, i, k, n, true);
}

void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t r = 0; r < k; ++r) tn_row(a, g, c, r, m, k, n);
}

void pairwise_sq_dists(const double* x, std::size_t rows, std::size_t d,
                       double* out) {
  for (std::size_t i = 0; i < rows; ++i) dist_row(x, rows, d, out, i);
}

}  // namespace serial

namespace parallel {

void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m > 1 && m * k * n >= kParallelFlops)
  for (std::size_t i = 0; i < m; ++i) nn_row(a, b, c, i, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m > 1 && m * k * n >= kParallelFlops)
  for (std::size_t i = 0; i < m; ++i) nt_row(a, b, c, i, k, n, false);
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m > 1 && m * k * n >= kParallelFlops)
  for (std::size_t i = 0; i < m; ++i) nt_row(a, b, c, i, k, n, true);
}

void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (k > 1 && m * k * n >= kParallelFlops)
  for (std::size_t r = 0; r < k; ++r) tn_row(a, g, c, r, m, k, n);
}

void pairwise_sq_dists(const double* x, std::size_t rows, std::size_t d,
                       double* out) {
#pragma omp parallel for schedule(static) if (rows > 1 && rows * rows * d >= kParallelFlops)
  for (std::size_t i = 0; i < rows; ++i) dist_row(x, rows, d, out, i);
}

}  // namespace parallel

// The parallel drivers call the same per-row helpers as the serial ones, so
// this dispatch never changes results, only scheduling.
namespace {
bool use_parallel() { return omp_get_max_threads() > 1 && !omp_in_parallel(); }
}  // namespace

void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  if (use_parallel()) {
    parallel::matmul_nn(a, b, c, m, k, n);
  } else {
    serial::matmul_nn(a, b, c, m, k, n);
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  if (use_parallel()) {
    parallel::matmul_nt(a, b, c, m, k, n);
  } else {
    serial::matmul_nt(a, b, c, m, k, n);
  }
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  if (use_parallel()) {
    parallel::matmul_nt_acc(a, b, c, m, k, n);
  } else {
    serial::matmul_nt_acc(a, b, c, m, k, n);
  }
}

void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  if (use_parallel()) {
    parallel::matmul_tn_acc(a, g, c, m, k, n);
  } else {
    serial::matmul_tn_acc(a, g, c, m, k, n);
  }
}

void pairwise_sq_dists(const double* x, std::size_t rows, std::size_t d,
                       double* out) {
  if (use_parallel()) {
    parallel::pairwise_sq_dists(x, rows, d, out);
  } else {
    serial::pairwise_sq_dists(x, rows, d, out);
  }
}

}  // namespace semlink::kernels
