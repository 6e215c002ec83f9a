#pragma once

#include <cstddef>

namespace semlink::kernels {

// Dense double-precision kernels behind the autodiff ops. Every kernel has a
// serial reference and an OpenMP variant; both compute each output element
// with the same accumulation order, so results are bit-identical and the
// parallel path can be checked against the reference in tests.
//
// matmul_nn: c[m x n]  = a[m x k] * b[k x n]
// matmul_nt: c[m x n]  = a[m x k] * b[n x k]^T
// matmul_tn: c[k x n]  = a[m x k]^T * g[m x n]
// Accumulating variants add into c instead of overwriting.

namespace serial {
void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
void pairwise_sq_dists(const double* x, std::size_t rows, std::size_t d,
                       double* out);
}  // namespace serial

namespace parallel {
void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
void pairwise_sq_dists(const double* x, std::size_t rows, std::size_t d,
                       double* out);
}  // namespace parallel

// Default entry points; dispatch to the OpenMP variant when it pays off.
void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
void pairwise_sq_dists(const double* x, std::size_t rows, std::size_t d,
                       double* out);

}  // namespace semlink::kernels
