#pragma once

#include <cstddef>

namespace sdmvae::kernels {

// Dense double-precision kernels behind the tensor engine and the optimizer.
//
// Contract: every SIMD variant computes results bit-identical to the scalar
// reference. Vector variants only parallelize across independent output
// elements and keep each element's accumulation order unchanged (matmul and
// colsum vectorize across output columns, never across the reduction index),
// and the project builds with -ffp-contract=off so neither side fuses
// multiply-adds. The equivalence tests assert exact equality, not tolerance.
struct KernelTable {
  const char* name;

  // dst[i] = a[i] (op) b[i]
  void (*add)(double* dst, const double* a, const double* b, std::size_t n);
  void (*sub)(double* dst, const double* a, const double* b, std::size_t n);
  void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
  void (*div)(double* dst, const double* a, const double* b, std::size_t n);
  void (*sqrt)(double* dst, const double* a, std::size_t n);
  void (*scale)(double* dst, const double* a, double s, std::size_t n);   // a * s
  void (*offset)(double* dst, const double* a, double s, std::size_t n);  // a + s
  void (*axpy)(double* dst, double s, const double* a, std::size_t n);    // dst += s * a
  void (*mul_acc)(double* dst, const double* a, const double* b, std::size_t n);  // dst += a .* b

  // c[p x r] = a[p x q] * b[q x r], row-major, i-k-j accumulation order.
  void (*matmul)(double* c, const double* a, const double* b,
                 std::size_t p, std::size_t q, std::size_t r);
  // Same but accumulates into c instead of overwriting.
  void (*matmul_acc)(double* c, const double* a, const double* b,
                     std::size_t p, std::size_t q, std::size_t r);

  // out[j] = sum_i a[i * cols + j], rows accumulated in ascending order.
  void (*colsum)(double* out, const double* a, std::size_t rows, std::size_t cols);

  // dst[i * cols + j] = a[i * cols + j] + v[i]
  void (*addcol)(double* dst, const double* a, const double* v,
                 std::size_t rows, std::size_t cols);

  // Fused Adam update. bc1/bc2 are the precomputed bias corrections
  // 1/(1 - beta1^t) and 1/(1 - beta2^t); m, v, p updated in place.
  void (*adam)(double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2, std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // null when AVX2 is unavailable (build or cpu)
const KernelTable* neon_table();  // null off aarch64

// Table picked once per process: best available ISA, overridable with
// SDMVAE_ISA=scalar|avx2|neon (falls back to scalar if the request is
// unavailable).
const KernelTable& active();

}  // namespace sdmvae::kernels
