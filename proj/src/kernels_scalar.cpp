#include "sdmvae/kernels.hpp"

#include <cmath>
#include <cstring>

// Scalar reference kernels. These define the numerical ground truth the
// SIMD variants are equivalence-tested against; loop orders here are part
// of the contract (see kernels.hpp) and must not be reordered.

namespace sdmvae::kernels {
namespace {

void s_add(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void s_sub(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void s_mul(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void s_div(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] / b[i];
}

void s_sqrt(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::sqrt(a[i]);
}

void s_scale(double* dst, const double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * s;
}

void s_offset(double* dst, const double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + s;
}

void s_axpy(double* dst, double s, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += s * a[i];
}

void s_mul_acc(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

void s_matmul_acc(double* c, const double* a, const double* b,
                  std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    double* crow = c + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      const double* brow = b + k * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

void s_matmul(double* c, const double* a, const double* b,
              std::size_t p, std::size_t q, std::size_t r) {
  std::memset(c, 0, p * r * sizeof(double));
  s_matmul_acc(c, a, b, p, q, r);
}

void s_colsum(double* out, const double* a, std::size_t rows, std::size_t cols) {
  std::memset(out, 0, cols * sizeof(double));
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
  }
}

void s_addcol(double* dst, const double* a, const double* v,
              std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double vi = v[i];
    const double* arow = a + i * cols;
    double* drow = dst + i * cols;
    for (std::size_t j = 0; j < cols; ++j) drow[j] = arow[j] + vi;
  }
}

void s_adam(double* p, double* m, double* v, const double* g,
            double lr, double beta1, double beta2, double eps,
            double bc1, double bc2, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    const double mhat = m[i] * bc1;
    const double vhat = v[i] * bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

constexpr KernelTable kScalarTable = {
    "scalar", s_add,    s_sub,    s_mul,    s_div,  s_sqrt,
    s_scale,  s_offset, s_axpy,   s_mul_acc,
    s_matmul, s_matmul_acc, s_colsum, s_addcol, s_adam,
};

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

}  // namespace sdmvae::kernels
