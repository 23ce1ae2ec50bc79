#include "sdmvae/kernels.hpp"

// NEON variants (2 doubles per lane-group), aarch64 only where NEON is
// baseline. Same bit-exactness contract as the AVX2 file: vectorize across
// independent outputs, scalar tails, no FMA.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstring>

namespace sdmvae::kernels {
namespace {

void v_add(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void v_sub(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void v_mul(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void v_div(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vdivq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) dst[i] = a[i] / b[i];
}

void v_sqrt(double* dst, const double* a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vsqrtq_f64(vld1q_f64(a + i)));
  for (; i < n; ++i) dst[i] = std::sqrt(a[i]);
}

void v_scale(double* dst, const double* a, double s, std::size_t n) {
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vmulq_f64(vld1q_f64(a + i), vs));
  for (; i < n; ++i) dst[i] = a[i] * s;
}

void v_offset(double* dst, const double* a, double s, std::size_t n) {
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vaddq_f64(vld1q_f64(a + i), vs));
  for (; i < n; ++i) dst[i] = a[i] + s;
}

void v_axpy(double* dst, double s, const double* a, std::size_t n) {
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t prod = vmulq_f64(vs, vld1q_f64(a + i));
    vst1q_f64(dst + i, vaddq_f64(vld1q_f64(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] += s * a[i];
}

void v_mul_acc(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t prod = vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    vst1q_f64(dst + i, vaddq_f64(vld1q_f64(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] += a[i] * b[i];
}

void v_matmul_acc(double* c, const double* a, const double* b,
                  std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    double* crow = c + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      const float64x2_t va = vdupq_n_f64(aik);
      const double* brow = b + k * r;
      std::size_t j = 0;
      for (; j + 2 <= r; j += 2) {
        const float64x2_t prod = vmulq_f64(va, vld1q_f64(brow + j));
        vst1q_f64(crow + j, vaddq_f64(vld1q_f64(crow + j), prod));
      }
      for (; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

void v_matmul(double* c, const double* a, const double* b,
              std::size_t p, std::size_t q, std::size_t r) {
  std::memset(c, 0, p * r * sizeof(double));
  v_matmul_acc(c, a, b, p, q, r);
}

void v_colsum(double* out, const double* a, std::size_t rows, std::size_t cols) {
  std::memset(out, 0, cols * sizeof(double));
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a + i * cols;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
      vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vld1q_f64(row + j)));
    }
    for (; j < cols; ++j) out[j] += row[j];
  }
}

void v_addcol(double* dst, const double* a, const double* v,
              std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const float64x2_t vi = vdupq_n_f64(v[i]);
    const double* arow = a + i * cols;
    double* drow = dst + i * cols;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) vst1q_f64(drow + j, vaddq_f64(vld1q_f64(arow + j), vi));
    for (; j < cols; ++j) drow[j] = arow[j] + v[i];
  }
}

void v_adam(double* p, double* m, double* v, const double* g,
            double lr, double beta1, double beta2, double eps,
            double bc1, double bc2, std::size_t n) {
  const float64x2_t vb1 = vdupq_n_f64(beta1);
  const float64x2_t vb2 = vdupq_n_f64(beta2);
  const float64x2_t vc1 = vdupq_n_f64(1.0 - beta1);
  const float64x2_t vc2 = vdupq_n_f64(1.0 - beta2);
  const float64x2_t vbc1 = vdupq_n_f64(bc1);
  const float64x2_t vbc2 = vdupq_n_f64(bc2);
  const float64x2_t vlr = vdupq_n_f64(lr);
  const float64x2_t veps = vdupq_n_f64(eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gi = vld1q_f64(g + i);
    float64x2_t mi = vld1q_f64(m + i);
    float64x2_t vi = vld1q_f64(v + i);
    mi = vaddq_f64(vmulq_f64(vb1, mi), vmulq_f64(vc1, gi));
    vi = vaddq_f64(vmulq_f64(vb2, vi), vmulq_f64(vc2, vmulq_f64(gi, gi)));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t mhat = vmulq_f64(mi, vbc1);
    const float64x2_t vhat = vmulq_f64(vi, vbc2);
    const float64x2_t denom = vaddq_f64(vsqrtq_f64(vhat), veps);
    const float64x2_t step = vdivq_f64(vmulq_f64(vlr, mhat), denom);
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    const double mhat = m[i] * bc1;
    const double vhat = v[i] * bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

constexpr KernelTable kNeonTable = {
    "neon",   v_add,    v_sub,  v_mul,    v_div,  v_sqrt,
    v_scale,  v_offset, v_axpy, v_mul_acc,
    v_matmul, v_matmul_acc, v_colsum, v_addcol, v_adam,
};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace sdmvae::kernels

#else  // !__aarch64__

namespace sdmvae::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace sdmvae::kernels

#endif
