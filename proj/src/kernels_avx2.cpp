#include "sdmvae/kernels.hpp"

// AVX2 variants (4 doubles per lane-group). Each kernel mirrors the scalar
// reference exactly: same per-element expressions, same accumulation order
// per output element, scalar tail for the remainder. No FMA anywhere --
// the scalar side has none either (-ffp-contract=off).

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace sdmvae::kernels {
namespace {

void v_add(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void v_sub(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void v_mul(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void v_div(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_div_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] / b[i];
}

void v_sqrt(double* dst, const double* a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_sqrt_pd(_mm256_loadu_pd(a + i)));
  }
  for (; i < n; ++i) dst[i] = std::sqrt(a[i]);
}

void v_scale(double* dst, const double* a, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  }
  for (; i < n; ++i) dst[i] = a[i] * s;
}

void v_offset(double* dst, const double* a, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), vs));
  }
  for (; i < n; ++i) dst[i] = a[i] + s;
}

void v_axpy(double* dst, double s, const double* a, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(vs, _mm256_loadu_pd(a + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] += s * a[i];
}

void v_mul_acc(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] += a[i] * b[i];
}

// i-k-j order, vectorized across output columns j. Each c[i][j] sees the
// same ascending-k additions as the scalar reference.
void v_matmul_acc(double* c, const double* a, const double* b,
                  std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    double* crow = c + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      const __m256d va = _mm256_set1_pd(aik);
      const double* brow = b + k * r;
      std::size_t j = 0;
      for (; j + 4 <= r; j += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
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
    for (; j + 4 <= cols; j += 4) {
      _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(row + j)));
    }
    for (; j < cols; ++j) out[j] += row[j];
  }
}

void v_addcol(double* dst, const double* a, const double* v,
              std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const __m256d vi = _mm256_set1_pd(v[i]);
    const double* arow = a + i * cols;
    double* drow = dst + i * cols;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      _mm256_storeu_pd(drow + j, _mm256_add_pd(_mm256_loadu_pd(arow + j), vi));
    }
    for (; j < cols; ++j) drow[j] = arow[j] + v[i];
  }
}

void v_adam(double* p, double* m, double* v, const double* g,
            double lr, double beta1, double beta2, double eps,
            double bc1, double bc2, std::size_t n) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vc1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vc2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_loadu_pd(m + i);
    __m256d vi = _mm256_loadu_pd(v + i);
    mi = _mm256_add_pd(_mm256_mul_pd(vb1, mi), _mm256_mul_pd(vc1, gi));
    vi = _mm256_add_pd(_mm256_mul_pd(vb2, vi), _mm256_mul_pd(vc2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_mul_pd(mi, vbc1);
    const __m256d vhat = _mm256_mul_pd(vi, vbc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    const double mhat = m[i] * bc1;
    const double vhat = v[i] * bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

constexpr KernelTable kAvx2Table = {
    "avx2",   v_add,    v_sub,  v_mul,    v_div,  v_sqrt,
    v_scale,  v_offset, v_axpy, v_mul_acc,
    v_matmul, v_matmul_acc, v_colsum, v_addcol, v_adam,
};

}  // namespace

const KernelTable* avx2_table() {
  return __builtin_cpu_supports("avx2") ? &kAvx2Table : nullptr;
}

}  // namespace sdmvae::kernels

#else  // !__AVX2__

namespace sdmvae::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace sdmvae::kernels

#endif
