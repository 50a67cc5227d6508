// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "cfqp/kernels.hpp"

namespace cfqp::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline float hsum(__m256 v) {
  __m128 s = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_movehdup_ps(s));
  return _mm_cvtss_f32(s);
}

double dot_d(std::size_t n, const double* x, const double* y) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

float dot_f(std::size_t n, const float* x, const float* y) {
  __m256 a0 = _mm256_setzero_ps(), a1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), a0);
    a1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), a1);
  }
  for (; i + 8 <= n; i += 8) a0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), a0);
  float acc = hsum(_mm256_add_ps(a0, a1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void gemv_d(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_d(cols, a + r * cols, x);
}

void gemv_f(const float* a, std::size_t rows, std::size_t cols, const float* x, float* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_f(cols, a + r * cols, x);
}

void axpy_d(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void axpy_f(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void gemm_d(const double* a, std::size_t rows, std::size_t cols, const double* x, std::size_t width, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = a + r * cols;
    double* yr = y + r * width;
    std::size_t b = 0;
    for (; b + 16 <= width; b += 16) {
      __m256d y0 = _mm256_setzero_pd(), y1 = y0, y2 = y0, y3 = y0;
      for (std::size_t c = 0; c < cols; ++c) {
        const __m256d w = _mm256_set1_pd(ar[c]);
        const double* xc = x + c * width + b;
        y0 = _mm256_fmadd_pd(w, _mm256_loadu_pd(xc), y0);
        y1 = _mm256_fmadd_pd(w, _mm256_loadu_pd(xc + 4), y1);
        y2 = _mm256_fmadd_pd(w, _mm256_loadu_pd(xc + 8), y2);
        y3 = _mm256_fmadd_pd(w, _mm256_loadu_pd(xc + 12), y3);
      }
      _mm256_storeu_pd(yr + b, y0);
      _mm256_storeu_pd(yr + b + 4, y1);
      _mm256_storeu_pd(yr + b + 8, y2);
      _mm256_storeu_pd(yr + b + 12, y3);
    }
    for (; b + 4 <= width; b += 4) {
      __m256d y0 = _mm256_setzero_pd();
      for (std::size_t c = 0; c < cols; ++c)
        y0 = _mm256_fmadd_pd(_mm256_set1_pd(ar[c]), _mm256_loadu_pd(x + c * width + b), y0);
      _mm256_storeu_pd(yr + b, y0);
    }
    for (; b < width; ++b) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc = std::fma(ar[c], x[c * width + b], acc);
      yr[b] = acc;
    }
  }
}

void gemm_f(const float* a, std::size_t rows, std::size_t cols, const float* x, std::size_t width, float* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const float* ar = a + r * cols;
    float* yr = y + r * width;
    std::size_t b = 0;
    for (; b + 32 <= width; b += 32) {
      __m256 y0 = _mm256_setzero_ps(), y1 = y0, y2 = y0, y3 = y0;
      for (std::size_t c = 0; c < cols; ++c) {
        const __m256 w = _mm256_set1_ps(ar[c]);
        const float* xc = x + c * width + b;
        y0 = _mm256_fmadd_ps(w, _mm256_loadu_ps(xc), y0);
        y1 = _mm256_fmadd_ps(w, _mm256_loadu_ps(xc + 8), y1);
        y2 = _mm256_fmadd_ps(w, _mm256_loadu_ps(xc + 16), y2);
        y3 = _mm256_fmadd_ps(w, _mm256_loadu_ps(xc + 24), y3);
      }
      _mm256_storeu_ps(yr + b, y0);
      _mm256_storeu_ps(yr + b + 8, y1);
      _mm256_storeu_ps(yr + b + 16, y2);
      _mm256_storeu_ps(yr + b + 24, y3);
    }
    for (; b + 8 <= width; b += 8) {
      __m256 y0 = _mm256_setzero_ps();
      for (std::size_t c = 0; c < cols; ++c)
        y0 = _mm256_fmadd_ps(_mm256_set1_ps(ar[c]), _mm256_loadu_ps(x + c * width + b), y0);
      _mm256_storeu_ps(yr + b, y0);
    }
    for (; b < width; ++b) {
      float acc = 0.0f;
      for (std::size_t c = 0; c < cols; ++c) acc = std::fma(ar[c], x[c * width + b], acc);
      yr[b] = acc;
    }
  }
}

void relu_axpy_d(std::size_t n, double sign, double weight, const double* acc, double* out) {
  const double ws = weight * sign;
  const __m256d vs = _mm256_set1_pd(sign), vw = _mm256_set1_pd(ws), zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_max_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(acc + i)), zero);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vw, s, _mm256_loadu_pd(out + i)));
  }
  for (; i < n; ++i) {
    const double s = sign * acc[i];
    out[i] = std::fma(ws, s > 0.0 ? s : 0.0, out[i]);
  }
}

void relu_axpy_f(std::size_t n, float sign, float weight, const float* acc, float* out) {
  const float ws = weight * sign;
  const __m256 vs = _mm256_set1_ps(sign), vw = _mm256_set1_ps(ws), zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 s = _mm256_max_ps(_mm256_mul_ps(vs, _mm256_loadu_ps(acc + i)), zero);
    _mm256_storeu_ps(out + i, _mm256_fmadd_ps(vw, s, _mm256_loadu_ps(out + i)));
  }
  for (; i < n; ++i) {
    const float s = sign * acc[i];
    out[i] = std::fma(ws, s > 0.0f ? s : 0.0f, out[i]);
  }
}

}  // namespace

template <>
const KernelTable<double>* avx2_table<double>() noexcept {
  static const KernelTable<double> t{Isa::avx2, &gemv_d, &gemm_d, &axpy_d, &relu_axpy_d, &dot_d};
  return &t;
}

template <>
const KernelTable<float>* avx2_table<float>() noexcept {
  static const KernelTable<float> t{Isa::avx2, &gemv_f, &gemm_f, &axpy_f, &relu_axpy_f, &dot_f};
  return &t;
}

}  // namespace cfqp::kernels::detail
