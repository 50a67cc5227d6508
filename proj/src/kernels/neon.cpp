#include <arm_neon.h>

#include <cmath>

#include "cfqp/kernels.hpp"

namespace cfqp::kernels::detail {
namespace {

double dot_d(std::size_t n, const double* x, const double* y) {
  float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

float dot_f(std::size_t n, const float* x, const float* y) {
  float32x4_t a0 = vdupq_n_f32(0.0f), a1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = vfmaq_f32(a0, vld1q_f32(x + i), vld1q_f32(y + i));
    a1 = vfmaq_f32(a1, vld1q_f32(x + i + 4), vld1q_f32(y + i + 4));
  }
  float acc = vaddvq_f32(vaddq_f32(a0, a1));
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
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void axpy_f(std::size_t n, float alpha, const float* x, float* y) {
  const float32x4_t va = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void gemm_d(const double* a, std::size_t rows, std::size_t cols, const double* x, std::size_t width, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = a + r * cols;
    double* yr = y + r * width;
    std::size_t b = 0;
    for (; b + 8 <= width; b += 8) {
      float64x2_t y0 = vdupq_n_f64(0.0), y1 = y0, y2 = y0, y3 = y0;
      for (std::size_t c = 0; c < cols; ++c) {
        const float64x2_t w = vdupq_n_f64(ar[c]);
        const double* xc = x + c * width + b;
        y0 = vfmaq_f64(y0, w, vld1q_f64(xc));
        y1 = vfmaq_f64(y1, w, vld1q_f64(xc + 2));
        y2 = vfmaq_f64(y2, w, vld1q_f64(xc + 4));
        y3 = vfmaq_f64(y3, w, vld1q_f64(xc + 6));
      }
      vst1q_f64(yr + b, y0);
      vst1q_f64(yr + b + 2, y1);
      vst1q_f64(yr + b + 4, y2);
      vst1q_f64(yr + b + 6, y3);
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
    for (; b + 16 <= width; b += 16) {
      float32x4_t y0 = vdupq_n_f32(0.0f), y1 = y0, y2 = y0, y3 = y0;
      for (std::size_t c = 0; c < cols; ++c) {
        const float32x4_t w = vdupq_n_f32(ar[c]);
        const float* xc = x + c * width + b;
        y0 = vfmaq_f32(y0, w, vld1q_f32(xc));
        y1 = vfmaq_f32(y1, w, vld1q_f32(xc + 4));
        y2 = vfmaq_f32(y2, w, vld1q_f32(xc + 8));
        y3 = vfmaq_f32(y3, w, vld1q_f32(xc + 12));
      }
      vst1q_f32(yr + b, y0);
      vst1q_f32(yr + b + 4, y1);
      vst1q_f32(yr + b + 8, y2);
      vst1q_f32(yr + b + 12, y3);
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
  const float64x2_t vs = vdupq_n_f64(sign), vw = vdupq_n_f64(ws), zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t s = vmaxq_f64(vmulq_f64(vs, vld1q_f64(acc + i)), zero);
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(out + i), vw, s));
  }
  for (; i < n; ++i) {
    const double s = sign * acc[i];
    out[i] = std::fma(ws, s > 0.0 ? s : 0.0, out[i]);
  }
}

void relu_axpy_f(std::size_t n, float sign, float weight, const float* acc, float* out) {
  const float ws = weight * sign;
  const float32x4_t vs = vdupq_n_f32(sign), vw = vdupq_n_f32(ws), zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t s = vmaxq_f32(vmulq_f32(vs, vld1q_f32(acc + i)), zero);
    vst1q_f32(out + i, vfmaq_f32(vld1q_f32(out + i), vw, s));
  }
  for (; i < n; ++i) {
    const float s = sign * acc[i];
    out[i] = std::fma(ws, s > 0.0f ? s : 0.0f, out[i]);
  }
}

}  // namespace

template <>
const KernelTable<double>* neon_table<double>() noexcept {
  static const KernelTable<double> t{Isa::neon, &gemv_d, &gemm_d, &axpy_d, &relu_axpy_d, &dot_d};
  return &t;
}

template <>
const KernelTable<float>* neon_table<float>() noexcept {
  static const KernelTable<float> t{Isa::neon, &gemv_f, &gemm_f, &axpy_f, &relu_axpy_f, &dot_f};
  return &t;
}

}  // namespace cfqp::kernels::detail
