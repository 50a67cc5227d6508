#include <algorithm>

#include "cfqp/kernels.hpp"

namespace cfqp::kernels::detail {
namespace {

template <typename T>
void gemv(const T* a, std::size_t rows, std::size_t cols, const T* x, T* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = a + r * cols;
    T acc{0};
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void gemm(const T* a, std::size_t rows, std::size_t cols, const T* x, std::size_t width, T* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* yr = y + r * width;
    std::fill(yr, yr + width, T{0});
    for (std::size_t c = 0; c < cols; ++c) {
      const T w = a[r * cols + c];
      const T* xc = x + c * width;
      for (std::size_t b = 0; b < width; ++b) yr[b] += w * xc[b];
    }
  }
}

template <typename T>
void relu_axpy(std::size_t n, T sign, T weight, const T* acc, T* out) {
  const T ws = weight * sign;
  for (std::size_t i = 0; i < n; ++i) {
    const T s = sign * acc[i];
    out[i] += ws * (s > T{0} ? s : T{0});
  }
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  T acc{0};
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace

template <std::floating_point T>
const KernelTable<T>& scalar_table() noexcept {
  static const KernelTable<T> t{Isa::scalar, &gemv<T>, &gemm<T>, &axpy<T>, &relu_axpy<T>, &dot<T>};
  return t;
}

template const KernelTable<float>& scalar_table<float>() noexcept;
template const KernelTable<double>& scalar_table<double>() noexcept;

}  // namespace cfqp::kernels::detail
