#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cfqp {

template <std::floating_point T>
using VectorT = std::vector<T>;
using Vector = VectorT<double>;

/// Dense row-major matrix. Small problems only; no expression templates.
template <std::floating_point T>
class MatrixT {
 public:
  MatrixT() = default;
  MatrixT(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  MatrixT(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ == 0 ? 0 : init.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      assert(row.size() == cols_);
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static MatrixT identity(std::size_t n) {
    MatrixT m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  [[nodiscard]] std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  [[nodiscard]] T* data() noexcept { return data_.data(); }
  [[nodiscard]] const T* data() const noexcept { return data_.data(); }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

  [[nodiscard]] MatrixT transpose() const {
    MatrixT t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  template <std::floating_point U>
  [[nodiscard]] MatrixT<U> cast() const {
    MatrixT<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  [[nodiscard]] T max_abs() const {
    T m{0};
    for (T v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool operator==(const MatrixT&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = MatrixT<double>;

template <std::floating_point U, std::floating_point T>
[[nodiscard]] std::vector<U> cast_vector(std::span<const T> v) {
  return std::vector<U>(v.begin(), v.end());
}

template <std::floating_point T>
[[nodiscard]] std::vector<T> matvec(const MatrixT<T>& a, std::span<const T> x) {
  assert(a.cols() == x.size());
  std::vector<T> y(a.rows(), T{0});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    T acc{0};
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

/// y = Aᵀ x
template <std::floating_point T>
[[nodiscard]] std::vector<T> matvec_transposed(const MatrixT<T>& a, std::span<const T> x) {
  assert(a.rows() == x.size());
  std::vector<T> y(a.cols(), T{0});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * x[r];
  }
  return y;
}

template <std::floating_point T>
[[nodiscard]] MatrixT<T> matmul(const MatrixT<T>& a, const MatrixT<T>& b) {
  assert(a.cols() == b.rows());
  MatrixT<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{0}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

template <std::floating_point T>
[[nodiscard]] T norm_inf(std::span<const T> v) {
  T m{0};
  for (T x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Partial-pivoted LU of a square matrix, PA = LU.
///
/// A pivot is declared zero when its magnitude falls below
/// `kSingularPivotRatio * max|A_ij|`; `singular()` then reports rank
/// deficiency and solving is refused.
template <std::floating_point T>
class LuFactorization {
 public:
  static constexpr double kSingularPivotRatio = 1e-12;

  explicit LuFactorization(MatrixT<T> a) : lu_(std::move(a)), perm_(lu_.rows()) {
    assert(lu_.rows() == lu_.cols());
    const std::size_t n = lu_.rows();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    const T threshold = static_cast<T>(kSingularPivotRatio) * lu_.max_abs();
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      T best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        const T v = std::abs(lu_(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best <= threshold || best == T{0}) {
        singular_ = true;
        return;
      }
      if (p != k) {
        for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(p, c));
        std::swap(perm_[k], perm_[p]);
      }
      const T pivot = lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const T f = lu_(i, k) / pivot;
        lu_(i, k) = f;
        if (f == T{0}) continue;
        for (std::size_t c = k + 1; c < n; ++c) lu_(i, c) -= f * lu_(k, c);
      }
    }
  }

  [[nodiscard]] bool singular() const noexcept { return singular_; }
  [[nodiscard]] std::size_t size() const noexcept { return lu_.rows(); }

  /// Solves A x = b. Precondition: !singular().
  [[nodiscard]] std::vector<T> solve(std::span<const T> b) const {
    assert(!singular_ && b.size() == size());
    const std::size_t n = size();
    std::vector<T> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu_(ii, j) * x[j];
      x[ii] /= lu_(ii, ii);
    }
    return x;
  }

  [[nodiscard]] MatrixT<T> inverse() const {
    const std::size_t n = size();
    MatrixT<T> inv(n, n);
    std::vector<T> e(n, T{0});
    for (std::size_t c = 0; c < n; ++c) {
      std::fill(e.begin(), e.end(), T{0});
      e[c] = T{1};
      const auto col = solve(e);
      for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
    }
    return inv;
  }

 private:
  MatrixT<T> lu_;
  std::vector<std::size_t> perm_;
  bool singular_ = false;
};

}  // namespace cfqp
