#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cfqp/kernels.hpp"

using namespace cfqp::kernels;

namespace {

template <typename T>
std::vector<T> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(u(rng));
  return v;
}

template <typename T>
double close(const std::vector<T>& a, const std::vector<T>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])) /
                                std::max(1.0, std::abs(static_cast<double>(b[i]))));
  return worst;
}

template <typename T>
void compare_with_scalar(Isa isa, double tol) {
  const auto& ref = table<T>(Isa::scalar);
  const auto& k = table<T>(isa);
  REQUIRE(k.isa == isa);
  std::mt19937_64 rng(42);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 33u, 67u}) {
    CAPTURE(n);
    const auto x = random_vec<T>(rng, n), y0 = random_vec<T>(rng, n);
    auto y1 = y0, y2 = y0;
    ref.axpy(n, T(0.75), x.data(), y1.data());
    k.axpy(n, T(0.75), x.data(), y2.data());
    CHECK(close(y2, y1) <= tol);

    for (T s : {T(1), T(-1)}) {
      auto o1 = y0, o2 = y0;
      ref.relu_axpy(n, s, T(-1), x.data(), o1.data());
      k.relu_axpy(n, s, T(-1), x.data(), o2.data());
      CHECK(close(o2, o1) <= tol);
    }
    CHECK(std::abs(static_cast<double>(k.dot(n, x.data(), y0.data()) - ref.dot(n, x.data(), y0.data()))) <=
          tol * (1.0 + n));

    const std::size_t rows = n % 9 + 1, cols = n;
    const auto a = random_vec<T>(rng, rows * cols);
    std::vector<T> g1(rows), g2(rows);
    ref.gemv(a.data(), rows, cols, x.data(), g1.data());
    k.gemv(a.data(), rows, cols, x.data(), g2.data());
    CHECK(close(g2, g1) <= tol * (1.0 + n));

    for (std::size_t width : {1u, 5u, 16u, 37u, 64u}) {
      const auto xm = random_vec<T>(rng, cols * width);
      std::vector<T> m1(rows * width), m2(rows * width);
      ref.gemm(a.data(), rows, cols, xm.data(), width, m1.data());
      k.gemm(a.data(), rows, cols, xm.data(), width, m2.data());
      CHECK(close(m2, m1) <= tol * (1.0 + n));
    }
  }
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar table is always present") {
  const auto isas = available();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == Isa::scalar);
  CHECK(to_string(Isa::avx2) == "avx2");
  CHECK(table<double>(Isa::scalar).isa == Isa::scalar);
}

TEST_CASE("every available ISA agrees with the scalar reference") {
  for (Isa isa : available()) {
    CAPTURE(to_string(isa));
    compare_with_scalar<double>(isa, 1e-13);
    compare_with_scalar<float>(isa, 2e-5);
  }
}

TEST_CASE("gemm columns do not depend on their position in the block") {
  for (Isa isa : available()) {
    const auto& k = table<double>(isa);
    std::mt19937_64 rng(7);
    const std::size_t rows = 11, cols = 13, width = 45;
    const auto a = random_vec<double>(rng, rows * cols);
    const auto x = random_vec<double>(rng, cols * width);
    std::vector<double> y(rows * width);
    k.gemm(a.data(), rows, cols, x.data(), width, y.data());
    for (std::size_t b = 0; b < width; ++b) {
      std::vector<double> col(cols), one(rows);
      for (std::size_t c = 0; c < cols; ++c) col[c] = x[c * width + b];
      k.gemm(a.data(), rows, cols, col.data(), 1, one.data());
      for (std::size_t r = 0; r < rows; ++r) CHECK(one[r] == y[r * width + b]);
    }
  }
}

TEST_CASE("relu_axpy keeps only the agreeing part") {
  const auto& k = active<double>();
  const std::vector<double> acc{-2.0, 0.0, 3.0};
  std::vector<double> out{1.0, 1.0, 1.0};
  k.relu_axpy(3, 1.0, 2.0, acc.data(), out.data());
  CHECK(out == std::vector<double>{1.0, 1.0, 7.0});
  k.relu_axpy(3, -1.0, 1.0, acc.data(), out.data());
  CHECK(out == std::vector<double>{-1.0, 1.0, 7.0});
}

}
