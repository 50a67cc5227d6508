#pragma once

#include <concepts>
#include <cstddef>
#include <string_view>
#include <vector>

namespace cfqp::kernels {

enum class Isa { scalar, avx2, neon };

[[nodiscard]] std::string_view to_string(Isa isa) noexcept;

/// Inner loops of the network forward pass. All pointers are dense and
/// non-overlapping unless stated.
template <std::floating_point T>
struct KernelTable {
  Isa isa;
  /// y = A x, A row-major rows×cols.
  void (*gemv)(const T* a, std::size_t rows, std::size_t cols, const T* x, T* y);
  /// Y = A X with X cols×width and Y rows×width, both row-major. Column b of
  /// Y depends only on column b of X and is computed the same way at every b.
  void (*gemm)(const T* a, std::size_t rows, std::size_t cols, const T* x, std::size_t width, T* y);
  /// y += alpha x
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
  /// out_k += weight · sign · max(0, sign · acc_k)
  void (*relu_axpy)(std::size_t n, T sign, T weight, const T* acc, T* out);
  T (*dot)(std::size_t n, const T* x, const T* y);
};

/// The table for an ISA; falls back to scalar if the ISA is not compiled in
/// or not supported by the running CPU.
template <std::floating_point T>
[[nodiscard]] const KernelTable<T>& table(Isa isa) noexcept;

/// Best table for this CPU, chosen once. CFQP_KERNELS=scalar|avx2|neon forces a choice.
template <std::floating_point T>
[[nodiscard]] const KernelTable<T>& active() noexcept;

/// ISAs usable on this machine, scalar first.
[[nodiscard]] std::vector<Isa> available();

namespace detail {
template <std::floating_point T>
const KernelTable<T>& scalar_table() noexcept;
template <std::floating_point T>
const KernelTable<T>* avx2_table() noexcept;
template <std::floating_point T>
const KernelTable<T>* neon_table() noexcept;
}  // namespace detail

}  // namespace cfqp::kernels
