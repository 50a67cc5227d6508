#include <cstdlib>
#include <string_view>

#include "cfqp/kernels.hpp"

namespace cfqp::kernels {

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "scalar";
}

namespace {

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(CFQP_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(CFQP_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa preferred() noexcept {
  if (const char* env = std::getenv("CFQP_KERNELS")) {
    const std::string_view want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
      if (want == to_string(isa) && supported(isa)) return isa;
  }
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

}  // namespace

template <std::floating_point T>
const KernelTable<T>& table(Isa isa) noexcept {
  if (!supported(isa)) return detail::scalar_table<T>();
  switch (isa) {
#if defined(CFQP_HAVE_AVX2)
    case Isa::avx2: return *detail::avx2_table<T>();
#endif
#if defined(CFQP_HAVE_NEON)
    case Isa::neon: return *detail::neon_table<T>();
#endif
    default: return detail::scalar_table<T>();
  }
}

template <std::floating_point T>
const KernelTable<T>& active() noexcept {
  static const KernelTable<T>& t = table<T>(preferred());
  return t;
}

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
    if (supported(isa)) out.push_back(isa);
  return out;
}

template const KernelTable<float>& table<float>(Isa) noexcept;
template const KernelTable<double>& table<double>(Isa) noexcept;
template const KernelTable<float>& active<float>() noexcept;
template const KernelTable<double>& active<double>() noexcept;

}  // namespace cfqp::kernels
