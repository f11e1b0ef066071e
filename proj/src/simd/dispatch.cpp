#include <cstdlib>
#include <stdexcept>
#include <string>

#include "lifted/simd/kernels.hpp"

namespace lifted::simd {

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(LIFTED_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(LIFTED_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) {
  switch (isa) {
#if defined(LIFTED_HAVE_AVX2)
    case Isa::avx2:
      return avx2::table;
#endif
#if defined(LIFTED_HAVE_NEON)
    case Isa::neon:
      return neon::table;
#endif
    default:
      return scalar::table;
  }
}

const KernelTable& select_default() {
  if (const char* forced = std::getenv("LIFTED_SIMD")) {
    const std::string name(forced);
    for (Isa isa : available_isas())
      if (isa_name(isa) == name) return table_for(isa);
    return scalar::table;
  }
  const auto isas = available_isas();
  return table_for(isas.back());
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::scalar};
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (cpu_supports(isa)) out.push_back(isa);
  return out;
}

const KernelTable& kernels_for(Isa isa) {
  if (!cpu_supports(isa))
    throw std::runtime_error("SIMD kernels for " + std::string(isa_name(isa)) +
                             " are not available on this machine");
  return table_for(isa);
}

const KernelTable& kernels() {
  static const KernelTable& selected = select_default();
  return selected;
}

}  // namespace lifted::simd
