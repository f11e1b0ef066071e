#pragma once
// Data-parallel inner loops used by the samplers and oracles.
//
// Every kernel has a scalar reference implementation and vector variants
// (AVX2 on x86-64, NEON on aarch64). The variants perform the same IEEE
// operations in the same order as the reference, so results are identical
// bit for bit; the dispatch choice never changes a chain's trajectory.
//
// Reductions use four interleaved accumulators: element i goes to lane
// i % 4 and the lanes are combined as (l0 + l1) + (l2 + l3).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace lifted::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // out[i] = exp(in[i]); inputs below -708.39 flush to 0, above 709.78 give +inf.
  void (*exp)(std::span<const double> in, std::span<double> out);

  // out[i] = 1 / (1 + exp(-log_ratio[i])); returns the lane-ordered sum of out.
  double (*barker_weights)(std::span<const double> log_ratio, std::span<double> out);

  // out[i] = exp((log_ratio[i] - shift) * 0.5); returns the lane-ordered sum of out.
  double (*sqrt_weights)(std::span<const double> log_ratio, double shift,
                         std::span<double> out);

  double (*sum)(std::span<const double> values);

  // y[i] += a * x[i]
  void (*axpy)(double a, std::span<const double> x, std::span<double> y);

  // Local fields of an eta x eta lattice stored with a one-cell border:
  // padded has (eta + 2)^2 entries, row-major. For site (r, c):
  //   out = alpha + lambda * (((up + down) + left) + right)
  void (*ising_local_fields)(std::span<const double> padded, std::size_t eta,
                             std::span<const double> alpha, double lambda,
                             std::span<double> out);

  // out[i] = (-2 * spin[i]) * field[i]
  void (*flip_log_ratios)(std::span<const std::int8_t> spins,
                          std::span<const double> fields, std::span<double> out);
};

// Kernel table for the best ISA supported by the running CPU. Setting the
// environment variable LIFTED_SIMD=scalar|avx2|neon before first use forces
// a particular table (an unsupported request falls back to scalar).
const KernelTable& kernels();

// Throws std::runtime_error if the ISA is not compiled in or not supported.
const KernelTable& kernels_for(Isa isa);

std::vector<Isa> available_isas();

// Scalar element routines shared by the reference kernels and by code that
// updates single sites (the incremental Ising engine).
double exp_scalar(double x);
double barker_weight(double log_ratio);

namespace scalar {
extern const KernelTable table;
}
#if defined(LIFTED_HAVE_AVX2)
namespace avx2 {
extern const KernelTable table;
}
#endif
#if defined(LIFTED_HAVE_NEON)
namespace neon {
extern const KernelTable table;
}
#endif

}  // namespace lifted::simd
