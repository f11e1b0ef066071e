#include "lifted/simd/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "exp_constants.hpp"

namespace lifted::simd {

namespace {

inline double pow2(std::int64_t e) {
  return std::bit_cast<double>(static_cast<std::uint64_t>(e + 1023) << 52);
}

inline double combine_lanes(const double (&lane)[4]) {
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

double exp_scalar(double x) {
  using namespace detail;
  if (std::isnan(x)) return x;
  if (x > kExpMax) return std::numeric_limits<double>::infinity();
  if (x < kExpMin) return 0.0;
  const double kf = std::nearbyint(x * kLog2e);
  const double r = (x - kf * kLn2Hi) - kf * kLn2Lo;
  double p = kExpPoly[0];
  for (int i = 1; i < 14; ++i) p = p * r + kExpPoly[i];
  const auto k = static_cast<std::int32_t>(kf);
  const std::int32_t e1 = k >> 1;
  const std::int32_t e2 = k - e1;
  return (p * pow2(e1)) * pow2(e2);
}

double barker_weight(double log_ratio) { return 1.0 / (1.0 + exp_scalar(-log_ratio)); }

namespace scalar {
namespace {

void exp_kernel(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = exp_scalar(in[i]);
}

double barker_kernel(std::span<const double> log_ratio, std::span<double> out) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < log_ratio.size(); ++i) {
    out[i] = barker_weight(log_ratio[i]);
    lane[i % 4] += out[i];
  }
  return combine_lanes(lane);
}

double sqrt_kernel(std::span<const double> log_ratio, double shift, std::span<double> out) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < log_ratio.size(); ++i) {
    out[i] = exp_scalar((log_ratio[i] - shift) * 0.5);
    lane[i % 4] += out[i];
  }
  return combine_lanes(lane);
}

double sum_kernel(std::span<const double> values) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < values.size(); ++i) lane[i % 4] += values[i];
  return combine_lanes(lane);
}

void axpy_kernel(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = y[i] + a * x[i];
}

void ising_fields_kernel(std::span<const double> padded, std::size_t eta,
                         std::span<const double> alpha, double lambda,
                         std::span<double> out) {
  const std::size_t stride = eta + 2;
  for (std::size_t r = 0; r < eta; ++r) {
    const double* up = padded.data() + r * stride + 1;
    const double* mid = padded.data() + (r + 1) * stride;
    const double* down = padded.data() + (r + 2) * stride + 1;
    for (std::size_t c = 0; c < eta; ++c) {
      const double s = ((up[c] + down[c]) + mid[c]) + mid[c + 2];
      out[r * eta + c] = alpha[r * eta + c] + lambda * s;
    }
  }
}

void flip_kernel(std::span<const std::int8_t> spins, std::span<const double> fields,
                 std::span<double> out) {
  for (std::size_t i = 0; i < spins.size(); ++i)
    out[i] = (-2.0 * static_cast<double>(spins[i])) * fields[i];
}

}  // namespace

const KernelTable table = {
    Isa::scalar,  exp_kernel,          barker_kernel, sqrt_kernel,
    sum_kernel,   axpy_kernel,         ising_fields_kernel,
    flip_kernel,
};

}  // namespace scalar
}  // namespace lifted::simd
