// aarch64 variant. Two float64x2 registers stand in for one four-lane group so
// the reduction order matches the scalar reference.
#include <arm_neon.h>

#include <limits>

#include "exp_constants.hpp"
#include "lifted/simd/kernels.hpp"

namespace lifted::simd::neon {
namespace {

inline float64x2_t pow2(int64x2_t e) {
  const int64x2_t biased = vaddq_s64(e, vdupq_n_s64(1023));
  return vreinterpretq_f64_s64(vshlq_n_s64(biased, 52));
}

inline float64x2_t exp2v(float64x2_t x) {
  using namespace detail;
  const float64x2_t kf = vrndnq_f64(vmulq_f64(x, vdupq_n_f64(kLog2e)));
  const float64x2_t r = vsubq_f64(vsubq_f64(x, vmulq_f64(kf, vdupq_n_f64(kLn2Hi))),
                                  vmulq_f64(kf, vdupq_n_f64(kLn2Lo)));
  float64x2_t p = vdupq_n_f64(kExpPoly[0]);
  for (int i = 1; i < 14; ++i) p = vaddq_f64(vmulq_f64(p, r), vdupq_n_f64(kExpPoly[i]));
  const int64x2_t k = vcvtq_s64_f64(kf);
  const int64x2_t e1 = vshrq_n_s64(k, 1);
  const int64x2_t e2 = vsubq_s64(k, e1);
  float64x2_t y = vmulq_f64(vmulq_f64(p, pow2(e1)), pow2(e2));

  const uint64x2_t too_big = vcgtq_f64(x, vdupq_n_f64(kExpMax));
  const uint64x2_t too_small = vcltq_f64(x, vdupq_n_f64(kExpMin));
  const uint64x2_t ordered = vceqq_f64(x, x);
  y = vbslq_f64(too_big, vdupq_n_f64(std::numeric_limits<double>::infinity()), y);
  y = vbslq_f64(too_small, vdupq_n_f64(0.0), y);
  y = vbslq_f64(ordered, y, x);
  return y;
}

inline double finish(float64x2_t lo, float64x2_t hi, std::size_t start,
                     std::span<const double> values) {
  double lane[4] = {vgetq_lane_f64(lo, 0), vgetq_lane_f64(lo, 1), vgetq_lane_f64(hi, 0),
                    vgetq_lane_f64(hi, 1)};
  for (std::size_t i = start; i < values.size(); ++i) lane[i % 4] += values[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void exp_kernel(std::span<const double> in, std::span<double> out) {
  std::size_t i = 0;
  for (; i + 2 <= in.size(); i += 2) vst1q_f64(out.data() + i, exp2v(vld1q_f64(in.data() + i)));
  for (; i < in.size(); ++i) out[i] = exp_scalar(in[i]);
}

double barker_kernel(std::span<const double> log_ratio, std::span<double> out) {
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= log_ratio.size(); i += 4) {
    const float64x2_t w0 =
        vdivq_f64(one, vaddq_f64(one, exp2v(vnegq_f64(vld1q_f64(log_ratio.data() + i)))));
    const float64x2_t w1 =
        vdivq_f64(one, vaddq_f64(one, exp2v(vnegq_f64(vld1q_f64(log_ratio.data() + i + 2)))));
    vst1q_f64(out.data() + i, w0);
    vst1q_f64(out.data() + i + 2, w1);
    lo = vaddq_f64(lo, w0);
    hi = vaddq_f64(hi, w1);
  }
  const std::size_t tail = i;
  for (; i < log_ratio.size(); ++i) out[i] = barker_weight(log_ratio[i]);
  return finish(lo, hi, tail, out.first(log_ratio.size()));
}

double sqrt_kernel(std::span<const double> log_ratio, double shift, std::span<double> out) {
  const float64x2_t half = vdupq_n_f64(0.5);
  const float64x2_t s = vdupq_n_f64(shift);
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= log_ratio.size(); i += 4) {
    const float64x2_t w0 =
        exp2v(vmulq_f64(vsubq_f64(vld1q_f64(log_ratio.data() + i), s), half));
    const float64x2_t w1 =
        exp2v(vmulq_f64(vsubq_f64(vld1q_f64(log_ratio.data() + i + 2), s), half));
    vst1q_f64(out.data() + i, w0);
    vst1q_f64(out.data() + i + 2, w1);
    lo = vaddq_f64(lo, w0);
    hi = vaddq_f64(hi, w1);
  }
  const std::size_t tail = i;
  for (; i < log_ratio.size(); ++i) out[i] = exp_scalar((log_ratio[i] - shift) * 0.5);
  return finish(lo, hi, tail, out.first(log_ratio.size()));
}

double sum_kernel(std::span<const double> values) {
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= values.size(); i += 4) {
    lo = vaddq_f64(lo, vld1q_f64(values.data() + i));
    hi = vaddq_f64(hi, vld1q_f64(values.data() + i + 2));
  }
  return finish(lo, hi, i, values);
}

void axpy_kernel(double a, std::span<const double> x, std::span<double> y) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= x.size(); i += 2)
    vst1q_f64(y.data() + i,
              vaddq_f64(vld1q_f64(y.data() + i), vmulq_f64(av, vld1q_f64(x.data() + i))));
  for (; i < x.size(); ++i) y[i] = y[i] + a * x[i];
}

void ising_fields_kernel(std::span<const double> padded, std::size_t eta,
                         std::span<const double> alpha, double lambda,
                         std::span<double> out) {
  const std::size_t stride = eta + 2;
  const float64x2_t lam = vdupq_n_f64(lambda);
  for (std::size_t r = 0; r < eta; ++r) {
    const double* up = padded.data() + r * stride + 1;
    const double* mid = padded.data() + (r + 1) * stride;
    const double* down = padded.data() + (r + 2) * stride + 1;
    const double* a = alpha.data() + r * eta;
    double* o = out.data() + r * eta;
    std::size_t c = 0;
    for (; c + 2 <= eta; c += 2) {
      float64x2_t s = vaddq_f64(vld1q_f64(up + c), vld1q_f64(down + c));
      s = vaddq_f64(s, vld1q_f64(mid + c));
      s = vaddq_f64(s, vld1q_f64(mid + c + 2));
      vst1q_f64(o + c, vaddq_f64(vld1q_f64(a + c), vmulq_f64(lam, s)));
    }
    for (; c < eta; ++c) {
      const double s = ((up[c] + down[c]) + mid[c]) + mid[c + 2];
      o[c] = a[c] + lambda * s;
    }
  }
}

void flip_kernel(std::span<const std::int8_t> spins, std::span<const double> fields,
                 std::span<double> out) {
  const float64x2_t m2 = vdupq_n_f64(-2.0);
  std::size_t i = 0;
  for (; i + 2 <= spins.size(); i += 2) {
    const float64x2_t s = {static_cast<double>(spins[i]), static_cast<double>(spins[i + 1])};
    vst1q_f64(out.data() + i, vmulq_f64(vmulq_f64(m2, s), vld1q_f64(fields.data() + i)));
  }
  for (; i < spins.size(); ++i) out[i] = (-2.0 * static_cast<double>(spins[i])) * fields[i];
}

}  // namespace

const KernelTable table = {
    Isa::neon,   exp_kernel,          barker_kernel, sqrt_kernel,
    sum_kernel,  axpy_kernel,         ising_fields_kernel,
    flip_kernel,
};

}  // namespace lifted::simd::neon
