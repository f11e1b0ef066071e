// Compiled with -mavx2 only; selected at runtime when the CPU reports AVX2.
#include <immintrin.h>

#include <cstring>
#include <limits>

#include "exp_constants.hpp"
#include "lifted/simd/kernels.hpp"

namespace lifted::simd::avx2 {
namespace {

inline __m256d pow2(__m128i e) {
  const __m256i wide = _mm256_cvtepi32_epi64(e);
  const __m256i biased = _mm256_add_epi64(wide, _mm256_set1_epi64x(1023));
  return _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
}

inline __m256d exp4(__m256d x) {
  using namespace detail;
  const __m256d kf = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d r = _mm256_sub_pd(_mm256_sub_pd(x, _mm256_mul_pd(kf, _mm256_set1_pd(kLn2Hi))),
                                  _mm256_mul_pd(kf, _mm256_set1_pd(kLn2Lo)));
  __m256d p = _mm256_set1_pd(kExpPoly[0]);
  for (int i = 1; i < 14; ++i)
    p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpPoly[i]));
  // Out-of-range lanes produce garbage exponents here; they are blended away below.
  const __m128i k = _mm256_cvtpd_epi32(kf);
  const __m128i e1 = _mm_srai_epi32(k, 1);
  const __m128i e2 = _mm_sub_epi32(k, e1);
  __m256d y = _mm256_mul_pd(_mm256_mul_pd(p, pow2(e1)), pow2(e2));

  const __m256d too_big = _mm256_cmp_pd(x, _mm256_set1_pd(kExpMax), _CMP_GT_OQ);
  const __m256d too_small = _mm256_cmp_pd(x, _mm256_set1_pd(kExpMin), _CMP_LT_OQ);
  const __m256d is_nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  y = _mm256_blendv_pd(y, _mm256_set1_pd(std::numeric_limits<double>::infinity()), too_big);
  y = _mm256_blendv_pd(y, _mm256_setzero_pd(), too_small);
  y = _mm256_blendv_pd(y, x, is_nan);
  return y;
}

inline double combine(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline double finish(__m256d acc, std::size_t start, std::span<const double> out) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (std::size_t i = start; i < out.size(); ++i) lane[i % 4] += out[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void exp_kernel(std::span<const double> in, std::span<double> out) {
  std::size_t i = 0;
  for (; i + 4 <= in.size(); i += 4)
    _mm256_storeu_pd(out.data() + i, exp4(_mm256_loadu_pd(in.data() + i)));
  for (; i < in.size(); ++i) out[i] = exp_scalar(in[i]);
}

double barker_kernel(std::span<const double> log_ratio, std::span<double> out) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= log_ratio.size(); i += 4) {
    const __m256d neg = _mm256_xor_pd(_mm256_loadu_pd(log_ratio.data() + i), sign);
    const __m256d w = _mm256_div_pd(one, _mm256_add_pd(one, exp4(neg)));
    _mm256_storeu_pd(out.data() + i, w);
    acc = _mm256_add_pd(acc, w);
  }
  const std::size_t tail = i;
  for (; i < log_ratio.size(); ++i) out[i] = barker_weight(log_ratio[i]);
  return finish(acc, tail, out.first(log_ratio.size()));
}

double sqrt_kernel(std::span<const double> log_ratio, double shift, std::span<double> out) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d s = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= log_ratio.size(); i += 4) {
    const __m256d arg = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(log_ratio.data() + i), s), half);
    const __m256d w = exp4(arg);
    _mm256_storeu_pd(out.data() + i, w);
    acc = _mm256_add_pd(acc, w);
  }
  const std::size_t tail = i;
  for (; i < log_ratio.size(); ++i) out[i] = exp_scalar((log_ratio[i] - shift) * 0.5);
  return finish(acc, tail, out.first(log_ratio.size()));
}

double sum_kernel(std::span<const double> values) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= values.size(); i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(values.data() + i));
  if (i == values.size()) return combine(acc);
  return finish(acc, i, values);
}

void axpy_kernel(double a, std::span<const double> x, std::span<double> y) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y.data() + i),
                                    _mm256_mul_pd(av, _mm256_loadu_pd(x.data() + i)));
    _mm256_storeu_pd(y.data() + i, r);
  }
  for (; i < x.size(); ++i) y[i] = y[i] + a * x[i];
}

void ising_fields_kernel(std::span<const double> padded, std::size_t eta,
                         std::span<const double> alpha, double lambda,
                         std::span<double> out) {
  const std::size_t stride = eta + 2;
  const __m256d lam = _mm256_set1_pd(lambda);
  for (std::size_t r = 0; r < eta; ++r) {
    const double* up = padded.data() + r * stride + 1;
    const double* mid = padded.data() + (r + 1) * stride;
    const double* down = padded.data() + (r + 2) * stride + 1;
    const double* a = alpha.data() + r * eta;
    double* o = out.data() + r * eta;
    std::size_t c = 0;
    for (; c + 4 <= eta; c += 4) {
      __m256d s = _mm256_add_pd(_mm256_loadu_pd(up + c), _mm256_loadu_pd(down + c));
      s = _mm256_add_pd(s, _mm256_loadu_pd(mid + c));
      s = _mm256_add_pd(s, _mm256_loadu_pd(mid + c + 2));
      _mm256_storeu_pd(o + c, _mm256_add_pd(_mm256_loadu_pd(a + c), _mm256_mul_pd(lam, s)));
    }
    for (; c < eta; ++c) {
      const double s = ((up[c] + down[c]) + mid[c]) + mid[c + 2];
      o[c] = a[c] + lambda * s;
    }
  }
}

void flip_kernel(std::span<const std::int8_t> spins, std::span<const double> fields,
                 std::span<double> out) {
  const __m256d m2 = _mm256_set1_pd(-2.0);
  std::size_t i = 0;
  for (; i + 4 <= spins.size(); i += 4) {
    std::int32_t packed;
    std::memcpy(&packed, spins.data() + i, 4);
    const __m256d s = _mm256_cvtepi32_pd(_mm_cvtepi8_epi32(_mm_cvtsi32_si128(packed)));
    _mm256_storeu_pd(out.data() + i,
                     _mm256_mul_pd(_mm256_mul_pd(m2, s), _mm256_loadu_pd(fields.data() + i)));
  }
  for (; i < spins.size(); ++i) out[i] = (-2.0 * static_cast<double>(spins[i])) * fields[i];
}

}  // namespace

const KernelTable table = {
    Isa::avx2,   exp_kernel,          barker_kernel, sqrt_kernel,
    sum_kernel,  axpy_kernel,         ising_fields_kernel,
    flip_kernel,
};

}  // namespace lifted::simd::avx2
