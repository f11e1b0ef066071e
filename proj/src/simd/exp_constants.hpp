#pragma once
// Constants for the shared exp routine: x = k ln2 + r with |r| <= ln2 / 2,
// exp(r) by a degree-13 Taylor polynomial in Horner form, 2^k applied as two
// exponent-field scalings so k = 1024 stays representable.

namespace lifted::simd::detail {

inline constexpr double kLog2e = 1.4426950408889634074;
// ln2 split so that k * kLn2Hi is exact for |k| <= 2048.
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

inline constexpr double kExpMax = 709.782712893384;
inline constexpr double kExpMin = -708.3964185322641;

// 1/k! for k = 13 down to 0.
inline constexpr double kExpPoly[14] = {
    1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
    1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,      1.0 / 720.0,
    1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,         1.0 / 2.0,
    1.0,                1.0,
};

}  // namespace lifted::simd::detail
