#pragma once
// Exact-kernel checks on a battery of random tabular targets. Shared by the
// `validate` command and the test suite.

#include <cstdint>
#include <string>
#include <vector>

#include "lifted/samplers.hpp"

namespace lifted {

struct ValidationOptions {
  std::uint64_t seed = 1;
  std::size_t targets = 20;  // target t has n = 3 + t % 6 and seed + t
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::size_t checks = 0;
  double worst = 0.0;            // largest error / violation seen
  std::vector<std::string> failures;
};

// Lifted2 with a random valid rho: the optimal policy plus a state-dependent
// fraction s(x) in [0, 1] of the remaining slack.
RhoPolicy random_rho(std::uint64_t seed);

// mh, lifted1, lifted2 (optimal, worst, random custom), revmix.
std::vector<SamplerSpec> battery(const ProposalSpec& proposal, std::uint64_t seed);

// Invariance of pi (or pi ⊗ U{-1,+1}), rows summing to one, non-negative
// entries, and skew detailed balance (lifted) or detailed balance (others),
// all to 1e-12.
SuiteResult stationarity_suite(const ValidationOptions& opts);

// Asymptotic variances of f = sum_i x_i:
//   var(lifted2 opt) <= var(lifted2 custom) <= var(lifted2 worst)
// and lifted2 (any of the three) <= revmix, with slack 1e-9.
SuiteResult ordering_suite(const ValidationOptions& opts);

// lifted2 worst equals lifted1 elementwise (1e-12); revmix equals the
// half-half mixture of the directed components; on a cycle with ideal
// directed neighbourhoods the MH kernel is that mixture and the lifted chain
// has no larger asymptotic variance.
SuiteResult mixture_suite(const ValidationOptions& opts);

std::vector<SuiteResult> run_validation(const ValidationOptions& opts);

}  // namespace lifted
