#pragma once
// Run statistics: the magnetisation statistic, effective sample size and
// the per-replicate CSV summary.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lifted/proposals.hpp"
#include "lifted/state.hpp"

namespace lifted {

// sum_i x_i. Does not depend on the direction.
inline double magnetisation(const BinaryState& x) {
  return 2.0 * static_cast<double>(x.n_plus()) - static_cast<double>(x.size());
}

// Number of +1 entries (model size in variable selection).
inline double model_size(const BinaryState& x) { return static_cast<double>(x.n_plus()); }

// Effective sample size of a scalar trace: N / (1 + 2 sum of autocorrelations)
// with Geyer's initial monotone positive sequence truncation. A constant
// trace has ESS = N. The result is capped at 1.25 N (antithetic traces).
// Throws std::invalid_argument for traces shorter than 10.
double ess(std::span<const double> trace);

// Autocovariances gamma_0..gamma_{max_lag} (biased, divided by N).
std::vector<double> autocovariance(std::span<const double> trace, std::size_t max_lag);

struct TraceSummary {
  std::vector<double> trace;       // statistic after each post-burn-in step
  std::uint64_t steps = 0;         // post-burn-in iterations
  std::uint64_t accepted = 0;      // moves to a new state
  std::uint64_t direction_flips = 0;
  EvalCounters counters;           // post-burn-in target work
  double ess = 0.0;
  double seconds = 0.0;
  LiftedState final_state;

  double accept_rate() const { return steps ? static_cast<double>(accepted) / steps : 0.0; }
  double flip_rate() const { return steps ? static_cast<double>(direction_flips) / steps : 0.0; }
  double ess_per_iter() const { return trace.empty() ? 0.0 : ess / static_cast<double>(trace.size()); }
};

struct SummaryRow {
  std::size_t replicate_id = 0;
  std::string sampler;
  std::string proposal;
  std::vector<std::pair<std::string, std::string>> target_params;  // name, value
  double ess = 0.0;
  double ess_per_iter = 0.0;
  double accept_rate = 0.0;
  double flip_rate = 0.0;
  std::uint64_t evals = 0;
  double seconds = 0.0;
};

SummaryRow make_row(std::size_t replicate_id, std::string sampler, std::string proposal,
                    std::vector<std::pair<std::string, std::string>> target_params,
                    const TraceSummary& run);

// Rows are grouped by (sampler, proposal, target params) in order of first
// appearance; each group lists its replicates followed by an "aggregate"
// row of means. The last column, ess_per_iter_se, is the standard error of
// the mean ESS per iteration and is filled on aggregate rows only.
// Throws std::invalid_argument on an empty list or inconsistent parameter names.
std::string summarize(const std::vector<SummaryRow>& rows);
void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

struct GroupStats {
  std::string sampler;
  std::string proposal;
  std::vector<std::pair<std::string, std::string>> target_params;
  std::size_t replicates = 0;
  double mean_ess_per_iter = 0.0;
  double se_ess_per_iter = 0.0;
  double mean_accept_rate = 0.0;
  double mean_flip_rate = 0.0;
};

std::vector<GroupStats> aggregate(const std::vector<SummaryRow>& rows);

}  // namespace lifted
