#pragma once
// Incremental single-flip engine for the Ising model. A flip changes the
// log-ratios of the flipped site and its (at most four) neighbours only, so
// proposal weights live in a segment tree and both sampling and the
// normalizing constants cost O(log n) per step instead of O(n).
//
// Covers mh, lifted1 and revmix with uniform or Barker proposals. It draws
// random numbers exactly like the generic samplers and reports the same
// (logical) evaluation counts, so given a seed it follows the generic
// trajectory; only the order of floating-point additions in the
// normalizing constants differs.

#include <cstdint>
#include <vector>

#include "lifted/diagnostics.hpp"
#include "lifted/samplers.hpp"
#include "lifted/targets.hpp"

namespace lifted {

class IsingChain {
 public:
  static bool supports(const SamplerSpec& spec);

  // Throws std::invalid_argument for unsupported specs or a mismatched state.
  IsingChain(const IsingModel& model, const SamplerSpec& spec, LiftedState initial);

  struct Step {
    bool accepted = false;
    bool direction_flipped = false;
  };
  Step step(Rng& rng);

  const LiftedState& state() const { return s_; }
  double magnetisation() const { return lifted::magnetisation(s_.state); }
  EvalCounters& counters() { return counters_; }

 private:
  std::size_t channel_of(std::size_t site) const { return s_.state[site] == 1 ? 1 : 0; }
  static std::size_t channel_for(Direction dir) { return dir == Direction::up ? 0 : 1; }

  double log_ratio(std::size_t site) const;
  void refresh_leaf(std::size_t site);
  void apply_flip(std::size_t site);
  double channel_sum(std::size_t c) const { return weight_[c][1]; }
  std::size_t channel_count(std::size_t c) const { return count_[c][1]; }
  std::size_t sample_weighted(double u, bool both, std::size_t c) const;
  std::size_t select_kth(std::size_t k, std::size_t c) const;

  Step attempt_directed(Direction dir, Rng& rng);
  Step step_mh(Rng& rng);

  const IsingModel& model_;
  SamplerSpec spec_;
  bool informed_;
  LiftedState s_;
  std::vector<int> sums_;
  std::size_t leaves_ = 1;
  std::vector<double> weight_[2];
  std::vector<std::uint32_t> count_[2];
  EvalCounters counters_;
};

// run_chain with the magnetisation statistic, on the incremental engine.
TraceSummary run_ising_chain(const IsingModel& model, const SamplerSpec& spec,
                             const RunOptions& options);

}  // namespace lifted
