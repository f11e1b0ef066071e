#pragma once
// Single-space samplers on {-1,+1}^n: Metropolis-Hastings, the lifted
// samplers (persistent direction, flipped on rejection) and the reversible
// coin-flip mixture of the two directed kernels.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lifted/diagnostics.hpp"
#include "lifted/proposals.hpp"
#include "lifted/rng.hpp"
#include "lifted/state.hpp"
#include "lifted/targets.hpp"

namespace lifted {

enum class Algorithm { mh, lifted1, lifted2, revmix };

// Direction-flip probability rho_dir(x) used when a lifted2 step does not
// move. Valid choices satisfy 0 <= rho_dir <= 1 - T_dir and
// rho_dir - rho_{-dir} = T_{-dir} - T_dir.
struct RhoPolicy {
  enum class Kind { optimal, worst, custom };
  using Function = std::function<double(const BinaryState& x, Direction dir, double t_forward,
                                        double t_backward)>;

  Kind kind = Kind::optimal;
  Function custom_fn;
  std::string label = "opt";
  // Check the validity conditions at every step (throws std::logic_error).
  bool check = false;

  static RhoPolicy optimal() { return {}; }
  static RhoPolicy worst() { return {Kind::worst, {}, "worst"}; }
  static RhoPolicy custom(Function fn, std::string label = "custom") {
    return {Kind::custom, std::move(fn), std::move(label)};
  }
  // max(0, T_{-dir} - T_dir) + s(x) (1 - max(T_dir, T_{-dir})), s(x) in [0, 1].
  // s = 0 is the optimal policy and s = 1 the worst one.
  static RhoPolicy interpolated(std::function<double(const BinaryState&)> s,
                                std::string label = "custom");

  double evaluate(const BinaryState& x, Direction dir, double t_forward, double t_backward) const;
  bool needs_backward(double t_forward) const;
};

struct SamplerSpec {
  Algorithm algorithm = Algorithm::mh;
  ProposalSpec proposal;
  RhoPolicy rho;  // lifted2 only

  // "mh", "lifted1", "lifted2-<rho label>", "revmix"
  std::string name() const;
};

// Accepts "mh", "lifted1", "lifted2" (optimal), "lifted2-opt", "lifted2-worst", "revmix".
std::optional<SamplerSpec> parse_sampler(const std::string& name, ProposalSpec proposal);

enum class Branch { accept, flip_direction, keep_direction };

struct StepOutcome {
  LiftedState next;
  bool accepted = false;
  std::size_t proposals_evaluated = 0;
  Branch branch = Branch::flip_direction;
};

// Per-neighbour proposal and acceptance probabilities of a directed move.
struct AcceptanceProfile {
  std::vector<std::size_t> sites;
  std::vector<double> q;
  std::vector<double> alpha;
  double total = 0.0;  // T_dir(x) = sum_k q_k alpha_k
};

AcceptanceProfile acceptance_profile(const TargetModel& target, const ProposalKernel& kernel,
                                     const BinaryState& x, Direction dir, EvalCounters& counters);

inline double acceptance_mass(const TargetModel& target, const ProposalKernel& kernel,
                              const BinaryState& x, Direction dir, EvalCounters& counters) {
  return acceptance_profile(target, kernel, x, dir, counters).total;
}

// The direction field is carried through unchanged by mh_step and revmix_step.
StepOutcome mh_step(const TargetModel& target, const ProposalKernel& kernel,
                    const LiftedState& s, Rng& rng, EvalCounters& counters);
StepOutcome lifted1_step(const TargetModel& target, const ProposalKernel& kernel,
                         const LiftedState& s, Rng& rng, EvalCounters& counters);
StepOutcome lifted2_step(const TargetModel& target, const ProposalKernel& kernel,
                         const RhoPolicy& rho, const LiftedState& s, Rng& rng,
                         EvalCounters& counters);
StepOutcome revmix_step(const TargetModel& target, const ProposalKernel& kernel,
                        const LiftedState& s, Rng& rng, EvalCounters& counters);

StepOutcome step(const SamplerSpec& spec, const TargetModel& target, const LiftedState& s,
                 Rng& rng, EvalCounters& counters);

using Statistic = std::function<double(const BinaryState&)>;

struct RunOptions {
  std::uint64_t iters = 0;   // total iterations, burn-in included
  std::uint64_t burnin = 0;
  std::uint64_t seed = 1;
  // Drawn uniformly (state and direction) from the chain's generator if unset.
  std::optional<LiftedState> initial;
  bool compute_ess = true;
};

// Deterministic given options.seed. Throws std::invalid_argument unless
// iters > burnin, or if the initial state has zero mass.
TraceSummary run_chain(const SamplerSpec& spec, const TargetModel& target,
                       const Statistic& statistic, const RunOptions& options);

// Starting state shared by run_chain and the Ising engine: the given one,
// or a uniform draw with positive mass.
LiftedState initial_state(const TargetModel& target, const RunOptions& options, Rng& rng);

}  // namespace lifted
