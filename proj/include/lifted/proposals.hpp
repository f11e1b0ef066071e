#pragma once
// Single-flip proposals: uniform over a (directed) neighbourhood, or locally
// balanced, q_x(y) ∝ g(pi(y)/pi(x)) with g(t)/g(1/t) = t.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifted/rng.hpp"
#include "lifted/state.hpp"
#include "lifted/targets.hpp"

namespace lifted {

enum class BalancingFunction { barker, sqrt };

// g(t) for t > 0: barker t/(1+t), sqrt √t.
double balance(BalancingFunction g, double t);
// log g(exp(delta)), evaluated without overflow.
double log_balance(BalancingFunction g, double delta);

struct ProposalSpec {
  enum class Kind { uniform, locally_balanced };
  Kind kind = Kind::uniform;
  BalancingFunction g = BalancingFunction::barker;

  static ProposalSpec uniform() { return {}; }
  static ProposalSpec informed(BalancingFunction g = BalancingFunction::barker) {
    return {Kind::locally_balanced, g};
  }
  bool is_informed() const { return kind == Kind::locally_balanced; }
  std::string name() const;  // "uniform", "barker", "sqrt"
};

// Parses the names produced by ProposalSpec::name(); "informed" means barker.
std::optional<ProposalSpec> parse_proposal(const std::string& name);

// Target work done by proposals. ratio_evals counts log_ratio evaluations;
// normalizers counts informed normalizing-constant computations.
struct EvalCounters {
  std::uint64_t ratio_evals = 0;
  std::uint64_t normalizers = 0;

  EvalCounters& operator+=(const EvalCounters& o) {
    ratio_evals += o.ratio_evals;
    normalizers += o.normalizers;
    return *this;
  }
};

// Unnormalized proposal weights over a neighbourhood listed by ascending
// coordinate. The true weight of entry k is weights[k] * exp(log_scale).
struct NeighborhoodWeights {
  std::vector<std::size_t> sites;
  std::vector<double> log_ratios;  // filled for informed proposals only
  std::vector<double> weights;
  double log_scale = 0.0;
  double sum = 0.0;

  bool empty() const { return sites.empty() || !(sum > 0); }
  std::size_t size() const { return sites.size(); }
  double log_normalizer() const;
  // Position of `site` in the neighbourhood, if present.
  std::optional<std::size_t> find(std::size_t site) const;
  // Inverse CDF in neighbourhood order; u in [0, 1).
  std::size_t sample(double u) const;
};

struct ProposalDraw {
  std::size_t site;   // y = flip(x, site)
  double log_q;       // log q(x -> y)
  std::optional<double> log_ratio;  // log pi(y)/pi(x) when already known
};

class ProposalKernel {
 public:
  explicit ProposalKernel(ProposalSpec spec) : spec_(spec) {}

  const ProposalSpec& spec() const { return spec_; }

  // Weights over N_dir(x), or over all n flips for the undirected versions.
  void directed_weights(const TargetModel& target, const BinaryState& x, Direction dir,
                        NeighborhoodWeights& out, EvalCounters& counters) const;
  void undirected_weights(const TargetModel& target, const BinaryState& x,
                          NeighborhoodWeights& out, EvalCounters& counters) const;

  // log q of entry k of precomputed weights.
  double log_q(const NeighborhoodWeights& w, std::size_t k) const;

  // nullopt signals an empty neighbourhood (boundary state).
  std::optional<ProposalDraw> sample_directed(const TargetModel& target, const BinaryState& x,
                                              Direction dir, Rng& rng,
                                              EvalCounters& counters) const;
  std::optional<ProposalDraw> sample_undirected(const TargetModel& target, const BinaryState& x,
                                                Rng& rng, EvalCounters& counters) const;

  // log q_{x,dir}(flip(x, site)); -inf outside the support.
  double log_q_directed(const TargetModel& target, const BinaryState& x, Direction dir,
                        std::size_t site, EvalCounters& counters) const;
  double log_q_undirected(const TargetModel& target, const BinaryState& x, std::size_t site,
                          EvalCounters& counters) const;

  // log c_dir(x) (log of the neighbourhood size for uniform proposals);
  // -inf on an empty neighbourhood.
  double log_normalizer_directed(const TargetModel& target, const BinaryState& x, Direction dir,
                                 EvalCounters& counters) const;
  double log_normalizer_undirected(const TargetModel& target, const BinaryState& x,
                                   EvalCounters& counters) const;

 private:
  void fill(const TargetModel& target, const BinaryState& x, NeighborhoodWeights& out,
            EvalCounters& counters) const;

  ProposalSpec spec_;
};

// log of pi(y) q(y -> x) / (pi(x) q(x -> y)).
inline double log_acceptance_ratio(double log_ratio, double log_q_reverse, double log_q_forward) {
  return log_ratio + log_q_reverse - log_q_forward;
}

// 1 ∧ exp(log_a), with NaN (e.g. -inf + inf) treated as rejection.
double acceptance_probability(double log_a);

}  // namespace lifted
