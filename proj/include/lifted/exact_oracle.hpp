#pragma once
// Brute-force ground truth on small spaces: enumeration, explicit transition
// matrices of every sampler, and exact asymptotic variances.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lifted/samplers.hpp"
#include "lifted/state.hpp"
#include "lifted/targets.hpp"

namespace lifted {

inline constexpr std::size_t kMaxEnumerated = 14;
inline constexpr std::size_t kMaxEnumeratedLifted = 12;

// States are indexed by BinaryState::to_index(). Lifted index of (x, dir)
// is 2 * index(x) + (dir == up).
inline std::size_t lifted_index(const LiftedState& s) {
  return 2 * static_cast<std::size_t>(s.state.to_index()) + (s.direction == Direction::up);
}
inline LiftedState lifted_state(std::size_t index, std::size_t n) {
  return {BinaryState::from_index(index / 2, n), index % 2 ? Direction::up : Direction::down};
}

struct Enumeration {
  std::size_t n = 0;
  bool lifted = false;
  Eigen::VectorXd pmf;  // normalized; lifted: pi(x) / 2 per direction

  std::size_t size() const { return static_cast<std::size_t>(pmf.size()); }
};

// Throws std::invalid_argument when n exceeds kMaxEnumerated
// (kMaxEnumeratedLifted if lifted) or every state has zero mass.
Enumeration enumerate(const TargetModel& target, bool lifted);

struct KernelMatrix {
  std::size_t n = 0;
  bool lifted = false;
  Eigen::MatrixXd P;

  std::size_t size() const { return static_cast<std::size_t>(P.rows()); }
};

// Transition matrix of one step of the sampler, computed directly from the
// enumerated masses. MH and RevMix (which ignores the direction) live on the
// plain space, lifted1 and lifted2 on the lifted space. Requires every state
// to have positive mass (std::invalid_argument otherwise).
KernelMatrix build_kernel(const SamplerSpec& spec, const TargetModel& target);

// Sub-stochastic kernel of a single directed Metropolis component on the
// plain space: x -> flip(x, i) with probability q_dir(x, i) alpha_dir(x, i).
Eigen::MatrixXd directed_component(const ProposalSpec& proposal, const TargetModel& target,
                                   Direction dir);

// T_dir(x) for every plain state x.
Eigen::VectorXd acceptance_masses(const ProposalSpec& proposal, const TargetModel& target,
                                  Direction dir);

// max_j |(pi P - pi)_j|
double stationarity_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& pmf);
// max |P 1 - 1|
double row_sum_error(const Eigen::MatrixXd& P);
// max over x != y and dir of |pi(x) P((x,dir),(y,dir)) - pi(y) P((y,-dir),(x,-dir))|
double skew_balance_error(const KernelMatrix& K, const Eigen::VectorXd& pmf);
// max over x, y of |pi(x) P(x,y) - pi(y) P(y,x)|
double detailed_balance_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& pmf);

// Asymptotic variance of the ergodic average of f (one value per state of
// P) for a chain started at stationarity, via the Poisson equation. Throws
// std::domain_error naming unreachable states when the chain restricted to
// the support of pmf is reducible.
double asymptotic_variance(const Eigen::MatrixXd& P, const Eigen::VectorXd& pmf,
                           const Eigen::VectorXd& f);

// f(x) evaluated on every enumerated state (duplicated per direction if lifted).
Eigen::VectorXd tabulate(const Enumeration& e, const std::function<double(const BinaryState&)>& f);

// Marginal in x of a lifted vector.
Eigen::VectorXd marginal(const Eigen::VectorXd& lifted_pmf);

// 1/2 sum |p - q| after normalizing the histogram. Sizes must agree.
double tv_distance(std::span<const double> histogram, std::span<const double> pmf);

}  // namespace lifted
