#pragma once
// Trans-dimensional sampling over a partially ordered model space: the
// lifted reversible-jump sampler, its reversible counterpart and a conjugate
// Gaussian regression fixture with closed-form model posteriors.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>

#include "lifted/proposals.hpp"
#include "lifted/rng.hpp"
#include "lifted/state.hpp"
#include "lifted/targets.hpp"

namespace lifted {

// Parameters are stored flat: coefficients of the included covariates in
// ascending index order, then the error variance.
struct TransDimState {
  BinaryState model;
  Eigen::VectorXd params;
  Direction direction = Direction::up;
  double log_weight = 0.0;  // auxiliary weight carried by noisy switches
};

// ---------------------------------------------------------------------------
// y = X_x beta + e, e ~ N(0, sigma^2 I), no intercept,
// beta | sigma^2, x ~ N(0, sigma^2 tau2 I), sigma^2 ~ IG(a0, b0), uniform
// prior over the 2^p models.

class ConjugateToy {
 public:
  ConjugateToy(Eigen::MatrixXd design, Eigen::VectorXd response, double tau2 = 1.0,
               double a0 = 2.0, double b0 = 2.0);

  // Synthetic data: standard normal design, coefficients 0.6, 0.3, 0, 0.45,
  // 0.15, 0 (first p of them), unit noise. p <= 6.
  static ConjugateToy generate(std::size_t p, std::size_t n_obs, std::uint64_t seed);

  std::size_t dimension() const { return static_cast<std::size_t>(design_.cols()); }
  std::size_t param_count(const BinaryState& x) const { return x.n_plus() + 1; }

  struct Posterior {
    Eigen::VectorXd mean;  // beta_n
    Eigen::MatrixXd scale; // V_n; beta | sigma^2 ~ N(beta_n, sigma^2 V_n)
    double a = 0.0;        // sigma^2 ~ IG(a, b)
    double b = 0.0;
  };
  Posterior posterior(const BinaryState& x) const;

  // log p(y | x), closed form.
  double log_marginal(const BinaryState& x) const;
  // Same quantity from likelihood * prior / posterior at the posterior mode
  // of sigma^2 and mean of beta, evaluated with densities written out
  // separately.
  double log_marginal_bayes_identity(const BinaryState& x) const;

  // Draw theta ~ pi(theta | x).
  Eigen::VectorXd sample_conditional(const BinaryState& x, Rng& rng) const;

  // Exact model posterior as a tabular target.
  TabularTarget model_target() const;

 private:
  Eigen::MatrixXd columns(const BinaryState& x) const;

  Eigen::MatrixXd design_;
  Eigen::VectorXd response_;
  double tau2_, a0_, b0_;
};

// ---------------------------------------------------------------------------

struct SwitchDraw {
  Eigen::VectorXd params;  // theta'_y
  double log_r = 0.0;
  double log_weight = 0.0;
};

class ModelSwitchProposal {
 public:
  virtual ~ModelSwitchProposal() = default;
  virtual SwitchDraw propose(const TransDimState& from, const BinaryState& to, Rng& rng) const = 0;
};

class WithinModelKernel {
 public:
  virtual ~WithinModelKernel() = default;
  virtual Eigen::VectorXd update(const BinaryState& x, const Eigen::VectorXd& params,
                                 Rng& rng) const = 0;
};

// theta'_y from the exact conditional, so r = pi(y) / pi(x).
class ExactConditionalSwitch final : public ModelSwitchProposal {
 public:
  explicit ExactConditionalSwitch(const ConjugateToy& toy);
  SwitchDraw propose(const TransDimState& from, const BinaryState& to, Rng& rng) const override;

 private:
  const ConjugateToy& toy_;
  std::vector<double> log_marginals_;
};

// As above, but every visited model gets a fresh weight W with
// log W ~ N(-s^2/2, s^2) (so E W = 1) and r = pi(y) W' / (pi(x) W). The
// weight is part of the state, which keeps the chain exact for the model
// and parameter marginals while making r noisy.
class NoisySwitch final : public ModelSwitchProposal {
 public:
  NoisySwitch(const ConjugateToy& toy, double log_sd);
  SwitchDraw propose(const TransDimState& from, const BinaryState& to, Rng& rng) const override;

 private:
  ExactConditionalSwitch exact_;
  double log_sd_;
};

class ExactConditionalWithin final : public WithinModelKernel {
 public:
  explicit ExactConditionalWithin(const ConjugateToy& toy) : toy_(toy) {}
  Eigen::VectorXd update(const BinaryState& x, const Eigen::VectorXd& params,
                         Rng& rng) const override;

 private:
  const ConjugateToy& toy_;
};

// Directed model proposal that keeps mass w0 on the current model:
// q_{x,dir}(x) = w0 and q_{x,dir}(y) = (1 - w0) q'_{x,dir}(y) on N_dir(x),
// with q' a single-flip proposal. On an empty N_dir(x) the remaining mass
// 1 - w0 points outside the space.
class DirectedModelProposal {
 public:
  // Throws std::invalid_argument unless self_up == self_down, both in [0, 1].
  // `marginal` is used for informed q' and may be null for uniform q'.
  DirectedModelProposal(ProposalSpec inner, const TargetModel* marginal, double self_up = 0.5,
                        double self_down = 0.5);

  double self_mass() const { return w0_; }

  struct Draw {
    enum class Kind { self, flip, outside } kind;
    std::size_t site = 0;
  };
  Draw sample(const BinaryState& x, Direction dir, Rng& rng) const;
  // log q_{x,dir}(flip(x, site)).
  double log_q(const BinaryState& x, Direction dir, std::size_t site) const;

 private:
  ProposalKernel inner_;
  const TargetModel* marginal_;
  double w0_;
};

enum class TransDimMove { within, accept, reject, outside };

struct TransDimOutcome {
  TransDimState next;
  TransDimMove move = TransDimMove::within;
};

// log of [q(y -> x) / q(x -> y)] * r.
inline double rj_log_acceptance(double log_q_forward, double log_q_reverse, double log_r) {
  return log_q_reverse - log_q_forward + log_r;
}

// Lifted: y ~ q_{x,dir}; y = x -> within-model update keeping dir; otherwise
// accept with 1 ∧ [q_{y,-dir}(x) / q_{x,dir}(y)] r -> (y, theta', dir),
// else (x, theta, -dir).
TransDimOutcome lifted_rj_step(const DirectedModelProposal& q, const ModelSwitchProposal& sw,
                               const WithinModelKernel& within, const TransDimState& s, Rng& rng);

// Reversible: q_x = (q_{x,-1} + q_{x,+1}) / 2. The direction is carried unchanged.
TransDimOutcome rj_step(const DirectedModelProposal& q, const ModelSwitchProposal& sw,
                        const WithinModelKernel& within, const TransDimState& s, Rng& rng);

inline constexpr std::size_t kMaxModelSwitchDimension = 12;

// Lifted transition matrix on (model, direction) of lifted_rj_step
// restricted to iterations that propose a switch, for switch proposals whose
// r does not depend on the parameters. Indexed like build_kernel.
Eigen::MatrixXd model_switch_kernel(const DirectedModelProposal& q, const ModelSwitchProposal& sw,
                                    std::size_t p);

}  // namespace lifted
