#include "lifted/transdim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace lifted {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Stands in for the model marginal when the inner proposal is uniform and
// never looks at the target.
class NoTarget final : public TargetModel {
 public:
  explicit NoTarget(std::size_t n) : n_(n) {}
  std::size_t dimension() const override { return n_; }
  double log_mass(const BinaryState&) const override {
    throw std::logic_error("DirectedModelProposal: informed proposals need a model marginal");
  }

 private:
  std::size_t n_;
};

}  // namespace

ConjugateToy::ConjugateToy(Eigen::MatrixXd design, Eigen::VectorXd response, double tau2,
                           double a0, double b0)
    : design_(std::move(design)), response_(std::move(response)), tau2_(tau2), a0_(a0), b0_(b0) {
  if (design_.cols() < 1 || design_.cols() > 6)
    throw std::invalid_argument("ConjugateToy: need 1 <= p <= 6");
  if (design_.rows() != response_.size() || design_.rows() < 2)
    throw std::invalid_argument("ConjugateToy: design and response disagree");
  if (!(tau2_ > 0 && a0_ > 0 && b0_ > 0))
    throw std::invalid_argument("ConjugateToy: prior parameters must be positive");
}

ConjugateToy ConjugateToy::generate(std::size_t p, std::size_t n_obs, std::uint64_t seed) {
  if (p < 1 || p > 6) throw std::invalid_argument("ConjugateToy::generate: need 1 <= p <= 6");
  static constexpr double beta[] = {0.6, 0.3, 0.0, 0.45, 0.15, 0.0};
  Rng rng(seed);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(n_obs);
  const auto k = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mean = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      X(i, j) = normal(rng);
      mean += beta[j] * X(i, j);
    }
    y[i] = mean + normal(rng);
  }
  return ConjugateToy(std::move(X), std::move(y));
}

Eigen::MatrixXd ConjugateToy::columns(const BinaryState& x) const {
  if (x.size() != dimension()) throw std::invalid_argument("ConjugateToy: dimension mismatch");
  Eigen::MatrixXd A(design_.rows(), static_cast<Eigen::Index>(x.n_plus()));
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] == 1) A.col(c++) = design_.col(static_cast<Eigen::Index>(j));
  return A;
}

ConjugateToy::Posterior ConjugateToy::posterior(const BinaryState& x) const {
  const auto A = columns(x);
  const auto k = A.cols();
  Eigen::MatrixXd precision = A.transpose() * A;
  precision.diagonal().array() += 1.0 / tau2_;
  Posterior post;
  post.scale = precision.inverse();
  post.mean = post.scale * (A.transpose() * response_);
  post.a = a0_ + 0.5 * static_cast<double>(response_.size());
  post.b = b0_ + 0.5 * (response_.squaredNorm() - post.mean.dot(precision * post.mean));
  if (k == 0) post.b = b0_ + 0.5 * response_.squaredNorm();
  return post;
}

double ConjugateToy::log_marginal(const BinaryState& x) const {
  const auto A = columns(x);
  const double k = static_cast<double>(A.cols());
  const double n = static_cast<double>(response_.size());
  Eigen::MatrixXd precision = A.transpose() * A;
  precision.diagonal().array() += 1.0 / tau2_;
  double log_det = 0.0;
  double b = b0_ + 0.5 * response_.squaredNorm();
  if (A.cols() > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    const Eigen::MatrixXd L = llt.matrixL();
    log_det = 2.0 * L.diagonal().array().log().sum();
    const Eigen::VectorXd w = L.triangularView<Eigen::Lower>().solve(A.transpose() * response_);
    b -= 0.5 * w.squaredNorm();
  }
  const double a = a0_ + 0.5 * n;
  return -0.5 * n * kLog2Pi - 0.5 * k * std::log(tau2_) - 0.5 * log_det + a0_ * std::log(b0_) -
         a * std::log(b) + std::lgamma(a) - std::lgamma(a0_);
}

double ConjugateToy::log_marginal_bayes_identity(const BinaryState& x) const {
  const auto A = columns(x);
  const double k = static_cast<double>(A.cols());
  const double n = static_cast<double>(response_.size());
  const auto post = posterior(x);
  const double s = post.b / (post.a + 1.0);
  const Eigen::VectorXd& beta = post.mean;

  const double log_lik = -0.5 * n * (kLog2Pi + std::log(s)) - (response_ - A * beta).squaredNorm() / (2.0 * s);
  const double log_prior_beta = -0.5 * k * (kLog2Pi + std::log(s * tau2_)) - beta.squaredNorm() / (2.0 * s * tau2_);
  const double log_prior_var = a0_ * std::log(b0_) - std::lgamma(a0_) - (a0_ + 1.0) * std::log(s) - b0_ / s;
  double log_det_scale = 0.0;
  if (A.cols() > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(post.scale);
    log_det_scale = ldlt.vectorD().array().log().sum();
  }
  const double log_post_beta = -0.5 * k * (kLog2Pi + std::log(s)) - 0.5 * log_det_scale;
  const double log_post_var = post.a * std::log(post.b) - std::lgamma(post.a) - (post.a + 1.0) * std::log(s) - post.b / s;
  return log_lik + log_prior_beta + log_prior_var - log_post_beta - log_post_var;
}

Eigen::VectorXd ConjugateToy::sample_conditional(const BinaryState& x, Rng& rng) const {
  const auto post = posterior(x);
  const auto k = post.mean.size();
  std::gamma_distribution<double> gamma(post.a, 1.0);
  std::normal_distribution<double> normal;
  const double var = post.b / gamma(rng);
  Eigen::VectorXd theta(k + 1);
  if (k > 0) {
    Eigen::VectorXd z(k);
    for (Eigen::Index j = 0; j < k; ++j) z[j] = normal(rng);
    const Eigen::MatrixXd L = post.scale.llt().matrixL();
    theta.head(k) = post.mean + std::sqrt(var) * (L * z);
  }
  theta[k] = var;
  return theta;
}

TabularTarget ConjugateToy::model_target() const {
  const std::size_t p = dimension();
  std::vector<double> lm(std::size_t{1} << p);
  for (std::size_t m = 0; m < lm.size(); ++m) lm[m] = log_marginal(BinaryState::from_index(m, p));
  return TabularTarget::from_log_masses(std::move(lm));
}

// ---------------------------------------------------------------------------

ExactConditionalSwitch::ExactConditionalSwitch(const ConjugateToy& toy) : toy_(toy) {
  const std::size_t p = toy.dimension();
  log_marginals_.resize(std::size_t{1} << p);
  for (std::size_t m = 0; m < log_marginals_.size(); ++m)
    log_marginals_[m] = toy.log_marginal(BinaryState::from_index(m, p));
}

SwitchDraw ExactConditionalSwitch::propose(const TransDimState& from, const BinaryState& to,
                                           Rng& rng) const {
  SwitchDraw d;
  d.params = toy_.sample_conditional(to, rng);
  d.log_r = log_marginals_[to.to_index()] - log_marginals_[from.model.to_index()];
  return d;
}

NoisySwitch::NoisySwitch(const ConjugateToy& toy, double log_sd) : exact_(toy), log_sd_(log_sd) {
  if (!(log_sd >= 0)) throw std::invalid_argument("NoisySwitch: noise scale must be >= 0");
}

SwitchDraw NoisySwitch::propose(const TransDimState& from, const BinaryState& to, Rng& rng) const {
  SwitchDraw d = exact_.propose(from, to, rng);
  std::normal_distribution<double> normal;
  d.log_weight = -0.5 * log_sd_ * log_sd_ + log_sd_ * normal(rng);
  d.log_r += d.log_weight - from.log_weight;
  return d;
}

Eigen::VectorXd ExactConditionalWithin::update(const BinaryState& x, const Eigen::VectorXd&,
                                               Rng& rng) const {
  return toy_.sample_conditional(x, rng);
}

// ---------------------------------------------------------------------------

DirectedModelProposal::DirectedModelProposal(ProposalSpec inner, const TargetModel* marginal,
                                             double self_up, double self_down)
    : inner_(inner), marginal_(marginal), w0_(self_up) {
  if (self_up != self_down)
    throw std::invalid_argument("DirectedModelProposal: self-proposal mass must not depend on the direction");
  if (!(self_up >= 0.0 && self_up <= 1.0))
    throw std::invalid_argument("DirectedModelProposal: self-proposal mass must lie in [0, 1]");
  if (inner.is_informed() && !marginal)
    throw std::invalid_argument("DirectedModelProposal: informed proposals need a model marginal");
}

DirectedModelProposal::Draw DirectedModelProposal::sample(const BinaryState& x, Direction dir,
                                                          Rng& rng) const {
  if (uniform01(rng) < w0_) return {Draw::Kind::self};
  if (directed_size(x, dir) == 0) return {Draw::Kind::outside};
  const NoTarget none(x.size());
  EvalCounters counters;
  const auto d = inner_.sample_directed(marginal_ ? *marginal_ : none, x, dir, rng, counters);
  if (!d) return {Draw::Kind::outside};
  return {Draw::Kind::flip, d->site};
}

double DirectedModelProposal::log_q(const BinaryState& x, Direction dir, std::size_t site) const {
  const NoTarget none(x.size());
  EvalCounters counters;
  return std::log1p(-w0_) + inner_.log_q_directed(marginal_ ? *marginal_ : none, x, dir, site, counters);
}

namespace {

double switch_log_alpha(const DirectedModelProposal& q, const BinaryState& x, Direction dir,
                        std::size_t site, double log_r) {
  const BinaryState y = flip(x, site);
  return rj_log_acceptance(q.log_q(x, dir, site), q.log_q(y, -dir, site), log_r);
}

}  // namespace

TransDimOutcome lifted_rj_step(const DirectedModelProposal& q, const ModelSwitchProposal& sw,
                               const WithinModelKernel& within, const TransDimState& s, Rng& rng) {
  TransDimOutcome out{s, TransDimMove::within};
  const auto d = q.sample(s.model, s.direction, rng);
  switch (d.kind) {
    case DirectedModelProposal::Draw::Kind::self:
      out.next.params = within.update(s.model, s.params, rng);
      return out;
    case DirectedModelProposal::Draw::Kind::outside:
      out.next.direction = -s.direction;
      out.move = TransDimMove::outside;
      return out;
    case DirectedModelProposal::Draw::Kind::flip:
      break;
  }
  const BinaryState y = flip(s.model, d.site);
  SwitchDraw proposal = sw.propose(s, y, rng);
  const double a = acceptance_probability(switch_log_alpha(q, s.model, s.direction, d.site, proposal.log_r));
  if (uniform01(rng) < a) {
    out.next.model = y;
    out.next.params = std::move(proposal.params);
    out.next.log_weight = proposal.log_weight;
    out.move = TransDimMove::accept;
  } else {
    out.next.direction = -s.direction;
    out.move = TransDimMove::reject;
  }
  return out;
}

TransDimOutcome rj_step(const DirectedModelProposal& q, const ModelSwitchProposal& sw,
                        const WithinModelKernel& within, const TransDimState& s, Rng& rng) {
  TransDimOutcome out{s, TransDimMove::within};
  const Direction dir = random_direction(rng);
  const auto d = q.sample(s.model, dir, rng);
  switch (d.kind) {
    case DirectedModelProposal::Draw::Kind::self:
      out.next.params = within.update(s.model, s.params, rng);
      return out;
    case DirectedModelProposal::Draw::Kind::outside:
      out.move = TransDimMove::outside;
      return out;
    case DirectedModelProposal::Draw::Kind::flip:
      break;
  }
  const BinaryState y = flip(s.model, d.site);
  SwitchDraw proposal = sw.propose(s, y, rng);
  // q_x(y) = q_{x,dir}(y) / 2 and q_y(x) = q_{y,-dir}(x) / 2; the halves cancel.
  const double a = acceptance_probability(switch_log_alpha(q, s.model, dir, d.site, proposal.log_r));
  if (uniform01(rng) < a) {
    out.next.model = y;
    out.next.params = std::move(proposal.params);
    out.next.log_weight = proposal.log_weight;
    out.move = TransDimMove::accept;
  } else {
    out.move = TransDimMove::reject;
  }
  return out;
}

Eigen::MatrixXd model_switch_kernel(const DirectedModelProposal& q, const ModelSwitchProposal& sw,
                                    std::size_t p) {
  if (p > kMaxModelSwitchDimension)
    throw std::invalid_argument("model_switch_kernel: dimension too large");
  if (!(q.self_mass() < 1.0)) throw std::invalid_argument("model_switch_kernel: no switch mass");
  const auto states = static_cast<Eigen::Index>(std::size_t{1} << p);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * states, 2 * states);
  Rng rng(1);
  const double log_switch = std::log1p(-q.self_mass());
  for (Eigen::Index m = 0; m < states; ++m) {
    const auto x = BinaryState::from_index(static_cast<std::uint64_t>(m), p);
    for (const Direction dir : {Direction::down, Direction::up}) {
      const Eigen::Index from = 2 * m + (dir == Direction::up);
      double moved = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        if (!moves_in(x, i, dir)) continue;
        const BinaryState y = flip(x, i);
        TransDimState s{x, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.n_plus() + 1)), dir};
        const double log_r = sw.propose(s, y, rng).log_r;
        const double q_switch = std::exp(q.log_q(x, dir, i) - log_switch);
        const double p_move = q_switch * acceptance_probability(switch_log_alpha(q, x, dir, i, log_r));
        P(from, 2 * static_cast<Eigen::Index>(y.to_index()) + (dir == Direction::up)) = p_move;
        moved += p_move;
      }
      P(from, 2 * m + (dir != Direction::up)) = std::max(0.0, 1.0 - moved);
    }
  }
  return P;
}

}  // namespace lifted
