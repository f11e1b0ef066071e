#include "lifted/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lifted {

namespace {

std::vector<double> log_masses(const TargetModel& target, std::size_t limit) {
  const std::size_t n = target.dimension();
  if (n > limit)
    throw std::invalid_argument("enumeration refused: dimension " + std::to_string(n) +
                                " exceeds " + std::to_string(limit));
  std::vector<double> lm(std::size_t{1} << n);
  for (std::size_t m = 0; m < lm.size(); ++m) lm[m] = target.log_mass(BinaryState::from_index(m, n));
  return lm;
}

Eigen::VectorXd normalized(const std::vector<double>& lm) {
  const double top = *std::max_element(lm.begin(), lm.end());
  if (!std::isfinite(top)) throw std::invalid_argument("enumeration: no state has positive mass");
  Eigen::VectorXd p(static_cast<Eigen::Index>(lm.size()));
  for (std::size_t m = 0; m < lm.size(); ++m) p[static_cast<Eigen::Index>(m)] = std::exp(lm[m] - top);
  return p / p.sum();
}

double log_weight(const ProposalSpec& spec, double delta) {
  if (!spec.is_informed()) return 0.0;
  if (spec.g == BalancingFunction::sqrt) return 0.5 * delta;
  return delta >= 0 ? -std::log1p(std::exp(-delta)) : delta - std::log1p(std::exp(delta));
}

bool in_direction(std::size_t mask, std::size_t i, Direction dir) {
  const bool plus = (mask >> i) & 1U;
  return dir == Direction::up ? !plus : plus;
}

// Proposal probabilities q(x -> flip(x, i)) for every state, as an N x n table.
// `dir` selects a directed neighbourhood; nullopt means all n flips.
Eigen::MatrixXd proposal_table(const ProposalSpec& spec, const std::vector<double>& lm,
                               std::size_t n, std::optional<Direction> dir) {
  const std::size_t states = lm.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(n));
  std::vector<double> lw(n);
  for (std::size_t m = 0; m < states; ++m) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (dir && !in_direction(m, i, *dir)) {
        lw[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      lw[i] = log_weight(spec, lm[m ^ (std::size_t{1} << i)] - lm[m]);
      top = std::max(top, lw[i]);
    }
    if (!std::isfinite(top)) continue;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::exp(lw[i] - top);
    for (std::size_t i = 0; i < n; ++i)
      q(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = std::exp(lw[i] - top) / total;
  }
  return q;
}

// alpha = 1 ∧ pi(y) q_rev(y -> x) / (pi(x) q_fwd(x -> y))
double metropolis(const std::vector<double>& lm, std::size_t x, std::size_t i,
                  const Eigen::MatrixXd& q_fwd, const Eigen::MatrixXd& q_rev) {
  const std::size_t y = x ^ (std::size_t{1} << i);
  const auto ii = static_cast<Eigen::Index>(i);
  const double fwd = q_fwd(static_cast<Eigen::Index>(x), ii);
  const double rev = q_rev(static_cast<Eigen::Index>(y), ii);
  if (!(fwd > 0)) return 0.0;
  return std::min(1.0, std::exp(lm[y] - lm[x]) * rev / fwd);
}

void require_positive(const std::vector<double>& lm) {
  for (std::size_t m = 0; m < lm.size(); ++m)
    if (!std::isfinite(lm[m]))
      throw std::invalid_argument("build_kernel: state index " + std::to_string(m) + " has zero mass");
}

struct Directed {
  Eigen::MatrixXd component;  // plain-space sub-stochastic kernel
  Eigen::VectorXd total;      // T_dir(x)
};

Directed directed(const ProposalSpec& spec, const std::vector<double>& lm, std::size_t n,
                  Direction dir) {
  const auto q_fwd = proposal_table(spec, lm, n, dir);
  const auto q_rev = proposal_table(spec, lm, n, -dir);
  const auto states = static_cast<Eigen::Index>(lm.size());
  Directed d{Eigen::MatrixXd::Zero(states, states), Eigen::VectorXd::Zero(states)};
  for (std::size_t x = 0; x < lm.size(); ++x)
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_direction(x, i, dir)) continue;
      const double p = q_fwd(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(i)) *
                       metropolis(lm, x, i, q_fwd, q_rev);
      d.component(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x ^ (std::size_t{1} << i))) = p;
      d.total[static_cast<Eigen::Index>(x)] += p;
    }
  return d;
}

}  // namespace

Enumeration enumerate(const TargetModel& target, bool lifted) {
  const auto lm = log_masses(target, lifted ? kMaxEnumeratedLifted : kMaxEnumerated);
  Enumeration e;
  e.n = target.dimension();
  e.lifted = lifted;
  const auto p = normalized(lm);
  if (!lifted) {
    e.pmf = p;
  } else {
    e.pmf.resize(2 * p.size());
    for (Eigen::Index m = 0; m < p.size(); ++m) e.pmf[2 * m] = e.pmf[2 * m + 1] = 0.5 * p[m];
  }
  return e;
}

Eigen::MatrixXd directed_component(const ProposalSpec& proposal, const TargetModel& target,
                                   Direction dir) {
  const auto lm = log_masses(target, kMaxEnumerated);
  require_positive(lm);
  return directed(proposal, lm, target.dimension(), dir).component;
}

Eigen::VectorXd acceptance_masses(const ProposalSpec& proposal, const TargetModel& target,
                                  Direction dir) {
  const auto lm = log_masses(target, kMaxEnumerated);
  require_positive(lm);
  return directed(proposal, lm, target.dimension(), dir).total;
}

KernelMatrix build_kernel(const SamplerSpec& spec, const TargetModel& target) {
  const std::size_t n = target.dimension();
  const bool lifted = spec.algorithm == Algorithm::lifted1 || spec.algorithm == Algorithm::lifted2;
  const auto lm = log_masses(target, lifted ? kMaxEnumeratedLifted : kMaxEnumerated);
  require_positive(lm);
  const auto states = static_cast<Eigen::Index>(lm.size());

  KernelMatrix K;
  K.n = n;
  K.lifted = lifted;

  if (spec.algorithm == Algorithm::mh) {
    const auto q = proposal_table(spec.proposal, lm, n, std::nullopt);
    K.P = Eigen::MatrixXd::Zero(states, states);
    for (std::size_t x = 0; x < lm.size(); ++x) {
      double moved = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double p = q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(i)) * metropolis(lm, x, i, q, q);
        K.P(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x ^ (std::size_t{1} << i))) = p;
        moved += p;
      }
      K.P(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) = std::max(0.0, 1.0 - moved);
    }
    return K;
  }

  const auto down = directed(spec.proposal, lm, n, Direction::down);
  const auto up = directed(spec.proposal, lm, n, Direction::up);

  if (spec.algorithm == Algorithm::revmix) {
    K.P = 0.5 * (down.component + up.component);
    for (Eigen::Index x = 0; x < states; ++x) K.P(x, x) = std::max(0.0, 1.0 - 0.5 * (down.total[x] + up.total[x]));
    return K;
  }

  K.P = Eigen::MatrixXd::Zero(2 * states, 2 * states);
  for (Eigen::Index x = 0; x < states; ++x) {
    const auto xs = BinaryState::from_index(static_cast<std::uint64_t>(x), n);
    for (const Direction dir : {Direction::down, Direction::up}) {
      const Directed& fwd = dir == Direction::up ? up : down;
      const Directed& bwd = dir == Direction::up ? down : up;
      const Eigen::Index from = 2 * x + (dir == Direction::up);
      const Eigen::Index flipped = 2 * x + (dir != Direction::up);
      for (Eigen::Index y = 0; y < states; ++y)
        if (fwd.component(x, y) != 0.0) K.P(from, 2 * y + (dir == Direction::up)) = fwd.component(x, y);
      const double t_fwd = fwd.total[x];
      const double t_bwd = bwd.total[x];
      double rho = 1.0 - t_fwd;
      if (spec.algorithm == Algorithm::lifted2) rho = spec.rho.evaluate(xs, dir, t_fwd, t_bwd);
      K.P(from, flipped) = std::max(0.0, rho);
      K.P(from, from) = std::max(0.0, 1.0 - t_fwd - rho);
    }
  }
  return K;
}

// ---------------------------------------------------------------------------

double stationarity_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& pmf) {
  const Eigen::RowVectorXd moved = pmf.transpose() * P;
  return (moved - pmf.transpose()).cwiseAbs().maxCoeff();
}

double row_sum_error(const Eigen::MatrixXd& P) {
  return (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double skew_balance_error(const KernelMatrix& K, const Eigen::VectorXd& pmf) {
  if (!K.lifted) throw std::invalid_argument("skew_balance_error: kernel is not lifted");
  const auto states = static_cast<Eigen::Index>(std::size_t{1} << K.n);
  double worst = 0.0;
  for (Eigen::Index x = 0; x < states; ++x)
    for (Eigen::Index y = 0; y < states; ++y) {
      if (x == y) continue;
      for (int d = 0; d < 2; ++d) {
        const double lhs = pmf[2 * x + d] * K.P(2 * x + d, 2 * y + d);
        const double rhs = pmf[2 * y + (1 - d)] * K.P(2 * y + (1 - d), 2 * x + (1 - d));
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  return worst;
}

double detailed_balance_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& pmf) {
  const Eigen::MatrixXd flow = pmf.asDiagonal() * P;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

double asymptotic_variance(const Eigen::MatrixXd& P, const Eigen::VectorXd& pmf,
                           const Eigen::VectorXd& f) {
  if (P.rows() != P.cols() || P.rows() != pmf.size() || pmf.size() != f.size())
    throw std::invalid_argument("asymptotic_variance: size mismatch");
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < pmf.size(); ++i)
    if (pmf[i] > 0) support.push_back(i);
  const auto m = static_cast<Eigen::Index>(support.size());
  if (m == 0) throw std::invalid_argument("asymptotic_variance: empty support");

  Eigen::MatrixXd Q(m, m);
  Eigen::VectorXd p(m), g(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    p[a] = pmf[support[a]];
    g[a] = f[support[a]];
    for (Eigen::Index b = 0; b < m; ++b) Q(a, b) = P(support[a], support[b]);
  }
  p /= p.sum();

  // Strong connectivity: everything reachable from the first state, and the
  // first state reachable from everything.
  for (const bool forward : {true, false}) {
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      for (Eigen::Index b = 0; b < m; ++b) {
        const double w = forward ? Q(a, b) : Q(b, a);
        if (w > 0 && !seen[static_cast<std::size_t>(b)]) {
          seen[static_cast<std::size_t>(b)] = 1;
          stack.push_back(b);
        }
      }
    }
    std::ostringstream missing;
    std::size_t count = 0;
    for (Eigen::Index b = 0; b < m; ++b)
      if (!seen[static_cast<std::size_t>(b)]) {
        if (count < 16) missing << (count ? ", " : "") << support[b];
        ++count;
      }
    if (count)
      throw std::domain_error(std::string("asymptotic_variance: reducible kernel; ") +
                              (forward ? "states unreachable from " : "states that cannot reach ") +
                              "state " + std::to_string(support[0]) + ": " + missing.str() +
                              (count > 16 ? ", ..." : ""));
  }

  const double mean = p.dot(g);
  const Eigen::VectorXd centered = g.array() - mean;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m) - Q;
  A.rowwise() += p.transpose();
  const Eigen::VectorXd h = A.partialPivLu().solve(centered);
  const double var = p.dot(centered.cwiseProduct(centered));
  return 2.0 * p.dot(centered.cwiseProduct(h)) - var;
}

Eigen::VectorXd tabulate(const Enumeration& e, const std::function<double(const BinaryState&)>& f) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(e.size()));
  const std::size_t states = std::size_t{1} << e.n;
  for (std::size_t m = 0; m < states; ++m) {
    const double v = f(BinaryState::from_index(m, e.n));
    if (e.lifted) {
      out[static_cast<Eigen::Index>(2 * m)] = out[static_cast<Eigen::Index>(2 * m + 1)] = v;
    } else {
      out[static_cast<Eigen::Index>(m)] = v;
    }
  }
  return out;
}

Eigen::VectorXd marginal(const Eigen::VectorXd& lifted_pmf) {
  Eigen::VectorXd out(lifted_pmf.size() / 2);
  for (Eigen::Index m = 0; m < out.size(); ++m) out[m] = lifted_pmf[2 * m] + lifted_pmf[2 * m + 1];
  return out;
}

double tv_distance(std::span<const double> histogram, std::span<const double> pmf) {
  if (histogram.size() != pmf.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double total = 0.0;
  for (double h : histogram) total += h;
  if (!(total > 0)) throw std::invalid_argument("tv_distance: empty histogram");
  double d = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) d += std::abs(histogram[i] / total - pmf[i]);
  return 0.5 * d;
}

}  // namespace lifted
