#include "lifted/ising_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lifted/simd/kernels.hpp"

namespace lifted {

bool IsingChain::supports(const SamplerSpec& spec) {
  const bool algo = spec.algorithm == Algorithm::mh || spec.algorithm == Algorithm::lifted1 ||
                    spec.algorithm == Algorithm::revmix;
  const bool proposal = !spec.proposal.is_informed() || spec.proposal.g == BalancingFunction::barker;
  return algo && proposal;
}

IsingChain::IsingChain(const IsingModel& model, const SamplerSpec& spec, LiftedState initial)
    : model_(model), spec_(spec), informed_(spec.proposal.is_informed()), s_(std::move(initial)) {
  if (!supports(spec))
    throw std::invalid_argument("IsingChain: sampler " + spec.name() + "/" + spec.proposal.name() +
                                " is not supported");
  const std::size_t n = model.dimension();
  if (s_.state.size() != n) throw std::invalid_argument("IsingChain: state dimension mismatch");
  sums_.resize(n);
  for (std::size_t i = 0; i < n; ++i) sums_[i] = model.neighbor_sum(s_.state, i);
  while (leaves_ < n) leaves_ <<= 1;
  for (std::size_t c = 0; c < 2; ++c) {
    weight_[c].assign(2 * leaves_, 0.0);
    count_[c].assign(2 * leaves_, 0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = channel_of(i);
    count_[c][leaves_ + i] = 1;
    if (informed_) weight_[c][leaves_ + i] = simd::barker_weight(log_ratio(i));
  }
  for (std::size_t node = leaves_ - 1; node >= 1; --node)
    for (std::size_t c = 0; c < 2; ++c) {
      weight_[c][node] = weight_[c][2 * node] + weight_[c][2 * node + 1];
      count_[c][node] = count_[c][2 * node] + count_[c][2 * node + 1];
    }
}

double IsingChain::log_ratio(std::size_t site) const {
  return (-2.0 * static_cast<double>(s_.state[site])) *
         model_.local_field(model_.alpha()[site], sums_[site]);
}

void IsingChain::refresh_leaf(std::size_t site) {
  const std::size_t c = channel_of(site);
  std::size_t node = leaves_ + site;
  count_[c][node] = 1;
  count_[1 - c][node] = 0;
  if (informed_) {
    weight_[c][node] = simd::barker_weight(log_ratio(site));
    weight_[1 - c][node] = 0.0;
  }
  for (node >>= 1; node >= 1; node >>= 1)
    for (std::size_t k = 0; k < 2; ++k) {
      count_[k][node] = count_[k][2 * node] + count_[k][2 * node + 1];
      if (informed_) weight_[k][node] = weight_[k][2 * node] + weight_[k][2 * node + 1];
    }
}

void IsingChain::apply_flip(std::size_t site) {
  s_.state.flip(site);
  const int delta = 2 * s_.state[site];
  for (const auto j : model_.neighbors(site))
    if (j != IsingModel::kNoSite) sums_[j] += delta;
  refresh_leaf(site);
  if (informed_)
    for (const auto j : model_.neighbors(site))
      if (j != IsingModel::kNoSite) refresh_leaf(j);
}

std::size_t IsingChain::sample_weighted(double u, bool both, std::size_t c) const {
  const auto at = [&](std::size_t node) {
    return both ? weight_[0][node] + weight_[1][node] : weight_[c][node];
  };
  double target = u * at(1);
  std::size_t node = 1;
  while (node < leaves_) {
    const double left = at(2 * node);
    if (target < left) {
      node = 2 * node;
    } else {
      target -= left;
      node = 2 * node + 1;
    }
  }
  std::size_t i = node - leaves_;
  const std::size_t n = model_.dimension();
  // Rounding can land on an empty leaf; take the nearest positive one below.
  if (i >= n || !(at(leaves_ + i) > 0)) {
    std::size_t j = std::min(i, n - 1) + 1;
    while (j > 0 && !(at(leaves_ + j - 1) > 0)) --j;
    if (j > 0) return j - 1;
    j = std::min(i, n - 1);
    while (j < n && !(at(leaves_ + j) > 0)) ++j;
    i = j;
  }
  return i;
}

std::size_t IsingChain::select_kth(std::size_t k, std::size_t c) const {
  std::size_t node = 1;
  while (node < leaves_) {
    const std::size_t left = count_[c][2 * node];
    if (k < left) {
      node = 2 * node;
    } else {
      k -= left;
      node = 2 * node + 1;
    }
  }
  return node - leaves_;
}

IsingChain::Step IsingChain::attempt_directed(Direction dir, Rng& rng) {
  const std::size_t c = channel_for(dir);
  const std::size_t m = channel_count(c);
  if (!informed_) {
    if (m == 0) return {};
    const auto j = std::min(m - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m)));
    const std::size_t i = select_kth(j, c);
    const double delta = log_ratio(i);
    ++counters_.ratio_evals;
    const double log_fwd = -std::log(static_cast<double>(m));
    const double log_rev = -std::log(static_cast<double>(channel_count(1 - c) + 1));
    const double a = acceptance_probability(log_acceptance_ratio(delta, log_rev, log_fwd));
    if (uniform01(rng) < a) {
      apply_flip(i);
      return {true, false};
    }
    return {};
  }

  ++counters_.normalizers;
  if (m == 0) return {};
  counters_.ratio_evals += m;
  const double z = channel_sum(c);
  if (!(z > 0)) return {};
  const std::size_t i = sample_weighted(uniform01(rng), false, c);
  const double delta = log_ratio(i);
  const double log_fwd = log_balance(BalancingFunction::barker, delta) - std::log(z);
  apply_flip(i);
  ++counters_.normalizers;
  counters_.ratio_evals += channel_count(1 - c);
  const double log_rev = log_balance(BalancingFunction::barker, log_ratio(i)) - std::log(channel_sum(1 - c));
  const double a = acceptance_probability(log_acceptance_ratio(delta, log_rev, log_fwd));
  if (uniform01(rng) < a) return {true, false};
  apply_flip(i);
  return {};
}

IsingChain::Step IsingChain::step_mh(Rng& rng) {
  const std::size_t n = model_.dimension();
  if (!informed_) {
    const auto i = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    const double delta = log_ratio(i);
    ++counters_.ratio_evals;
    const double lq = -std::log(static_cast<double>(n));
    const double a = acceptance_probability(log_acceptance_ratio(delta, lq, lq));
    if (uniform01(rng) < a) {
      apply_flip(i);
      return {true, false};
    }
    return {};
  }
  ++counters_.normalizers;
  counters_.ratio_evals += n;
  const double z = weight_[0][1] + weight_[1][1];
  const std::size_t i = sample_weighted(uniform01(rng), true, 0);
  const double delta = log_ratio(i);
  const double log_fwd = log_balance(BalancingFunction::barker, delta) - std::log(z);
  apply_flip(i);
  ++counters_.normalizers;
  counters_.ratio_evals += n;
  const double log_rev = log_balance(BalancingFunction::barker, log_ratio(i)) -
                         std::log(weight_[0][1] + weight_[1][1]);
  const double a = acceptance_probability(log_acceptance_ratio(delta, log_rev, log_fwd));
  if (uniform01(rng) < a) return {true, false};
  apply_flip(i);
  return {};
}

IsingChain::Step IsingChain::step(Rng& rng) {
  switch (spec_.algorithm) {
    case Algorithm::mh:
      return step_mh(rng);
    case Algorithm::lifted1: {
      Step st = attempt_directed(s_.direction, rng);
      if (!st.accepted) {
        s_.direction = -s_.direction;
        st.direction_flipped = true;
      }
      return st;
    }
    case Algorithm::revmix:
      return attempt_directed(random_direction(rng), rng);
    case Algorithm::lifted2:
      break;
  }
  throw std::logic_error("IsingChain: unsupported algorithm");
}

TraceSummary run_ising_chain(const IsingModel& model, const SamplerSpec& spec,
                             const RunOptions& options) {
  if (options.iters <= options.burnin)
    throw std::invalid_argument("run_ising_chain: iters must exceed burnin");
  Rng rng(options.seed);
  const auto start = std::chrono::steady_clock::now();
  IsingChain chain(model, spec, initial_state(model, options, rng));

  TraceSummary out;
  out.trace.reserve(options.iters - options.burnin);
  for (std::uint64_t t = 0; t < options.iters; ++t) {
    if (t == options.burnin) chain.counters() = {};
    const auto st = chain.step(rng);
    if (t >= options.burnin) {
      ++out.steps;
      out.accepted += st.accepted;
      out.direction_flips += st.direction_flipped;
      out.trace.push_back(chain.magnetisation());
    }
  }
  out.counters = chain.counters();
  out.final_state = chain.state();
  if (options.compute_ess && out.trace.size() >= 10) out.ess = ess(out.trace);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace lifted
