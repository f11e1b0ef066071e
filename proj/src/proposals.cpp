#include "lifted/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lifted/simd/kernels.hpp"

namespace lifted {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double balance(BalancingFunction g, double t) {
  if (!(t > 0)) throw std::domain_error("balance: argument must be > 0");
  switch (g) {
    case BalancingFunction::barker:
      return std::isinf(t) ? 1.0 : t / (1.0 + t);
    case BalancingFunction::sqrt:
      return std::sqrt(t);
  }
  return 0.0;
}

double log_balance(BalancingFunction g, double delta) {
  if (g == BalancingFunction::sqrt) return 0.5 * delta;
  // log(t / (1 + t)) = -log1p(1/t)
  if (delta < 0) return delta - std::log1p(std::exp(delta));
  return -std::log1p(std::exp(-delta));
}

std::string ProposalSpec::name() const {
  if (kind == Kind::uniform) return "uniform";
  return g == BalancingFunction::barker ? "barker" : "sqrt";
}

std::optional<ProposalSpec> parse_proposal(const std::string& name) {
  if (name == "uniform") return ProposalSpec::uniform();
  if (name == "barker" || name == "informed") return ProposalSpec::informed(BalancingFunction::barker);
  if (name == "sqrt") return ProposalSpec::informed(BalancingFunction::sqrt);
  return std::nullopt;
}

double NeighborhoodWeights::log_normalizer() const {
  if (empty()) return kNegInf;
  return std::log(sum) + log_scale;
}

std::optional<std::size_t> NeighborhoodWeights::find(std::size_t site) const {
  auto it = std::lower_bound(sites.begin(), sites.end(), site);
  if (it == sites.end() || *it != site) return std::nullopt;
  return static_cast<std::size_t>(it - sites.begin());
}

std::size_t NeighborhoodWeights::sample(double u) const {
  if (empty()) throw std::logic_error("NeighborhoodWeights::sample: empty neighbourhood");
  const double target = u * sum;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] > 0)) continue;
    acc += weights[k];
    last = k;
    if (target < acc) return k;
  }
  return last;
}

double acceptance_probability(double log_a) {
  if (std::isnan(log_a)) return 0.0;
  return log_a >= 0 ? 1.0 : std::exp(log_a);
}

// ---------------------------------------------------------------------------

void ProposalKernel::fill(const TargetModel& target, const BinaryState& x,
                          NeighborhoodWeights& out, EvalCounters& counters) const {
  const std::size_t m = out.sites.size();
  out.weights.resize(m);
  out.log_scale = 0.0;
  if (!spec_.is_informed()) {
    out.log_ratios.clear();
    std::fill(out.weights.begin(), out.weights.end(), 1.0);
    out.sum = static_cast<double>(m);
    return;
  }
  out.log_ratios.resize(m);
  ++counters.normalizers;
  if (m == 0) {
    out.sum = 0.0;
    return;
  }
  target.log_ratios(x, out.sites, out.log_ratios);
  counters.ratio_evals += m;
  const auto& k = simd::kernels();
  if (spec_.g == BalancingFunction::barker) {
    out.sum = k.barker_weights(out.log_ratios, out.weights);
  } else {
    const double shift = *std::max_element(out.log_ratios.begin(), out.log_ratios.end());
    if (!std::isfinite(shift)) throw std::domain_error("ProposalKernel: current state has zero mass");
    out.log_scale = 0.5 * shift;
    out.sum = k.sqrt_weights(out.log_ratios, shift, out.weights);
  }
}

void ProposalKernel::directed_weights(const TargetModel& target, const BinaryState& x,
                                      Direction dir, NeighborhoodWeights& out,
                                      EvalCounters& counters) const {
  out.sites.clear();
  const int from = -value(dir);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] == from) out.sites.push_back(i);
  fill(target, x, out, counters);
}

void ProposalKernel::undirected_weights(const TargetModel& target, const BinaryState& x,
                                        NeighborhoodWeights& out, EvalCounters& counters) const {
  out.sites.resize(x.size());
  std::iota(out.sites.begin(), out.sites.end(), std::size_t{0});
  fill(target, x, out, counters);
}

double ProposalKernel::log_q(const NeighborhoodWeights& w, std::size_t k) const {
  if (!spec_.is_informed()) return -std::log(w.sum);
  return log_balance(spec_.g, w.log_ratios[k]) - w.log_normalizer();
}

std::optional<ProposalDraw> ProposalKernel::sample_directed(const TargetModel& target,
                                                            const BinaryState& x, Direction dir,
                                                            Rng& rng,
                                                            EvalCounters& counters) const {
  if (!spec_.is_informed()) {
    const std::size_t m = directed_size(x, dir);
    if (m == 0) return std::nullopt;
    const auto j = std::min(m - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m)));
    const int from = -value(dir);
    std::size_t seen = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] == from && seen++ == j) return ProposalDraw{i, -std::log(static_cast<double>(m)), std::nullopt};
  }
  thread_local NeighborhoodWeights w;
  directed_weights(target, x, dir, w, counters);
  if (w.empty()) return std::nullopt;
  const std::size_t k = w.sample(uniform01(rng));
  return ProposalDraw{w.sites[k], log_q(w, k), w.log_ratios[k]};
}

std::optional<ProposalDraw> ProposalKernel::sample_undirected(const TargetModel& target,
                                                              const BinaryState& x, Rng& rng,
                                                              EvalCounters& counters) const {
  const std::size_t n = x.size();
  if (!spec_.is_informed()) {
    const auto i = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    return ProposalDraw{i, -std::log(static_cast<double>(n)), std::nullopt};
  }
  thread_local NeighborhoodWeights w;
  undirected_weights(target, x, w, counters);
  if (w.empty()) return std::nullopt;
  const std::size_t k = w.sample(uniform01(rng));
  return ProposalDraw{w.sites[k], log_q(w, k), w.log_ratios[k]};
}

double ProposalKernel::log_q_directed(const TargetModel& target, const BinaryState& x,
                                      Direction dir, std::size_t site,
                                      EvalCounters& counters) const {
  if (site >= x.size() || !moves_in(x, site, dir)) return kNegInf;
  if (!spec_.is_informed()) return -std::log(static_cast<double>(directed_size(x, dir)));
  thread_local NeighborhoodWeights w;
  directed_weights(target, x, dir, w, counters);
  if (w.empty()) return kNegInf;
  return log_q(w, *w.find(site));
}

double ProposalKernel::log_q_undirected(const TargetModel& target, const BinaryState& x,
                                        std::size_t site, EvalCounters& counters) const {
  if (site >= x.size()) return kNegInf;
  if (!spec_.is_informed()) return -std::log(static_cast<double>(x.size()));
  thread_local NeighborhoodWeights w;
  undirected_weights(target, x, w, counters);
  if (w.empty()) return kNegInf;
  return log_q(w, site);
}

double ProposalKernel::log_normalizer_directed(const TargetModel& target, const BinaryState& x,
                                               Direction dir, EvalCounters& counters) const {
  if (!spec_.is_informed()) {
    const auto m = directed_size(x, dir);
    return m == 0 ? kNegInf : std::log(static_cast<double>(m));
  }
  thread_local NeighborhoodWeights w;
  directed_weights(target, x, dir, w, counters);
  return w.log_normalizer();
}

double ProposalKernel::log_normalizer_undirected(const TargetModel& target, const BinaryState& x,
                                                 EvalCounters& counters) const {
  if (!spec_.is_informed()) return std::log(static_cast<double>(x.size()));
  thread_local NeighborhoodWeights w;
  undirected_weights(target, x, w, counters);
  return w.log_normalizer();
}

}  // namespace lifted
