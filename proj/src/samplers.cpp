#include "lifted/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lifted {

RhoPolicy RhoPolicy::interpolated(std::function<double(const BinaryState&)> s, std::string label) {
  auto fn = [s = std::move(s)](const BinaryState& x, Direction, double tf, double tb) {
    const double frac = std::clamp(s(x), 0.0, 1.0);
    return std::max(0.0, tb - tf) + frac * (1.0 - std::max(tf, tb));
  };
  return custom(std::move(fn), std::move(label));
}

double RhoPolicy::evaluate(const BinaryState& x, Direction dir, double t_forward,
                           double t_backward) const {
  switch (kind) {
    case Kind::optimal:
      return std::max(0.0, t_backward - t_forward);
    case Kind::worst:
      return 1.0 - t_forward;
    case Kind::custom:
      return custom_fn(x, dir, t_forward, t_backward);
  }
  return 0.0;
}

bool RhoPolicy::needs_backward(double t_forward) const {
  switch (kind) {
    case Kind::optimal:
      return t_forward < 1.0;
    case Kind::worst:
      return false;
    case Kind::custom:
      return true;
  }
  return true;
}

std::string SamplerSpec::name() const {
  switch (algorithm) {
    case Algorithm::mh:
      return "mh";
    case Algorithm::lifted1:
      return "lifted1";
    case Algorithm::lifted2:
      return "lifted2-" + rho.label;
    case Algorithm::revmix:
      return "revmix";
  }
  return "?";
}

std::optional<SamplerSpec> parse_sampler(const std::string& name, ProposalSpec proposal) {
  SamplerSpec s;
  s.proposal = proposal;
  if (name == "mh") {
    s.algorithm = Algorithm::mh;
  } else if (name == "lifted1") {
    s.algorithm = Algorithm::lifted1;
  } else if (name == "lifted2" || name == "lifted2-opt") {
    s.algorithm = Algorithm::lifted2;
    s.rho = RhoPolicy::optimal();
  } else if (name == "lifted2-worst") {
    s.algorithm = Algorithm::lifted2;
    s.rho = RhoPolicy::worst();
  } else if (name == "revmix") {
    s.algorithm = Algorithm::revmix;
  } else {
    return std::nullopt;
  }
  return s;
}

// ---------------------------------------------------------------------------

AcceptanceProfile acceptance_profile(const TargetModel& target, const ProposalKernel& kernel,
                                     const BinaryState& x, Direction dir,
                                     EvalCounters& counters) {
  NeighborhoodWeights w;
  kernel.directed_weights(target, x, dir, w, counters);
  AcceptanceProfile p;
  p.sites = w.sites;
  const std::size_t m = w.size();
  p.q.resize(m);
  p.alpha.resize(m);
  if (w.empty()) {
    std::fill(p.q.begin(), p.q.end(), 0.0);
    std::fill(p.alpha.begin(), p.alpha.end(), 0.0);
    return p;
  }
  if (!kernel.spec().is_informed()) {
    w.log_ratios.resize(m);
    target.log_ratios(x, w.sites, w.log_ratios);
    counters.ratio_evals += m;
  }
  BinaryState y = x;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = w.sites[k];
    const double log_fwd = kernel.log_q(w, k);
    y.flip(i);
    const double log_rev = kernel.log_q_directed(target, y, -dir, i, counters);
    y.flip(i);
    p.q[k] = std::exp(log_fwd);
    p.alpha[k] = acceptance_probability(log_acceptance_ratio(w.log_ratios[k], log_rev, log_fwd));
    p.total += p.q[k] * p.alpha[k];
  }
  return p;
}

namespace {

struct Attempt {
  bool proposed = false;
  bool accept = false;
  std::size_t site = 0;
};

// One directed Metropolis attempt from x in direction dir.
Attempt directed_attempt(const TargetModel& target, const ProposalKernel& kernel,
                         const BinaryState& x, Direction dir, Rng& rng, EvalCounters& counters) {
  const auto draw = kernel.sample_directed(target, x, dir, rng, counters);
  if (!draw) return {};
  double delta;
  if (draw->log_ratio) {
    delta = *draw->log_ratio;
  } else {
    delta = target.log_ratio(x, draw->site);
    ++counters.ratio_evals;
  }
  thread_local BinaryState y;
  y = x;
  y.flip(draw->site);
  const double log_rev = kernel.log_q_directed(target, y, -dir, draw->site, counters);
  const double a = acceptance_probability(log_acceptance_ratio(delta, log_rev, draw->log_q));
  return {true, uniform01(rng) < a, draw->site};
}

}  // namespace

StepOutcome mh_step(const TargetModel& target, const ProposalKernel& kernel,
                    const LiftedState& s, Rng& rng, EvalCounters& counters) {
  const BinaryState& x = s.state;
  const auto draw = kernel.sample_undirected(target, x, rng, counters);
  double a = 0.0;
  if (draw) {
    double delta;
    if (draw->log_ratio) {
      delta = *draw->log_ratio;
    } else {
      delta = target.log_ratio(x, draw->site);
      ++counters.ratio_evals;
    }
    double log_rev = draw->log_q;
    if (kernel.spec().is_informed()) {
      thread_local BinaryState y;
      y = x;
      y.flip(draw->site);
      log_rev = kernel.log_q_undirected(target, y, draw->site, counters);
    }
    a = acceptance_probability(log_acceptance_ratio(delta, log_rev, draw->log_q));
  }
  const bool accept = uniform01(rng) < a;
  StepOutcome out{s, accept, draw ? 1u : 0u, accept ? Branch::accept : Branch::flip_direction};
  if (accept) out.next.state.flip(draw->site);
  return out;
}

StepOutcome lifted1_step(const TargetModel& target, const ProposalKernel& kernel,
                         const LiftedState& s, Rng& rng, EvalCounters& counters) {
  const auto at = directed_attempt(target, kernel, s.state, s.direction, rng, counters);
  StepOutcome out{s, at.accept, at.proposed ? 1u : 0u, Branch::accept};
  if (at.accept) {
    out.next.state.flip(at.site);
  } else {
    out.next.direction = -s.direction;
    out.branch = Branch::flip_direction;
  }
  return out;
}

StepOutcome revmix_step(const TargetModel& target, const ProposalKernel& kernel,
                        const LiftedState& s, Rng& rng, EvalCounters& counters) {
  const Direction dir = random_direction(rng);
  const auto at = directed_attempt(target, kernel, s.state, dir, rng, counters);
  StepOutcome out{s, at.accept, at.proposed ? 1u : 0u,
                  at.accept ? Branch::accept : Branch::flip_direction};
  if (at.accept) out.next.state.flip(at.site);
  return out;
}

StepOutcome lifted2_step(const TargetModel& target, const ProposalKernel& kernel,
                         const RhoPolicy& rho, const LiftedState& s, Rng& rng,
                         EvalCounters& counters) {
  const BinaryState& x = s.state;
  const Direction dir = s.direction;
  const auto fwd = acceptance_profile(target, kernel, x, dir, counters);
  const double t_fwd = fwd.total;
  const double u = uniform01(rng);

  StepOutcome out{s, false, fwd.sites.size(), Branch::accept};
  if (u < t_fwd) {
    double acc = 0.0;
    std::size_t pick = fwd.sites.size();
    for (std::size_t k = 0; k < fwd.sites.size(); ++k) {
      const double mass = fwd.q[k] * fwd.alpha[k];
      if (!(mass > 0)) continue;
      acc += mass;
      pick = k;
      if (u < acc) break;
    }
    out.accepted = true;
    out.next.state.flip(fwd.sites[pick]);
    return out;
  }

  double t_bwd = std::numeric_limits<double>::quiet_NaN();
  if (rho.check || rho.needs_backward(t_fwd)) t_bwd = acceptance_mass(target, kernel, x, -dir, counters);
  const double r = rho.evaluate(x, dir, t_fwd, t_bwd);
  if (rho.check) {
    const double r_back = rho.evaluate(x, -dir, t_bwd, t_fwd);
    constexpr double tol = 1e-12;
    if (!(r >= -tol && r <= 1.0 - t_fwd + tol) || std::abs((r - r_back) - (t_bwd - t_fwd)) > tol)
      throw std::logic_error("lifted2_step: rho policy '" + rho.label + "' violates its conditions at " +
                             x.to_string());
  }
  if (u < t_fwd + r) {
    out.next.direction = -dir;
    out.branch = Branch::flip_direction;
  } else {
    out.branch = Branch::keep_direction;
  }
  return out;
}

StepOutcome step(const SamplerSpec& spec, const TargetModel& target, const LiftedState& s,
                 Rng& rng, EvalCounters& counters) {
  const ProposalKernel kernel(spec.proposal);
  switch (spec.algorithm) {
    case Algorithm::mh:
      return mh_step(target, kernel, s, rng, counters);
    case Algorithm::lifted1:
      return lifted1_step(target, kernel, s, rng, counters);
    case Algorithm::lifted2:
      return lifted2_step(target, kernel, spec.rho, s, rng, counters);
    case Algorithm::revmix:
      return revmix_step(target, kernel, s, rng, counters);
  }
  throw std::logic_error("unknown algorithm");
}

// ---------------------------------------------------------------------------

LiftedState initial_state(const TargetModel& target, const RunOptions& options, Rng& rng) {
  const std::size_t n = target.dimension();
  if (options.initial) {
    if (options.initial->state.size() != n)
      throw std::invalid_argument("initial state has dimension " +
                                  std::to_string(options.initial->state.size()) + ", target has " +
                                  std::to_string(n));
    if (!std::isfinite(target.log_mass(options.initial->state)))
      throw std::invalid_argument("initial state has zero mass");
    return *options.initial;
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    LiftedState s{random_state(n, rng), random_direction(rng)};
    if (std::isfinite(target.log_mass(s.state))) return s;
  }
  throw std::invalid_argument("could not draw an initial state with positive mass");
}

TraceSummary run_chain(const SamplerSpec& spec, const TargetModel& target,
                       const Statistic& statistic, const RunOptions& options) {
  if (options.iters <= options.burnin)
    throw std::invalid_argument("run_chain: iters must exceed burnin");
  Rng rng(options.seed);
  const auto start = std::chrono::steady_clock::now();
  LiftedState s = initial_state(target, options, rng);
  const ProposalKernel kernel(spec.proposal);
  const auto stat = statistic ? statistic : Statistic(magnetisation);

  TraceSummary out;
  out.trace.reserve(options.iters - options.burnin);
  EvalCounters counters;
  for (std::uint64_t t = 0; t < options.iters; ++t) {
    if (t == options.burnin) counters = {};
    StepOutcome o;
    switch (spec.algorithm) {
      case Algorithm::mh:
        o = mh_step(target, kernel, s, rng, counters);
        break;
      case Algorithm::lifted1:
        o = lifted1_step(target, kernel, s, rng, counters);
        break;
      case Algorithm::lifted2:
        o = lifted2_step(target, kernel, spec.rho, s, rng, counters);
        break;
      case Algorithm::revmix:
        o = revmix_step(target, kernel, s, rng, counters);
        break;
    }
    if (t >= options.burnin) {
      ++out.steps;
      out.accepted += o.accepted;
      out.direction_flips += o.next.direction != s.direction;
      out.trace.push_back(stat(o.next.state));
    }
    s = std::move(o.next);
  }
  out.counters = counters;
  out.final_state = std::move(s);
  if (options.compute_ess && out.trace.size() >= 10) out.ess = ess(out.trace);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace lifted
