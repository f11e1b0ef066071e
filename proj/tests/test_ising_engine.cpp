#include <doctest.h>

#include "lifted/ising_engine.hpp"

using namespace lifted;

namespace {

std::vector<SamplerSpec> engine_specs() {
  std::vector<SamplerSpec> out;
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()})
    for (auto a : {Algorithm::mh, Algorithm::lifted1, Algorithm::revmix}) out.push_back({a, p, {}});
  return out;
}

IsingModel lattice(std::size_t eta, double lambda, bool periodic, std::uint64_t seed) {
  FieldSpec f;
  f.mu = 1.0;
  f.ell = eta / 2;
  f.seed = seed;
  return IsingModel(eta, lambda, build_field(f, eta), periodic);
}

}  // namespace

TEST_SUITE("ising_engine") {

TEST_CASE("supported samplers") {
  for (const auto& s : engine_specs()) CHECK(IsingChain::supports(s));
  CHECK(!IsingChain::supports({Algorithm::lifted2, ProposalSpec::informed(), RhoPolicy::optimal()}));
  CHECK(!IsingChain::supports({Algorithm::mh, ProposalSpec::informed(BalancingFunction::sqrt), {}}));
  const auto m = lattice(3, 0.5, false, 1);
  CHECK_THROWS_AS(IsingChain(m, {Algorithm::lifted2, ProposalSpec::uniform(), RhoPolicy::worst()},
                             LiftedState{BinaryState(9), Direction::up}),
                  std::invalid_argument);
  CHECK_THROWS_AS(IsingChain(m, engine_specs()[0], LiftedState{BinaryState(8), Direction::up}),
                  std::invalid_argument);
}

TEST_CASE("engine follows the generic trajectory step by step") {
  for (bool periodic : {false, true})
    for (const auto& spec : engine_specs()) {
      CAPTURE(periodic);
      CAPTURE(spec.name());
      CAPTURE(spec.proposal.name());
      const auto m = lattice(4, 0.5, periodic, 3);
      Rng init(11);
      const LiftedState start{random_state(16, init), Direction::up};
      IsingChain chain(m, spec, start);
      LiftedState s = start;
      EvalCounters counters;
      Rng a(5), b(5);
      bool same = true;
      for (int t = 0; t < 5000 && same; ++t) {
        const auto out = step(spec, m, s, a, counters);
        const auto fast = chain.step(b);
        same = out.next == chain.state() && out.accepted == fast.accepted &&
               (out.next.direction != s.direction) == fast.direction_flipped;
        s = out.next;
      }
      CHECK(same);
      CHECK(counters.ratio_evals == chain.counters().ratio_evals);
      CHECK(counters.normalizers == chain.counters().normalizers);
      CHECK(a() == b());
    }
}

TEST_CASE("boundary states and zero coupling") {
  // all spins equal sits on the boundary of one direction
  const auto m = lattice(4, 0.0, false, 4);
  for (const auto& spec : engine_specs()) {
    const LiftedState start{BinaryState(16, 1), Direction::up};
    IsingChain chain(m, spec, start);
    LiftedState s = start;
    EvalCounters counters;
    Rng a(9), b(9);
    for (int t = 0; t < 500; ++t) {
      s = step(spec, m, s, a, counters).next;
      chain.step(b);
    }
    CHECK(s == chain.state());
    CHECK(counters.ratio_evals == chain.counters().ratio_evals);
  }
}

TEST_CASE("run_ising_chain reproduces run_chain") {
  const auto m = lattice(8, 0.5, false, 7);
  for (const auto& spec : engine_specs()) {
    RunOptions o;
    o.iters = 20000;
    o.burnin = 2000;
    o.seed = 13;
    const auto slow = run_chain(spec, m, magnetisation, o);
    const auto fast = run_ising_chain(m, spec, o);
    CAPTURE(spec.name());
    CHECK(slow.trace == fast.trace);
    CHECK(slow.accepted == fast.accepted);
    CHECK(slow.direction_flips == fast.direction_flips);
    CHECK(slow.counters.ratio_evals == fast.counters.ratio_evals);
    CHECK(slow.counters.normalizers == fast.counters.normalizers);
    CHECK(slow.ess == doctest::Approx(fast.ess).epsilon(1e-12));
    CHECK(slow.final_state == fast.final_state);
  }
}

TEST_CASE("magnetisation tracks the state") {
  const auto m = lattice(5, 0.3, true, 2);
  IsingChain chain(m, engine_specs()[4], LiftedState{BinaryState(25, -1), Direction::up});
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    chain.step(rng);
    CHECK(chain.magnetisation() == magnetisation(chain.state().state));
  }
}

}
