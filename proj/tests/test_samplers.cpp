#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lifted/exact_oracle.hpp"
#include "lifted/samplers.hpp"
#include "lifted/validation.hpp"

#include <map>

using namespace lifted;

namespace {

const TabularTarget& flat(std::size_t n) {
  static std::map<std::size_t, TabularTarget> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, TabularTarget(std::vector<double>(std::size_t{1} << n, 1.0))).first;
  return it->second;
}

SamplerSpec spec(Algorithm a, ProposalSpec p, RhoPolicy rho = {}) { return {a, p, std::move(rho)}; }

}  // namespace

TEST_SUITE("samplers") {

TEST_CASE("MH on a flat target always accepts") {
  const ProposalKernel k(ProposalSpec::uniform());
  Rng rng(1);
  EvalCounters c;
  LiftedState s{BinaryState(5), Direction::up};
  for (int t = 0; t < 1000; ++t) {
    const auto o = mh_step(flat(5), k, s, rng, c);
    CHECK(o.accepted);
    CHECK(o.next.direction == Direction::up);
    s = o.next;
  }
}

TEST_CASE("zero-mass proposals are never accepted") {
  const TabularTarget t(std::vector<double>{1, 0, 0, 0});
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
    const ProposalKernel k(p);
    Rng rng(2);
    EvalCounters c;
    const LiftedState s{BinaryState(2), Direction::up};
    for (int i = 0; i < 200; ++i) {
      CHECK(!mh_step(t, k, s, rng, c).accepted);
      CHECK(!lifted1_step(t, k, s, rng, c).accepted);
      CHECK(!revmix_step(t, k, s, rng, c).accepted);
    }
  }
}

TEST_CASE("lifted1 examples") {
  const ProposalKernel k(ProposalSpec::uniform());
  EvalCounters c;
  Rng rng(3);
  // n_{-1}(x) = 2, n_{+1}(y) = 1: alpha = 1 ∧ 2/1
  for (int i = 0; i < 1000; ++i) {
    const auto o = lifted1_step(flat(2), k, {BinaryState(2), Direction::up}, rng, c);
    CHECK(o.accepted);
    CHECK(o.branch == Branch::accept);
    CHECK(o.next.direction == Direction::up);
  }
  // boundary: flips direction without touching the generator
  const Rng before = rng;
  const auto o = lifted1_step(flat(2), k, {BinaryState(2, 1), Direction::up}, rng, c);
  CHECK(!o.accepted);
  CHECK(o.next == LiftedState{BinaryState(2, 1), Direction::down});
  CHECK(rng == before);
}

TEST_CASE("acceptance mass examples") {
  EvalCounters c;
  const ProposalKernel u(ProposalSpec::uniform());
  CHECK(acceptance_mass(flat(2), u, BinaryState(2), Direction::up, c) == 1.0);
  CHECK(acceptance_mass(flat(2), u, BinaryState(2, 1), Direction::up, c) == 0.0);
  // one down-neighbour, whose up-neighbourhood has three sites: 1 ∧ 1/3
  CHECK(acceptance_mass(flat(3), u, BinaryState::from_spins({1, -1, -1}), Direction::down, c) ==
        doctest::Approx(1.0 / 3.0));
}

TEST_CASE("acceptance mass matches the lifted1 acceptance frequency") {
  const auto t = random_tabular_target(7, 77);
  Rng rng(5);
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
    const ProposalKernel k(p);
    EvalCounters c;
    const LiftedState s{BinaryState::from_spins({1, -1, -1, 1, -1, 1, -1}), Direction::up};
    const double T = acceptance_mass(t, k, s.state, s.direction, c);
    const int N = 100000;
    int acc = 0;
    for (int i = 0; i < N; ++i) acc += lifted1_step(t, k, s, rng, c).accepted;
    CHECK(std::abs(acc - N * T) < 4 * std::sqrt(N * T * (1 - T)));
  }
}

TEST_CASE("lifted2 branches") {
  const auto t = random_tabular_target(6, 12);
  Rng rng(6);
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
    const ProposalKernel k(p);
    EvalCounters c;
    SUBCASE("optimal rho never flips where T_{-dir} <= T_dir") {
      int tested = 0;
      for (std::uint64_t m = 0; m < 64; ++m)
        for (auto dir : {Direction::up, Direction::down}) {
          const auto x = BinaryState::from_index(m, 6);
          if (acceptance_mass(t, k, x, -dir, c) > acceptance_mass(t, k, x, dir, c)) continue;
          ++tested;
          for (int i = 0; i < 300; ++i)
            CHECK(lifted2_step(t, k, RhoPolicy::optimal(), {x, dir}, rng, c).branch != Branch::flip_direction);
        }
      CHECK(tested > 0);
    }
    SUBCASE("worst rho never keeps the direction on rejection") {
      LiftedState s{BinaryState(6), Direction::up};
      for (int i = 0; i < 20000; ++i) {
        const auto o = lifted2_step(t, k, RhoPolicy::worst(), s, rng, c);
        CHECK(o.branch != Branch::keep_direction);
        s = o.next;
      }
    }
  }
  SUBCASE("flat interior state: always accepted") {
    const ProposalKernel k(ProposalSpec::uniform());
    EvalCounters c;
    for (int i = 0; i < 1000; ++i)
      CHECK(lifted2_step(flat(2), k, RhoPolicy::optimal(), {BinaryState(2), Direction::up}, rng, c).branch ==
            Branch::accept);
  }
}

TEST_CASE("rho checks") {
  const auto t = random_tabular_target(5, 3);
  const ProposalKernel k(ProposalSpec::informed());
  EvalCounters c;
  Rng rng(7);
  auto bad = RhoPolicy::custom([](const BinaryState&, Direction, double, double) { return 1.0; });
  bad.check = true;
  bool threw = false;
  LiftedState s{BinaryState(5), Direction::up};
  for (int i = 0; i < 200 && !threw; ++i) {
    try {
      s = lifted2_step(t, k, bad, s, rng, c).next;
    } catch (const std::logic_error&) {
      threw = true;
    }
  }
  CHECK(threw);

  // the interpolated family stays valid everywhere
  auto good = random_rho(9);
  good.check = true;
  for (std::uint64_t m = 0; m < 32; ++m)
    for (auto dir : {Direction::up, Direction::down}) {
      const auto x = BinaryState::from_index(m, 5);
      const double tf = acceptance_mass(t, k, x, dir, c), tb = acceptance_mass(t, k, x, -dir, c);
      const double r = good.evaluate(x, dir, tf, tb), rb = good.evaluate(x, -dir, tb, tf);
      CHECK(r >= -1e-15);
      CHECK(r <= 1 - tf + 1e-12);
      CHECK(std::abs((r - rb) - (tb - tf)) < 1e-12);
    }
}

TEST_CASE("revmix kernel is the half-half mixture; MH kernel is reversible") {
  const auto t = random_tabular_target(5, 31);
  const auto e = enumerate(t, false);
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
    const auto mix = build_kernel(spec(Algorithm::revmix, p), t);
    Eigen::MatrixXd half = 0.5 * (directed_component(p, t, Direction::up) + directed_component(p, t, Direction::down));
    half.diagonal() = (1.0 - half.rowwise().sum().array()).matrix();
    CHECK((mix.P - half).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(detailed_balance_error(mix.P, e.pmf) < 1e-12);
    CHECK(detailed_balance_error(build_kernel(spec(Algorithm::mh, p), t).P, e.pmf) < 1e-12);
  }
}

TEST_CASE("one-step law of every sampler matches its kernel row") {
  const auto t = random_tabular_target(4, 8);
  Rng rng(13);
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()})
    for (const auto& sp : battery(p, 4)) {
      const auto K = build_kernel(sp, t);
      const LiftedState s{BinaryState::from_spins({1, -1, -1, 1}), Direction::down};
      const std::size_t from = K.lifted ? lifted_index(s) : s.state.to_index();
      std::vector<double> counts(K.size(), 0.0);
      const int N = 40000;
      EvalCounters c;
      for (int i = 0; i < N; ++i) {
        const auto o = step(sp, t, s, rng, c);
        counts[K.lifted ? lifted_index(o.next) : o.next.state.to_index()] += 1;
      }
      for (std::size_t j = 0; j < K.size(); ++j) {
        const double q = K.P(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(j));
        CAPTURE(sp.name());
        CHECK(std::abs(counts[j] - N * q) <= 4.5 * std::sqrt(N * q * (1 - q)) + 1e-9);
      }
    }
}

TEST_CASE("run_chain contract") {
  const auto t = random_tabular_target(6, 2);
  RunOptions o;
  o.iters = 3000;
  o.burnin = 300;
  o.seed = 4;
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()})
    for (const auto& sp : battery(p, 1)) {
      const auto a = run_chain(sp, t, magnetisation, o);
      const auto b = run_chain(sp, t, magnetisation, o);
      CHECK(a.trace == b.trace);
      CHECK(a.trace.size() == 2700);
      CHECK(a.steps == 2700);
      CHECK(a.accept_rate() == static_cast<double>(a.accepted) / static_cast<double>(a.steps));
      CHECK(a.accept_rate() >= 0);
      CHECK(a.accept_rate() <= 1);
      CHECK(a.flip_rate() <= 1);
      if (sp.algorithm == Algorithm::mh || sp.algorithm == Algorithm::revmix) CHECK(a.direction_flips == 0);
      auto o2 = o;
      o2.seed = 5;
      CHECK(run_chain(sp, t, magnetisation, o2).trace != a.trace);
      const auto constant = run_chain(sp, t, [](const BinaryState&) { return 2.0; }, o);
      CHECK(constant.ess == 2700.0);
    }
  o.burnin = o.iters;
  CHECK_THROWS_AS(run_chain(battery(ProposalSpec::uniform(), 1)[0], t, magnetisation, o), std::invalid_argument);
}

TEST_CASE("informed cost parity: two normalizers per iteration") {
  std::vector<double> alpha(16);
  Rng rng(1);
  for (auto& a : alpha) a = -1 + 2 * uniform01(rng);
  const IsingModel m(4, 0.5, alpha);
  for (auto a : {Algorithm::mh, Algorithm::lifted1})
    for (auto p : {ProposalSpec::informed(), ProposalSpec::uniform()}) {
      const auto sp = spec(a, p);
      LiftedState s{random_state(16, rng), Direction::up};
      EvalCounters c;
      int boundary = 0;
      for (int i = 0; i < 5000; ++i) {
        const auto before = c;
        const bool at_boundary = a == Algorithm::lifted1 && directed_size(s.state, s.direction) == 0;
        boundary += at_boundary;
        s = step(sp, m, s, rng, c).next;
        const auto normalizers = c.normalizers - before.normalizers;
        const auto evals = c.ratio_evals - before.ratio_evals;
        if (!p.is_informed()) {
          CHECK(normalizers == 0);
          CHECK(evals == (at_boundary ? 0 : 1));
        } else if (at_boundary) {
          CHECK(normalizers == 1);
          CHECK(evals == 0);
        } else {
          CHECK(normalizers == 2);
          CHECK(evals == (a == Algorithm::mh ? 32 : 16 + 1));
        }
      }
      if (a == Algorithm::lifted1) CHECK(boundary > 0);
    }
}

TEST_CASE("lifted informed chain moves persistently on the crime target") {
  const auto t = load_crime_csv(std::filesystem::path(LIFTED_DATA_DIR) / "uscrime.csv");
  RunOptions o;
  o.iters = 10000;
  o.burnin = 1000;
  o.seed = 3;
  o.initial = LiftedState{BinaryState(15, 1), Direction::down};
  const auto increment = [&](Algorithm a) {
    const auto run = run_chain(spec(a, ProposalSpec::informed()), t, model_size, o);
    double s = 0;
    for (std::size_t i = 1; i < run.trace.size(); ++i) s += std::abs(run.trace[i] - run.trace[i - 1]);
    return s / static_cast<double>(run.trace.size() - 1);
  };
  CHECK(increment(Algorithm::lifted1) > 0);
  // mean |step| is the acceptance rate for single flips, so compare the
  // lag-10 displacement instead, where persistence shows.
  const auto displacement = [&](Algorithm a) {
    const auto run = run_chain(spec(a, ProposalSpec::informed()), t, model_size, o);
    double s = 0;
    for (std::size_t i = 10; i < run.trace.size(); ++i) s += std::abs(run.trace[i] - run.trace[i - 10]);
    return s / static_cast<double>(run.trace.size() - 10);
  };
  CHECK(displacement(Algorithm::lifted1) > displacement(Algorithm::mh));
}

TEST_CASE("sampler names") {
  CHECK(parse_sampler("lifted2", ProposalSpec::uniform())->name() == "lifted2-opt");
  CHECK(parse_sampler("lifted2-worst", ProposalSpec::uniform())->name() == "lifted2-worst");
  CHECK(parse_sampler("revmix", ProposalSpec::uniform())->name() == "revmix");
  CHECK(!parse_sampler("gibbs", ProposalSpec::uniform()));
}

}
