#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "lifted/exact_oracle.hpp"
#include "lifted/transdim.hpp"

using namespace lifted;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct ToyData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

ToyData small_data() {
  ToyData d{Eigen::MatrixXd(8, 1), Eigen::VectorXd(8)};
  d.X << 0.3, -1.2, 0.8, 1.5, -0.4, 0.1, -0.9, 2.0;
  d.y << 0.5, -0.7, 1.1, 0.9, 0.2, -0.3, -1.0, 1.6;
  return d;
}

// log of the integral of likelihood * priors, by quadrature over log sigma^2
// (and beta when the covariate is included). tau2 = 1, sigma^2 ~ IG(2, 2).
double quadrature_log_marginal(const ToyData& d, bool included, double shift) {
  using boost::math::quadrature::gauss_kronrod;
  const double n = static_cast<double>(d.y.size());
  auto log_joint = [&](double beta, double var) {
    const double rss = (d.y - d.X.col(0) * beta).squaredNorm();
    double v = -0.5 * n * (kLog2Pi + std::log(var)) - rss / (2 * var);
    v += 2 * std::log(2.0) - std::lgamma(2.0) - 3 * std::log(var) - 2 / var;
    if (included) v += -0.5 * (kLog2Pi + std::log(var)) - beta * beta / (2 * var);
    return v;
  };
  auto outer = [&](double u) {
    const double var = std::exp(u);
    if (!included) return std::exp(log_joint(0.0, var) - shift) * var;
    auto inner = [&](double beta) { return std::exp(log_joint(beta, var) - shift); };
    return gauss_kronrod<double, 61>::integrate(inner, -15.0, 15.0, 15, 1e-13) * var;
  };
  return shift + std::log(gauss_kronrod<double, 61>::integrate(outer, -12.0, 8.0, 15, 1e-13));
}

class UnitRatioSwitch final : public ModelSwitchProposal {
 public:
  SwitchDraw propose(const TransDimState&, const BinaryState& to, Rng&) const override {
    return {Eigen::VectorXd::Ones(static_cast<Eigen::Index>(to.n_plus() + 1)), 0.0, 0.0};
  }
};

class KeepParams final : public WithinModelKernel {
 public:
  Eigen::VectorXd update(const BinaryState&, const Eigen::VectorXd& params, Rng&) const override {
    return params * 2.0;
  }
};

// Chains started from the exact joint law of (model, sigma^2, direction,
// weight), advanced `steps` times; bins model x sigma^2 quartile x direction
// should stay uniform within each model.
struct ChiSquare {
  double p_value;
  double up_fraction;
  double up_sd;
};

template <class Step>
ChiSquare stationarity_chi2(const ConjugateToy& toy, double log_sd, std::size_t chains, int steps, Step step,
                            std::uint64_t seed) {
  const std::size_t p = toy.dimension();
  const std::size_t models = std::size_t{1} << p;
  const auto e = enumerate(toy.model_target(), false);
  std::vector<double> pmf(e.pmf.data(), e.pmf.data() + e.pmf.size());
  std::vector<std::array<double, 3>> cut(models);
  for (std::size_t m = 0; m < models; ++m) {
    const auto post = toy.posterior(BinaryState::from_index(m, p));
    for (int k = 1; k <= 3; ++k) cut[m][k - 1] = post.b / boost::math::gamma_q_inv(post.a, k / 4.0);
  }

  Rng rng(seed);
  std::discrete_distribution<std::size_t> pick(pmf.begin(), pmf.end());
  std::normal_distribution<double> normal;
  std::vector<double> counts(models * 8, 0.0);
  double up = 0;
  for (std::size_t c = 0; c < chains; ++c) {
    TransDimState s;
    s.model = BinaryState::from_index(pick(rng), p);
    s.params = toy.sample_conditional(s.model, rng);
    s.direction = random_direction(rng);
    s.log_weight = 0.5 * log_sd * log_sd + log_sd * normal(rng);
    for (int t = 0; t < steps; ++t) s = step(s, rng).next;
    const double var = s.params[s.params.size() - 1];
    int q = 0;
    while (q < 3 && var > cut[s.model.to_index()][q]) ++q;
    counts[s.model.to_index() * 8 + q * 2 + (s.direction == Direction::up)] += 1;
    up += s.direction == Direction::up;
  }
  double chi2 = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double expected = static_cast<double>(chains) * pmf[b / 8] / 8;
    chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return {boost::math::cdf(boost::math::complement(dist, chi2)), up / static_cast<double>(chains),
          0.5 / std::sqrt(static_cast<double>(chains))};
}

}  // namespace

TEST_SUITE("transdim") {

TEST_CASE("conjugate marginal agrees with quadrature") {
  const auto d = small_data();
  const ConjugateToy toy(d.X, d.y);
  for (bool inc : {false, true}) {
    const auto x = BinaryState::from_spins({inc ? 1 : -1});
    const double closed = toy.log_marginal(x);
    const double quad = quadrature_log_marginal(d, inc, closed);
    CHECK(std::abs(closed - quad) < 1e-8);
    CHECK(std::abs(toy.log_marginal_bayes_identity(x) - quad) < 1e-8);
  }
}

TEST_CASE("Bayes identity matches the closed form on every model") {
  for (std::size_t p = 1; p <= 5; ++p) {
    const auto toy = ConjugateToy::generate(p, 40, 10 + p);
    for (std::uint64_t m = 0; m < (1u << p); ++m) {
      const auto x = BinaryState::from_index(m, p);
      CHECK(std::abs(toy.log_marginal(x) - toy.log_marginal_bayes_identity(x)) < 1e-10);
    }
    const auto e = enumerate(toy.model_target(), false);
    CHECK(std::abs(e.pmf.sum() - 1) < 1e-12);
  }
}

TEST_CASE("conditional draws have the posterior moments") {
  const auto toy = ConjugateToy::generate(3, 50, 2);
  const auto x = BinaryState::from_spins({1, -1, 1});
  const auto post = toy.posterior(x);
  Rng rng(3);
  const int N = 200000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < N; ++i) mean += toy.sample_conditional(x, rng) / N;
  CHECK(mean[0] == doctest::Approx(post.mean[0]).epsilon(0.01));
  CHECK(mean[1] == doctest::Approx(post.mean[1]).epsilon(0.02));
  CHECK(mean[2] == doctest::Approx(post.b / (post.a - 1)).epsilon(0.01));
}

TEST_CASE("directed model proposal contract") {
  const auto toy = ConjugateToy::generate(3, 30, 4);
  const auto target = toy.model_target();
  CHECK_THROWS_AS(DirectedModelProposal(ProposalSpec::uniform(), nullptr, 0.5, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(DirectedModelProposal(ProposalSpec::uniform(), nullptr, 1.5, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(DirectedModelProposal(ProposalSpec::informed(), nullptr), std::invalid_argument);
  CHECK_NOTHROW(DirectedModelProposal(ProposalSpec::informed(), &target));

  const ExactConditionalSwitch sw(toy);
  const KeepParams keep;
  Rng rng(5);
  SUBCASE("self proposal keeps the direction") {
    const DirectedModelProposal q(ProposalSpec::uniform(), nullptr, 1.0, 1.0);
    for (auto dir : {Direction::up, Direction::down}) {
      TransDimState s{BinaryState::from_spins({1, -1, 1}), Eigen::VectorXd::Ones(3), dir};
      const auto out = lifted_rj_step(q, sw, keep, s, rng);
      CHECK(out.move == TransDimMove::within);
      CHECK(out.next.direction == dir);
      CHECK(out.next.model == s.model);
      CHECK(out.next.params[0] == 2.0);
    }
  }
  SUBCASE("outside the space reverses the direction") {
    const DirectedModelProposal q(ProposalSpec::uniform(), nullptr, 0.0, 0.0);
    TransDimState s{BinaryState(3, 1), Eigen::VectorXd::Ones(4), Direction::up};
    const auto out = lifted_rj_step(q, sw, keep, s, rng);
    CHECK(out.move == TransDimMove::outside);
    CHECK(out.next.direction == Direction::down);
    CHECK(out.next.model == s.model);
    const auto rev = rj_step(q, sw, keep, TransDimState{BinaryState(3, -1), Eigen::VectorXd::Ones(1)}, rng);
    CHECK(rev.next.direction == Direction::up);
  }
  SUBCASE("log q includes the switch mass") {
    const DirectedModelProposal q(ProposalSpec::uniform(), nullptr, 0.25, 0.25);
    CHECK(std::exp(q.log_q(BinaryState::from_spins({-1, -1, 1}), Direction::up, 0)) == doctest::Approx(0.375));
  }
}

TEST_CASE("symmetric proposal with unit ratio always accepts") {
  const UnitRatioSwitch sw;
  const KeepParams keep;
  const DirectedModelProposal q(ProposalSpec::uniform(), nullptr, 0.3, 0.3);
  Rng rng(6);
  TransDimState s{BinaryState(1, -1), Eigen::VectorXd::Ones(1), Direction::up};
  int switches = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto out = rj_step(q, sw, keep, s, rng);
    CHECK(out.move != TransDimMove::reject);
    switches += out.move == TransDimMove::accept;
    s = out.next;
    const auto lifted = lifted_rj_step(q, sw, keep, s, rng);
    CHECK(lifted.move != TransDimMove::reject);
  }
  CHECK(switches > 300);
}

TEST_CASE("model switches reduce to lifted Metropolis on the model marginal") {
  for (std::size_t p = 1; p <= 4; ++p) {
    const auto toy = ConjugateToy::generate(p, 30, 20 + p);
    const auto target = toy.model_target();
    const ExactConditionalSwitch sw(toy);
    for (auto spec : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
      const DirectedModelProposal q(spec, &target, 0.5, 0.5);
      const auto P = model_switch_kernel(q, sw, p);
      const auto K = build_kernel({Algorithm::lifted1, spec, {}}, target);
      CHECK((P - K.P).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("lifted reversible jump leaves the joint law invariant") {
  const auto toy = ConjugateToy::generate(3, 50, 1);
  const auto target = toy.model_target();
  const ExactConditionalWithin within(toy);
  const std::size_t chains = 100000;

  SUBCASE("exact ratio") {
    const ExactConditionalSwitch sw(toy);
    for (auto spec : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
      const DirectedModelProposal q(spec, &target, 0.3, 0.3);
      const auto r = stationarity_chi2(toy, 0.0, chains, 10,
                                       [&](const TransDimState& s, Rng& g) { return lifted_rj_step(q, sw, within, s, g); }, 7);
      CAPTURE(spec.name());
      CHECK(r.p_value > 0.001);
      CHECK(std::abs(r.up_fraction - 0.5) < 4 * r.up_sd);
    }
  }
  SUBCASE("noisy ratio") {
    for (double s : {1.0, 2.0}) {
      const NoisySwitch sw(toy, s);
      const DirectedModelProposal q(ProposalSpec::uniform(), nullptr, 0.5, 0.5);
      const auto r = stationarity_chi2(toy, s, chains, 10,
                                       [&](const TransDimState& st, Rng& g) { return lifted_rj_step(q, sw, within, st, g); }, 8);
      CAPTURE(s);
      CHECK(r.p_value > 0.001);
      CHECK(std::abs(r.up_fraction - 0.5) < 4 * r.up_sd);
    }
  }
  SUBCASE("reversible") {
    const ExactConditionalSwitch sw(toy);
    const DirectedModelProposal q(ProposalSpec::uniform(), nullptr, 0.3, 0.3);
    const auto r = stationarity_chi2(toy, 0.0, chains / 2, 10,
                                     [&](const TransDimState& s, Rng& g) { return rj_step(q, sw, within, s, g); }, 9);
    CHECK(r.p_value > 0.001);
  }
}

TEST_CASE("noise scale must be non-negative") {
  const auto toy = ConjugateToy::generate(2, 20, 1);
  CHECK_THROWS_AS(NoisySwitch(toy, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(ConjugateToy::generate(7, 20, 1), std::invalid_argument);
}

}
