#include "lifted/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lifted/exact_oracle.hpp"

namespace lifted {

namespace {

constexpr double kExact = 1e-12;
constexpr double kSlack = 1e-9;

TabularTarget battery_target(const ValidationOptions& opts, std::size_t t) {
  return random_tabular_target(3 + t % 6, opts.seed + t);
}

const ProposalSpec kProposals[] = {ProposalSpec::uniform(), ProposalSpec::informed()};

void record(SuiteResult& r, double error, double tolerance, const std::string& what) {
  ++r.checks;
  r.worst = std::max(r.worst, error);
  if (!(error <= tolerance)) {
    r.passed = false;
    if (r.failures.size() < 20) {
      std::ostringstream os;
      os << what << ": " << error << " > " << tolerance;
      r.failures.push_back(os.str());
    }
  }
}

std::string where(std::size_t t, const SamplerSpec& s) {
  return "target " + std::to_string(t) + " " + s.name() + "/" + s.proposal.name();
}

}  // namespace

RhoPolicy random_rho(std::uint64_t seed) {
  auto s = [seed](const BinaryState& x) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + x.to_index());
    return uniform01(rng);
  };
  return RhoPolicy::interpolated(s, "custom");
}

std::vector<SamplerSpec> battery(const ProposalSpec& proposal, std::uint64_t seed) {
  return {
      {Algorithm::mh, proposal, {}},
      {Algorithm::lifted1, proposal, {}},
      {Algorithm::lifted2, proposal, RhoPolicy::optimal()},
      {Algorithm::lifted2, proposal, RhoPolicy::worst()},
      {Algorithm::lifted2, proposal, random_rho(seed)},
      {Algorithm::revmix, proposal, {}},
  };
}

SuiteResult stationarity_suite(const ValidationOptions& opts) {
  SuiteResult r;
  r.name = "stationarity";
  for (std::size_t t = 0; t < opts.targets; ++t) {
    const auto target = battery_target(opts, t);
    const auto plain = enumerate(target, false);
    const auto lifted = enumerate(target, true);
    for (const auto& proposal : kProposals)
      for (const auto& spec : battery(proposal, opts.seed + t)) {
        const auto K = build_kernel(spec, target);
        const auto& pmf = K.lifted ? lifted.pmf : plain.pmf;
        const auto w = where(t, spec);
        record(r, stationarity_error(K.P, pmf), kExact, w + " invariance");
        record(r, row_sum_error(K.P), kExact, w + " row sums");
        record(r, std::max(0.0, -K.P.minCoeff()), kExact, w + " negative entry");
        if (K.lifted)
          record(r, skew_balance_error(K, pmf), kExact, w + " skew detailed balance");
        else
          record(r, detailed_balance_error(K.P, pmf), kExact, w + " detailed balance");
      }
  }
  return r;
}

SuiteResult ordering_suite(const ValidationOptions& opts) {
  SuiteResult r;
  r.name = "ordering";
  for (std::size_t t = 0; t < opts.targets; ++t) {
    const auto target = battery_target(opts, t);
    const auto plain = enumerate(target, false);
    const auto lifted = enumerate(target, true);
    const auto f_plain = tabulate(plain, magnetisation);
    const auto f_lifted = tabulate(lifted, magnetisation);
    for (const auto& proposal : kProposals) {
      const auto specs = battery(proposal, opts.seed + t);
      const auto var = [&](const SamplerSpec& s) {
        const auto K = build_kernel(s, target);
        return K.lifted ? asymptotic_variance(K.P, lifted.pmf, f_lifted)
                        : asymptotic_variance(K.P, plain.pmf, f_plain);
      };
      const double v_opt = var(specs[2]);
      const double v_worst = var(specs[3]);
      const double v_custom = var(specs[4]);
      const double v_mix = var(specs[5]);
      const std::string w = "target " + std::to_string(t) + "/" + proposal.name();
      record(r, v_opt - v_custom, kSlack, w + " var(opt) - var(custom)");
      record(r, v_custom - v_worst, kSlack, w + " var(custom) - var(worst)");
      for (const double v : {v_opt, v_custom, v_worst})
        record(r, v - v_mix, kSlack, w + " var(lifted2) - var(revmix)");
    }
  }
  return r;
}

SuiteResult mixture_suite(const ValidationOptions& opts) {
  SuiteResult r;
  r.name = "mixture";
  for (std::size_t t = 0; t < opts.targets; ++t) {
    const auto target = battery_target(opts, t);
    for (const auto& proposal : kProposals) {
      const std::string w = "target " + std::to_string(t) + "/" + proposal.name();
      const auto l1 = build_kernel({Algorithm::lifted1, proposal, {}}, target);
      const auto l2w = build_kernel({Algorithm::lifted2, proposal, RhoPolicy::worst()}, target);
      record(r, (l1.P - l2w.P).cwiseAbs().maxCoeff(), kExact, w + " lifted2(worst) vs lifted1");

      const auto mix = build_kernel({Algorithm::revmix, proposal, {}}, target);
      Eigen::MatrixXd half = 0.5 * (directed_component(proposal, target, Direction::up) +
                                    directed_component(proposal, target, Direction::down));
      half.diagonal() = (1.0 - half.rowwise().sum().array()).matrix();
      record(r, (mix.P - half).cwiseAbs().maxCoeff(), kExact, w + " revmix vs half-half mixture");
    }
  }

  // Cycle Z_m: N_{+1}(k) = {k+1}, N_{-1}(k) = {k-1}. Uniform undirected
  // proposal picks each with probability 1/2.
  for (std::size_t t = 0; t < opts.targets; ++t) {
    const Eigen::Index m = 5 + static_cast<Eigen::Index>(t % 6);
    Rng rng(opts.seed + 1000 + t);
    Eigen::VectorXd pi(m);
    for (Eigen::Index k = 0; k < m; ++k) pi[k] = std::exp(-3.0 + 6.0 * uniform01(rng));
    pi /= pi.sum();
    const auto next = [m](Eigen::Index k, int d) { return ((k + d) % m + m) % m; };

    Eigen::MatrixXd mh = Eigen::MatrixXd::Zero(m, m), mixture = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd lifted = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
      for (const int d : {-1, 1}) {
        const Eigen::Index y = next(k, d);
        const double a = std::min(1.0, pi[y] / pi[k]);
        mh(k, y) += 0.5 * a;
        // directed proposals are point masses, so q_{y,-d}(k) / q_{k,d}(y) = 1
        mixture(k, y) += 0.5 * 1.0 * a;
        const Eigen::Index from = 2 * k + (d == 1);
        lifted(from, 2 * y + (d == 1)) = a;
        lifted(from, 2 * k + (d != 1)) = 1.0 - a;
      }
      mh(k, k) = 1.0 - mh.row(k).sum();
      mixture(k, k) = 1.0 - mixture.row(k).sum();
    }
    const std::string w = "cycle " + std::to_string(m);
    record(r, (mh - mixture).cwiseAbs().maxCoeff(), kExact, w + " MH vs directed mixture");

    Eigen::VectorXd f(m), pi_lifted(2 * m), f_lifted(2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
      f[k] = std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m));
      pi_lifted[2 * k] = pi_lifted[2 * k + 1] = 0.5 * pi[k];
      f_lifted[2 * k] = f_lifted[2 * k + 1] = f[k];
    }
    record(r, stationarity_error(lifted, pi_lifted), kExact, w + " lifted invariance");
    const double v_mh = asymptotic_variance(mh, pi, f);
    const double v_lifted = asymptotic_variance(lifted, pi_lifted, f_lifted);
    record(r, v_lifted - v_mh, kSlack, w + " var(lifted) - var(MH)");
  }
  return r;
}

std::vector<SuiteResult> run_validation(const ValidationOptions& opts) {
  return {stationarity_suite(opts), ordering_suite(opts), mixture_suite(opts)};
}

}  // namespace lifted
