// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any fails. Criteria 5 and 6 run the full desk-scale experiments and
// take a minute or so.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "lifted/diagnostics.hpp"
#include "lifted/exact_oracle.hpp"
#include "lifted/experiment.hpp"
#include "lifted/transdim.hpp"
#include "lifted/validation.hpp"

using namespace lifted;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const ValidationOptions kBattery{1, 20};

Verdict exact_invariance() {
  const auto r = stationarity_suite(kBattery);
  return {r.passed && r.checks > 0, std::to_string(r.checks) + " checks, worst " + num(r.worst)};
}

// Asymptotic variances of f = sum x_i for the battery on every target and
// both proposal types: {lifted2 opt, lifted2 custom, lifted2 worst, revmix}.
std::vector<std::array<double, 4>> battery_variances() {
  std::vector<std::array<double, 4>> out;
  for (std::size_t t = 0; t < kBattery.targets; ++t) {
    const auto target = random_tabular_target(3 + t % 6, kBattery.seed + t);
    const auto plain = enumerate(target, false);
    const auto lifted = enumerate(target, true);
    const auto f_plain = tabulate(plain, magnetisation);
    const auto f_lifted = tabulate(lifted, magnetisation);
    for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
      const auto specs = battery(p, kBattery.seed + t);
      const auto var = [&](const SamplerSpec& s) {
        const auto K = build_kernel(s, target);
        return K.lifted ? asymptotic_variance(K.P, lifted.pmf, f_lifted)
                        : asymptotic_variance(K.P, plain.pmf, f_plain);
      };
      out.push_back({var(specs[2]), var(specs[4]), var(specs[3]), var(specs[5])});
    }
  }
  return out;
}

Verdict rho_ordering(const std::vector<std::array<double, 4>>& v) {
  double worst = -INFINITY;
  for (const auto& [opt, custom, bad, mix] : v) worst = std::max({worst, opt - custom, custom - bad});
  return {worst <= 1e-9, std::to_string(v.size()) + " cases, max violation " + num(worst)};
}

Verdict lifted_below_mixture(const std::vector<std::array<double, 4>>& v) {
  double worst = -INFINITY;
  for (const auto& [opt, custom, bad, mix] : v) worst = std::max({worst, opt - mix, custom - mix, bad - mix});
  double diff = 0;
  for (std::size_t t = 0; t < kBattery.targets; ++t) {
    const auto target = random_tabular_target(3 + t % 6, kBattery.seed + t);
    for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
      const auto a = build_kernel({Algorithm::lifted1, p, {}}, target);
      const auto b = build_kernel({Algorithm::lifted2, p, RhoPolicy::worst()}, target);
      diff = std::max(diff, (a.P - b.P).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-9 && diff < 1e-12,
          "max var(lifted2) - var(revmix) " + num(worst) + ", |lifted2(worst) - lifted1| " + num(diff)};
}

Verdict ising_sampling() {
  FieldSpec field;
  field.mu = 1.0;
  field.ell = 1;  // eta / 2; the default 25 exceeds the lattice
  const IsingModel model(3, 0.5, build_field(field, 3));
  const auto e = enumerate(model, false);
  const std::vector<double> pmf(e.pmf.data(), e.pmf.data() + e.pmf.size());
  Verdict v;
  double worst_tv = 0, worst_z = 0;
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()})
    for (const auto& spec : battery(p, 7)) {
      Rng rng(2024);
      LiftedState s{random_state(9, rng), random_direction(rng)};
      EvalCounters counters;
      for (int t = 0; t < 1000; ++t) s = step(spec, model, s, rng, counters).next;
      std::vector<double> hist(512, 0.0), dir;
      dir.reserve(1000000);
      for (int t = 0; t < 1000000; ++t) {
        s = step(spec, model, s, rng, counters).next;
        hist[s.state.to_index()] += 1;
        dir.push_back(s.direction == Direction::up ? 1.0 : 0.0);
      }
      const double tv = tv_distance(hist, pmf);
      worst_tv = std::max(worst_tv, tv);
      bool ok = tv < 0.015;
      if (spec.algorithm == Algorithm::lifted1 || spec.algorithm == Algorithm::lifted2) {
        double up = 0;
        for (double d : dir) up += d;
        up /= static_cast<double>(dir.size());
        const double sd = std::sqrt(0.25 / ess(dir));
        const double z = std::abs(up - 0.5) / sd;
        worst_z = std::max(worst_z, z);
        ok = ok && z < 4;
      }
      if (!ok) v.detail += spec.name() + "/" + p.name() + " off; ";
      v.pass = v.pass && ok;
    }
  v.detail += "max TV " + num(worst_tv) + ", max direction z " + num(worst_z);
  return v;
}

RunContext context(const std::string& name) {
  RunContext ctx;
  ctx.out_dir = std::filesystem::temp_directory_path() / ("lifted_acceptance_" + name);
  std::filesystem::create_directories(ctx.out_dir);
  ctx.threads = default_threads();
  return ctx;
}

std::string param(const GroupStats& g, const std::string& name) {
  for (const auto& [k, v] : g.target_params)
    if (k == name) return v;
  return {};
}

Verdict ising_sweep() {
  auto c = default_config(Experiment::ising_sweep_eta);
  c.eta = {50, 100, 160};
  c.mu = {1.0};
  c.ell.reset();  // eta / 2
  c.samplers = {"mh", "lifted1"};
  c.proposals = {ProposalSpec::informed(), ProposalSpec::uniform()};
  c.iters = 100000;
  c.burnin = 10000;
  c.replicates = 20;
  const auto res = run_experiment(c, context("ising"));
  std::map<std::string, double> epi;  // sampler/proposal/eta
  for (const auto& g : aggregate(res.rows)) epi[g.sampler + "/" + g.proposal + "/" + param(g, "eta")] = g.mean_ess_per_iter;

  Verdict v;
  double last = 0;
  std::string ratios;
  for (const char* eta : {"50", "100", "160"}) {
    const double mh = epi["mh/barker/" + std::string(eta)];
    const double l1 = epi["lifted1/barker/" + std::string(eta)];
    const double ratio = l1 / mh;
    ratios += std::string(ratios.empty() ? "" : ", ") + "eta " + eta + ": " + num(ratio);
    if (std::string(eta) == "50" && !(ratio >= 4)) v.pass = false;
    if (!(ratio > last)) v.pass = false;
    last = ratio;
    for (const char* s : {"mh", "lifted1"}) {
      const double u = epi[std::string(s) + "/uniform/" + eta];
      const double i = epi[std::string(s) + "/barker/" + eta];
      if (!(u < 0.1 * i)) {
        v.pass = false;
        ratios += " (uniform " + std::string(s) + " " + num(u / i) + "x informed)";
      }
    }
  }
  v.detail = "lifted1/mh ESS ratio " + ratios;
  return v;
}

Verdict crime() {
  auto c = default_config(Experiment::crime_vs);
  c.dataset = std::filesystem::path(LIFTED_DATA_DIR) / "uscrime.csv";
  c.samplers = {"mh", "lifted1", "lifted2-opt"};
  c.proposals = {ProposalSpec::informed()};
  c.iters = 10000;
  c.burnin = 1000;
  c.replicates = 20;
  const auto res = run_experiment(c, context("crime"));
  std::map<std::string, GroupStats> g;
  for (const auto& s : aggregate(res.rows)) g[s.sampler] = s;
  const double mh = g["mh"].mean_ess_per_iter;
  const double r1 = g["lifted1"].mean_ess_per_iter / mh;
  const double r2 = g["lifted2-opt"].mean_ess_per_iter / mh;
  const double a_mh = g["mh"].mean_accept_rate;
  const double a1 = g["lifted1"].mean_accept_rate;
  const double a2 = g["lifted2-opt"].mean_accept_rate;
  const auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  const bool pass = in(r1, 1.5, 5) && in(r2, 1.5, 5) && r2 >= r1 && in(a_mh, 0.85, 0.97) && in(a1, 0.6, 0.8) &&
                    in(a2, 0.6, 0.8);
  return {pass, "ESS ratios lifted1 " + num(r1) + ", lifted2-opt " + num(r2) + "; acceptance mh " + num(a_mh) +
                    ", lifted1 " + num(a1) + ", lifted2-opt " + num(a2)};
}

Verdict transdim() {
  const auto toy = ConjugateToy::generate(3, 50, 1);
  const auto target = toy.model_target();
  const auto e = enumerate(target, false);
  const std::vector<double> pmf(e.pmf.data(), e.pmf.data() + e.pmf.size());
  const ExactConditionalSwitch sw(toy);
  const ExactConditionalWithin within(toy);

  double kernel_diff = 0;
  for (auto p : {ProposalSpec::uniform(), ProposalSpec::informed()}) {
    const DirectedModelProposal q(p, &target, 0.5, 0.5);
    const auto K = build_kernel({Algorithm::lifted1, p, {}}, target);
    kernel_diff = std::max(kernel_diff, (model_switch_kernel(q, sw, 3) - K.P).cwiseAbs().maxCoeff());
  }

  const DirectedModelProposal q(ProposalSpec::uniform(), nullptr, 0.5, 0.5);
  Rng rng(31);
  TransDimState s{BinaryState(3, 1), {}, Direction::down};
  s.params = toy.sample_conditional(s.model, rng);
  std::vector<double> hist(8, 0.0);
  for (int t = 0; t < 1000000; ++t) {
    s = lifted_rj_step(q, sw, within, s, rng).next;
    hist[s.model.to_index()] += 1;
  }
  const double tv = tv_distance(hist, pmf);
  return {tv < 0.02 && kernel_diff < 1e-10, "TV " + num(tv) + ", kernel difference " + num(kernel_diff)};
}

Verdict properties() {
  double g_err = 0;
  for (auto g : {BalancingFunction::barker, BalancingFunction::sqrt})
    for (int k = 0; k < 100; ++k) {
      const double t = std::exp(-20.0 + 40.0 * k / 99.0);
      g_err = std::max(g_err, std::abs(balance(g, t) / balance(g, 1 / t) / t - 1));
    }

  double collapse = 0;
  Rng rng(77);
  for (int r = 0; r < 1000; ++r) {
    const std::size_t n = 3 + r % 8;
    const auto target = random_tabular_target(n, 900 + r);
    const ProposalKernel k(ProposalSpec::informed(r % 2 ? BalancingFunction::sqrt : BalancingFunction::barker));
    EvalCounters c;
    const auto x = random_state(n, rng);
    const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
    const auto y = flip(x, i);
    const double delta = target.log_mass(y) - target.log_mass(x);
    const double mh = delta + k.log_q_undirected(target, y, i, c) - k.log_q_undirected(target, x, i, c);
    collapse = std::max(collapse, std::abs(mh - (k.log_normalizer_undirected(target, x, c) -
                                                 k.log_normalizer_undirected(target, y, c))));
    const Direction d = moves_in(x, i, Direction::up) ? Direction::up : Direction::down;
    const double lifted = delta + k.log_q_directed(target, y, -d, i, c) - k.log_q_directed(target, x, d, i, c);
    collapse = std::max(collapse, std::abs(lifted - (k.log_normalizer_directed(target, x, d, c) -
                                                     k.log_normalizer_directed(target, y, -d, c))));
  }

  const auto ar1 = [](double rho, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    std::vector<double> out(n);
    double v = z(gen) / std::sqrt(1 - rho * rho);
    for (auto& o : out) {
      o = v;
      v = rho * v + z(gen);
    }
    return out;
  };
  double iid = 0, ar = 0;
  for (std::uint64_t s = 0; s < 100; ++s) iid += ess(ar1(0, 100000, 5000 + s)) / 1e5 / 100;
  for (std::uint64_t s = 0; s < 20; ++s) ar += ess(ar1(0.5, 100000, 6000 + s)) / 1e5 / 20;

  const bool pass = g_err < 1e-12 && collapse < 1e-10 && iid >= 0.95 && iid <= 1.05 && std::abs(ar * 3 - 1) <= 0.1;
  return {pass, "g identity " + num(g_err) + ", collapse " + num(collapse) + ", ESS/N i.i.d. " + num(iid) +
                    ", AR(1) 0.5 " + num(ar) + " (1/3)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"exact invariance of every kernel", exact_invariance},
      {"rho ordering of asymptotic variances", [] { return rho_ordering(battery_variances()); }},
      {"lifted2 below the reversible mixture, worst rho equals lifted1",
       [] { return lifted_below_mixture(battery_variances()); }},
      {"3x3 Ising empirical laws", ising_sampling},
      {"Ising eta sweep, informed lifted1 vs mh", ising_sweep},
      {"crime variable selection ESS and acceptance", crime},
      {"trans-dimensional lifted sampler", transdim},
      {"balancing, collapse and ESS properties", properties},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("%s criterion %zu: %s (%s; %.1f s)\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
