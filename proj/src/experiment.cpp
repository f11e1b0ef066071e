#include "lifted/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "lifted/ising_engine.hpp"
#include "lifted/samplers.hpp"
#include "lifted/targets.hpp"
#include "lifted/transdim.hpp"
#include "lifted/validation.hpp"

namespace lifted {

namespace {

const std::pair<const char*, Experiment> kExperiments[] = {
    {"ising-sweep-eta", Experiment::ising_sweep_eta},
    {"ising-sweep-mu", Experiment::ising_sweep_mu},
    {"crime-vs", Experiment::crime_vs},
    {"transdim-demo", Experiment::transdim_demo},
    {"validate", Experiment::validate},
};

bool is_ising(Experiment e) {
  return e == Experiment::ising_sweep_eta || e == Experiment::ising_sweep_mu;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Parsers throw std::string with the message.
std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw key + ": expected a non-negative integer, got '" + v + "'";
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out))
    throw key + ": expected a number, got '" + v + "'";
  return out;
}

double non_negative(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0) throw key + ": must be >= 0, got " + v;
  return d;
}

std::uint64_t positive(const std::string& key, const std::string& v) {
  const auto n = to_uint(key, v);
  if (n == 0) throw key + ": must be positive";
  return n;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw key + ": expected true or false, got '" + v + "'";
}

template <class F>
auto to_list(const std::string& key, const std::string& v, F one) {
  std::vector<decltype(one(key, v))> out;
  for (const auto& item : split_list(v)) out.push_back(one(key, item));
  if (out.empty()) throw key + ": empty list";
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

std::map<std::string, Setter> setters_for(Experiment e) {
  std::map<std::string, Setter> s;
  s["seed"] = [](auto& c, auto& k, auto& v) { c.seed = to_uint(k, v); };
  s["output"] = [](auto& c, auto& k, auto& v) {
    if (v.empty()) throw k + ": empty";
    c.output = v;
  };
  if (e == Experiment::validate) {
    s["targets"] = [](auto& c, auto& k, auto& v) { c.targets = positive(k, v); };
    return s;
  }
  s["samplers"] = [](auto& c, auto& k, auto& v) { c.samplers = to_list(k, v, [](auto&, auto& x) { return x; }); };
  s["proposals"] = [](auto& c, auto& k, auto& v) {
    c.proposals = to_list(k, v, [](const std::string& key, const std::string& x) {
      const auto p = parse_proposal(x);
      if (!p) throw key + ": unknown proposal '" + x + "'";
      return *p;
    });
  };
  s["iters"] = [](auto& c, auto& k, auto& v) { c.iters = positive(k, v); };
  s["burnin"] = [](auto& c, auto& k, auto& v) { c.burnin = to_uint(k, v); };
  s["replicates"] = [](auto& c, auto& k, auto& v) { c.replicates = positive(k, v); };

  if (is_ising(e)) {
    s["eta"] = [e](auto& c, auto& k, auto& v) {
      c.eta = to_list(k, v, [](auto& key, auto& x) { return static_cast<std::size_t>(positive(key, x)); });
      if (e == Experiment::ising_sweep_mu && c.eta.size() != 1) throw k + ": expected a single value";
    };
    s["mu"] = [e](auto& c, auto& k, auto& v) {
      c.mu = to_list(k, v, non_negative);
      if (e == Experiment::ising_sweep_eta && c.mu.size() != 1) throw k + ": expected a single value";
    };
    s["lambda"] = [](auto& c, auto& k, auto& v) { c.lambda = non_negative(k, v); };
    s["ell"] = [](auto& c, auto& k, auto& v) {
      if (v == "auto")
        c.ell.reset();
      else
        c.ell = static_cast<std::size_t>(to_uint(k, v));
    };
    s["noise"] = [](auto& c, auto& k, auto& v) { c.noise = non_negative(k, v); };
    s["field_seed"] = [](auto& c, auto& k, auto& v) { c.field_seed = to_uint(k, v); };
    s["periodic"] = [](auto& c, auto& k, auto& v) { c.periodic = to_bool(k, v); };
    s["engine"] = [](auto& c, auto& k, auto& v) {
      if (v != "incremental" && v != "generic") throw k + ": expected incremental or generic";
      c.incremental = v == "incremental";
    };
  } else if (e == Experiment::crime_vs) {
    s["dataset"] = [](auto& c, auto& k, auto& v) {
      if (v.empty()) throw k + ": empty";
      c.dataset = v;
    };
    s["log_transform"] = [](auto& c, auto& k, auto& v) { c.log_transform = to_bool(k, v); };
    s["size_penalty"] = [](auto& c, auto& k, auto& v) { c.size_penalty = to_double(k, v); };
  } else if (e == Experiment::transdim_demo) {
    s["p"] = [](auto& c, auto& k, auto& v) {
      c.p = positive(k, v);
      if (c.p > 6) throw k + ": at most 6";
    };
    s["n_obs"] = [](auto& c, auto& k, auto& v) { c.n_obs = positive(k, v); };
    s["data_seed"] = [](auto& c, auto& k, auto& v) { c.data_seed = to_uint(k, v); };
    s["log_sd"] = [](auto& c, auto& k, auto& v) { c.log_sd = to_list(k, v, non_negative); };
    s["self_mass"] = [](auto& c, auto& k, auto& v) {
      c.self_mass = non_negative(k, v);
      if (c.self_mass >= 1) throw k + ": must be < 1";
    };
  }
  return s;
}

bool known_sampler(Experiment e, const std::string& name) {
  if (e == Experiment::transdim_demo) return name == "lifted-rj" || name == "rj";
  return parse_sampler(name, ProposalSpec::uniform()).has_value();
}

}  // namespace

std::string experiment_name(Experiment e) {
  for (const auto& [name, kind] : kExperiments)
    if (kind == e) return name;
  return "?";
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.output = experiment_name(e) + ".csv";
  switch (e) {
    case Experiment::ising_sweep_eta:
      c.samplers = {"mh", "lifted1"};
      c.proposals = {ProposalSpec::informed(), ProposalSpec::uniform()};
      c.iters = 100000;
      c.eta = {50, 100, 160};
      c.mu = {1.0};
      break;
    case Experiment::ising_sweep_mu:
      c.samplers = {"mh", "lifted1"};
      c.proposals = {ProposalSpec::informed(), ProposalSpec::uniform()};
      c.iters = 100000;
      c.eta = {50};
      c.mu = {1.0, 2.0, 3.0};
      break;
    case Experiment::crime_vs:
      c.samplers = {"mh", "lifted1", "lifted2-opt"};
      c.proposals = {ProposalSpec::informed()};
      c.iters = 10000;
      break;
    case Experiment::transdim_demo:
      c.samplers = {"lifted-rj", "rj"};
      c.proposals = {ProposalSpec::uniform()};
      c.iters = 100000;
      break;
    case Experiment::validate:
      break;
  }
  c.burnin = c.iters / 10;
  return c;
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(errors.empty() ? std::string("invalid config") : errors.front()),
      errors_(std::move(errors)) {}

std::vector<ExperimentConfig> parse_config(const std::string& text, const std::string& where,
                                          const std::filesystem::path& base_dir) {
  std::vector<ExperimentConfig> out;
  std::vector<std::string> errors;
  const auto error = [&](int line, const std::string& msg) {
    errors.push_back(where + ":" + std::to_string(line) + ": " + msg);
  };

  struct Open {
    ExperimentConfig config;
    std::map<std::string, Setter> setters;
    std::map<std::string, int> seen;
    bool valid = true;
  };
  std::optional<Open> open;
  const auto close = [&]() {
    if (!open) return;
    auto& c = open->config;
    const auto& name = experiment_name(c.experiment);
    if (!open->seen.count("burnin")) c.burnin = c.iters / 10;
    if (c.experiment != Experiment::validate && c.burnin >= c.iters)
      error(open->seen.count("burnin") ? open->seen["burnin"] : c.line,
            "burnin: must be smaller than iters (" + std::to_string(c.iters) + ")");
    for (const auto& s : c.samplers)
      if (!known_sampler(c.experiment, s))
        error(open->seen.count("samplers") ? open->seen["samplers"] : c.line,
              "samplers: unknown sampler '" + s + "' for " + name);
    if (c.experiment == Experiment::crime_vs) {
      if (!open->seen.count("dataset"))
        error(c.line, "[" + name + "] missing required key 'dataset'");
      else if (c.dataset.is_relative() && !base_dir.empty())
        c.dataset = base_dir / c.dataset;
      if (open->seen.count("dataset") && !std::filesystem::exists(c.dataset))
        error(open->seen["dataset"], "dataset: file not found: " + c.dataset.string());
    }
    if (c.experiment == Experiment::transdim_demo && c.n_obs <= c.p + 1)
      error(open->seen.count("n_obs") ? open->seen["n_obs"] : c.line, "n_obs: must exceed p + 1");
    for (const auto& other : out)
      if (other.output == c.output)
        error(c.line, "output '" + c.output + "' already used by the section on line " +
                          std::to_string(other.line));
    out.push_back(std::move(c));
    open.reset();
  };

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto cut = raw.find_first_of("#;");
    const std::string s = trim(std::string_view(raw).substr(0, cut));
    if (s.empty()) continue;
    if (s.front() == '[') {
      close();
      if (s.back() != ']') {
        error(line, "malformed section header '" + s + "'");
        continue;
      }
      const std::string name = trim(std::string_view(s).substr(1, s.size() - 2));
      const auto it = std::find_if(std::begin(kExperiments), std::end(kExperiments),
                                   [&](const auto& e) { return name == e.first; });
      if (it == std::end(kExperiments)) {
        error(line, "unknown experiment '" + name + "'");
        continue;
      }
      open.emplace();
      open->config = default_config(it->second);
      open->config.line = line;
      open->setters = setters_for(it->second);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      error(line, "expected 'key = value', got '" + s + "'");
      continue;
    }
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (!open) {
      error(line, "key '" + key + "' outside of a section");
      continue;
    }
    const auto setter = open->setters.find(key);
    if (setter == open->setters.end()) {
      error(line, "unknown key '" + key + "' in [" + experiment_name(open->config.experiment) + "]");
      continue;
    }
    if (open->seen.count(key)) {
      error(line, "duplicate key '" + key + "'");
      continue;
    }
    open->seen[key] = line;
    try {
      setter->second(open->config, key, value);
    } catch (const std::string& msg) {
      error(line, msg);
    }
  }
  close();
  if (out.empty() && errors.empty()) error(line, "no experiment sections");
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return out;
}

std::vector<ExperimentConfig> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path());
}

unsigned default_threads() {
  if (const char* env = std::getenv("LIFTED_THREADS")) {
    unsigned n = 0;
    const std::string_view v(env);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec == std::errc() && ptr == v.data() + v.size() && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Job {
  std::size_t replicate;
  std::string sampler;
  std::string proposal;
  std::vector<std::pair<std::string, std::string>> params;
  std::function<TraceSummary(std::uint64_t seed)> run;
};

std::vector<SummaryRow> run_jobs(const std::vector<Job>& jobs, const ExperimentConfig& c,
                                 const RunContext& ctx) {
  std::vector<SummaryRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (std::size_t j; (j = next++) < jobs.size();) {
      try {
        const auto& job = jobs[j];
        const auto run = job.run(c.seed + job.replicate);
        rows[j] = make_row(job.replicate, job.sampler, job.proposal, job.params, run);
        if (ctx.log) {
          std::lock_guard lock(log_mutex);
          *ctx.log << experiment_name(c.experiment) << " " << job.sampler << "/" << job.proposal;
          for (const auto& [k, v] : job.params) *ctx.log << " " << k << "=" << v;
          *ctx.log << " rep " << job.replicate << ": ess/iter " << rows[j].ess_per_iter << " accept "
                   << rows[j].accept_rate << "\n";
        }
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(ctx.threads, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

RunOptions options_for(const ExperimentConfig& c, std::uint64_t seed) {
  RunOptions o;
  o.iters = c.iters;
  o.burnin = c.burnin;
  o.seed = seed;
  return o;
}

std::vector<Job> ising_jobs(const ExperimentConfig& c,
                            std::vector<std::shared_ptr<const IsingModel>>& models) {
  std::vector<Job> jobs;
  for (const auto eta : c.eta)
    for (const auto mu : c.mu) {
      const std::size_t ell = c.ell ? *c.ell : eta / 2;
      FieldSpec field{mu, ell, c.noise, c.field_seed};
      auto model = std::make_shared<const IsingModel>(eta, c.lambda, build_field(field, eta), c.periodic);
      models.push_back(model);
      const std::vector<std::pair<std::string, std::string>> params{
          {"eta", std::to_string(eta)}, {"mu", fmt(mu)}, {"lambda", fmt(c.lambda)}, {"ell", std::to_string(ell)}};
      for (const auto& name : c.samplers)
        for (const auto& proposal : c.proposals) {
          const auto spec = *parse_sampler(name, proposal);
          const bool incremental = c.incremental && IsingChain::supports(spec);
          for (std::size_t r = 0; r < c.replicates; ++r)
            jobs.push_back({r, spec.name(), proposal.name(), params,
                            [model, spec, incremental, &c](std::uint64_t seed) {
                              const auto o = options_for(c, seed);
                              return incremental ? run_ising_chain(*model, spec, o)
                                                 : run_chain(spec, *model, magnetisation, o);
                            }});
        }
    }
  return jobs;
}

TraceSummary run_transdim(const ConjugateToy& toy, const TabularTarget& marginal, bool lifted,
                          const ProposalSpec& proposal, double log_sd, const ExperimentConfig& c,
                          std::uint64_t seed) {
  Rng rng(seed);
  const auto start = std::chrono::steady_clock::now();
  const DirectedModelProposal q(proposal, &marginal, c.self_mass, c.self_mass);
  const ExactConditionalSwitch exact(toy);
  const NoisySwitch noisy(toy, log_sd);
  const ModelSwitchProposal& sw = log_sd > 0 ? static_cast<const ModelSwitchProposal&>(noisy) : exact;
  const ExactConditionalWithin within(toy);

  TransDimState s;
  s.model = BinaryState(toy.dimension(), 1);
  s.params = toy.sample_conditional(s.model, rng);
  s.direction = Direction::down;

  TraceSummary out;
  out.trace.reserve(c.iters - c.burnin);
  for (std::uint64_t t = 0; t < c.iters; ++t) {
    auto o = lifted ? lifted_rj_step(q, sw, within, s, rng) : rj_step(q, sw, within, s, rng);
    s = std::move(o.next);
    if (t < c.burnin) continue;
    ++out.steps;
    out.accepted += o.move == TransDimMove::accept;
    out.direction_flips += lifted && (o.move == TransDimMove::reject || o.move == TransDimMove::outside);
    out.trace.push_back(magnetisation(s.model));
  }
  out.final_state = {s.model, s.direction};
  if (out.trace.size() >= 10) out.ess = ess(out.trace);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c, const RunContext& ctx) {
  ExperimentResult result;
  result.csv = ctx.out_dir / c.output;

  if (c.experiment == Experiment::validate) {
    ValidationOptions opts;
    opts.seed = c.seed;
    opts.targets = c.targets;
    std::ostringstream csv;
    csv << "suite,passed,checks,worst\n";
    for (const auto& s : run_validation(opts)) {
      result.passed = result.passed && s.passed;
      csv << s.name << "," << (s.passed ? 1 : 0) << "," << s.checks << "," << fmt(s.worst) << "\n";
      if (ctx.log) {
        *ctx.log << s.name << ": " << (s.passed ? "ok" : "FAILED") << " (" << s.checks
                 << " checks, worst " << s.worst << ")\n";
        for (const auto& f : s.failures) *ctx.log << "  " << f << "\n";
      }
    }
    if (!ctx.out_dir.empty()) std::filesystem::create_directories(ctx.out_dir);
    std::ofstream(result.csv) << csv.str();
    return result;
  }

  std::vector<Job> jobs;
  std::vector<std::shared_ptr<const IsingModel>> ising_models;
  std::shared_ptr<const VariableSelectionTarget> vs;
  std::shared_ptr<const ConjugateToy> toy;
  std::shared_ptr<const TabularTarget> toy_marginal;

  if (is_ising(c.experiment)) {
    jobs = ising_jobs(c, ising_models);
  } else if (c.experiment == Experiment::crime_vs) {
    RegressionCsvOptions o;
    o.log_transform = c.log_transform;
    o.size_penalty = c.size_penalty;
    vs = std::make_shared<const VariableSelectionTarget>(load_crime_csv(c.dataset, o));
    const std::vector<std::pair<std::string, std::string>> params{
        {"p", std::to_string(vs->dimension())},
        {"n_obs", std::to_string(vs->n_obs())},
        {"size_penalty", fmt(c.size_penalty)}};
    for (const auto& name : c.samplers)
      for (const auto& proposal : c.proposals) {
        const auto spec = *parse_sampler(name, proposal);
        for (std::size_t r = 0; r < c.replicates; ++r)
          jobs.push_back({r, spec.name(), proposal.name(), params, [vs, spec, &c](std::uint64_t seed) {
                            auto o = options_for(c, seed);
                            o.initial = LiftedState{BinaryState(vs->dimension(), 1), Direction::down};
                            return run_chain(spec, *vs, magnetisation, o);
                          }});
      }
  } else {
    toy = std::make_shared<const ConjugateToy>(ConjugateToy::generate(c.p, c.n_obs, c.data_seed));
    toy_marginal = std::make_shared<const TabularTarget>(toy->model_target());
    for (const double log_sd : c.log_sd) {
      const std::vector<std::pair<std::string, std::string>> params{
          {"p", std::to_string(c.p)}, {"log_sd", fmt(log_sd)}, {"self_mass", fmt(c.self_mass)}};
      for (const auto& name : c.samplers)
        for (const auto& proposal : c.proposals)
          for (std::size_t r = 0; r < c.replicates; ++r)
            jobs.push_back({r, name, proposal.name(), params,
                            [toy, toy_marginal, lifted = name == "lifted-rj", proposal, log_sd,
                             &c](std::uint64_t seed) {
                              return run_transdim(*toy, *toy_marginal, lifted, proposal, log_sd, c, seed);
                            }});
    }
  }

  result.rows = run_jobs(jobs, c, ctx);
  write_summary(result.csv, result.rows);
  return result;
}

}  // namespace lifted
