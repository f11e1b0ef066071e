// lifted run <config> | lifted validate [--seed N]
// Exit codes: 0 ok, 1 failed validation or run, 2 usage or config error.

#include <CLI11.hpp>
#include <iostream>

#include "lifted/experiment.hpp"
#include "lifted/simd/kernels.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lifted MCMC samplers: experiments and exact validation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = ".";
  unsigned threads = lifted::default_threads();
  bool quiet = false;
  app.add_option("--out", out_dir, "directory for CSV output");
  app.add_option("--threads", threads, "worker threads (default: LIFTED_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "no per-replicate progress");

  auto* run = app.add_subcommand("run", "run every experiment in a config file");
  std::string config_path;
  run->add_option("config", config_path, "config file")->required();

  auto* validate = app.add_subcommand("validate", "exact stationarity, ordering and mixture suites");
  std::uint64_t seed = 1;
  std::size_t targets = 20;
  validate->add_option("--seed", seed, "base seed of the random targets");
  validate->add_option("--targets", targets, "number of random targets")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  lifted::RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.threads = threads;
  ctx.log = quiet ? nullptr : &std::cerr;

  std::vector<lifted::ExperimentConfig> configs;
  if (*run) {
    try {
      configs = lifted::load_config(config_path);
    } catch (const lifted::ConfigError& e) {
      for (const auto& msg : e.errors()) std::cerr << msg << "\n";
      return 2;
    }
  } else {
    auto c = lifted::default_config(lifted::Experiment::validate);
    c.seed = seed;
    c.targets = targets;
    configs.push_back(c);
    ctx.log = &std::cout;
  }

  if (!quiet) std::cerr << "simd: " << lifted::simd::isa_name(lifted::simd::kernels().isa) << "\n";
  bool passed = true;
  for (const auto& c : configs) {
    try {
      const auto result = lifted::run_experiment(c, ctx);
      passed = passed && result.passed;
      std::cout << lifted::experiment_name(c.experiment) << ": " << result.csv.string()
                << (result.passed ? "" : " (FAILED)") << "\n";
    } catch (const std::exception& e) {
      std::cerr << lifted::experiment_name(c.experiment) << " (line " << c.line << "): " << e.what() << "\n";
      passed = false;
    }
  }
  return passed ? 0 : 1;
}
