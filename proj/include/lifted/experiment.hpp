#pragma once
// Config-driven experiment runner behind the `lifted` command.
//
// Config grammar: `[section]` headers naming an experiment, `key = value`
// lines, lists separated by commas, `#` or `;` comments. Every section is
// one experiment and writes one CSV.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lifted/diagnostics.hpp"
#include "lifted/proposals.hpp"

namespace lifted {

enum class Experiment { ising_sweep_eta, ising_sweep_mu, crime_vs, transdim_demo, validate };

std::string experiment_name(Experiment e);

struct ExperimentConfig {
  Experiment experiment = Experiment::validate;
  int line = 0;  // line of the section header

  std::vector<std::string> samplers;
  std::vector<ProposalSpec> proposals;
  std::uint64_t iters = 0;
  std::uint64_t burnin = 0;
  std::uint64_t replicates = 20;
  std::uint64_t seed = 1;
  std::string output;  // file name relative to the output directory

  // Ising
  std::vector<std::size_t> eta;
  std::vector<double> mu;
  double lambda = 0.5;
  std::optional<std::size_t> ell = 25;  // nullopt: eta / 2
  double noise = 0.1;
  std::uint64_t field_seed = 1;
  bool periodic = false;
  bool incremental = true;  // use the incremental engine where it applies

  // variable selection
  std::filesystem::path dataset;
  bool log_transform = true;
  double size_penalty = 0.0;

  // trans-dimensional toy
  std::size_t p = 3;
  std::size_t n_obs = 50;
  std::uint64_t data_seed = 1;
  std::vector<double> log_sd{0.0};
  double self_mass = 0.5;

  // validate
  std::size_t targets = 20;
};

// Defaults for one experiment kind, as if its section were empty.
ExperimentConfig default_config(Experiment e);

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// Throws ConfigError listing every problem as "<where>:<line>: <message>".
// Relative dataset paths are taken relative to base_dir when it is given
// (load_config passes the directory of the file).
std::vector<ExperimentConfig> parse_config(const std::string& text, const std::string& where = "config",
                                          const std::filesystem::path& base_dir = {});
std::vector<ExperimentConfig> load_config(const std::filesystem::path& path);

struct RunContext {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  std::ostream* log = nullptr;
};

struct ExperimentResult {
  std::vector<SummaryRow> rows;
  std::filesystem::path csv;
  bool passed = true;  // false only for a failing validate section
};

ExperimentResult run_experiment(const ExperimentConfig& config, const RunContext& ctx);

// Thread count from LIFTED_THREADS, else the hardware concurrency (at least 1).
unsigned default_threads();

}  // namespace lifted
