#pragma once
// Target PMFs on {-1,+1}^n, known up to a normalizing constant.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lifted/state.hpp"

namespace lifted {

class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::size_t dimension() const = 0;

  // Unnormalized log-mass; -inf for states outside the support.
  virtual double log_mass(const BinaryState& x) const = 0;

  // log pi(flip(x, i)) - log pi(x). The current state x must have positive mass.
  virtual double log_ratio(const BinaryState& x, std::size_t i) const;

  // out[k] = log_ratio(x, sites[k]).
  virtual void log_ratios(const BinaryState& x, std::span<const std::size_t> sites,
                          std::span<double> out) const;
};

// ---------------------------------------------------------------------------
// Ising model on an eta x eta lattice, row-major sites:
//   log pi(x) = sum_i alpha_i x_i + lambda * sum_<ij> x_i x_j

struct FieldSpec {
  double mu = 1.0;
  std::size_t ell = 25;  // columns 1..ell (1-based) get -mu
  double noise_half_width = 0.1;
  std::uint64_t seed = 1;
};

// alpha_i = -mu + eps_i if the 1-based column of site i is <= ell, else
// +mu + eps_i, with eps_i i.i.d. uniform on (-w, w). Deterministic in seed.
std::vector<double> build_field(const FieldSpec& spec, std::size_t eta);

class IsingModel final : public TargetModel {
 public:
  static constexpr std::uint32_t kNoSite = 0xffffffffu;

  IsingModel(std::size_t eta, double lambda, std::vector<double> alpha, bool periodic = false);

  std::size_t dimension() const override { return eta_ * eta_; }
  std::size_t eta() const { return eta_; }
  double lambda() const { return lambda_; }
  bool periodic() const { return periodic_; }
  std::span<const double> alpha() const { return alpha_; }
  std::size_t edge_count() const;

  // Up to four lattice neighbours of site i; absent ones are kNoSite.
  std::span<const std::uint32_t, 4> neighbors(std::size_t i) const {
    return std::span<const std::uint32_t, 4>(adjacency_.data() + 4 * i, 4);
  }

  // Sum of neighbouring spins, an integer in [-4, 4].
  int neighbor_sum(const BinaryState& x, std::size_t i) const;
  double local_field(double alpha, int neighbor_sum) const { return alpha + lambda_ * neighbor_sum; }

  double log_mass(const BinaryState& x) const override;
  double log_ratio(const BinaryState& x, std::size_t i) const override;
  void log_ratios(const BinaryState& x, std::span<const std::size_t> sites,
                  std::span<double> out) const override;

  // Flip log-ratios of every site through the vectorized stencil.
  void all_log_ratios(const BinaryState& x, std::span<double> out) const;

 private:
  std::size_t eta_;
  double lambda_;
  std::vector<double> alpha_;
  bool periodic_;
  std::vector<std::uint32_t> adjacency_;
};

// ---------------------------------------------------------------------------
// Explicit table of 2^n masses (n <= 14), indexed by BinaryState::to_index().

class TabularTarget final : public TargetModel {
 public:
  explicit TabularTarget(std::vector<double> masses);
  static TabularTarget from_log_masses(std::vector<double> log_masses);

  std::size_t dimension() const override { return n_; }
  double log_mass(const BinaryState& x) const override { return log_masses_[x.to_index()]; }
  std::span<const double> log_masses() const { return log_masses_; }

 private:
  TabularTarget() = default;

  std::size_t n_ = 0;
  std::vector<double> log_masses_;
};

// Log-masses i.i.d. uniform on [-3, 3].
TabularTarget random_tabular_target(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Bayesian variable selection for a normal linear model with intercept and
// the prior pi(beta, sigma | x) ∝ 1/sigma. With d = k + 1 columns,
//   log m(y | x) = lgamma((n-d)/2) - ((n-d)/2) log RSS_x - 1/2 log det(A_x'A_x)
//                  - ((n-d)/2) log(pi) - log 2
// and the model prior adds size_penalty * k.

class VariableSelectionTarget final : public TargetModel {
 public:
  // Design columns are standardized here (mean 0, sample variance 1).
  // Models are tabulated once when p <= max_tabulated_dimension.
  VariableSelectionTarget(Eigen::MatrixXd design, Eigen::VectorXd response,
                          double size_penalty = 0.0);

  static constexpr std::size_t max_tabulated_dimension = 20;

  std::size_t dimension() const override { return static_cast<std::size_t>(design_.cols()); }
  std::size_t n_obs() const { return static_cast<std::size_t>(design_.rows()); }
  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& response() const { return response_; }
  double size_penalty() const { return size_penalty_; }

  double model_log_prior(std::size_t k) const { return size_penalty_ * static_cast<double>(k); }
  // -inf when the model's design matrix is rank deficient.
  double log_marginal_likelihood(const BinaryState& x) const;

  double log_mass(const BinaryState& x) const override;

 private:
  Eigen::MatrixXd design_;
  Eigen::VectorXd response_;
  double size_penalty_;
  std::vector<double> table_;
};

struct RegressionCsvOptions {
  // log-transform every column (covariates and response) whose entries are all > 0
  bool log_transform = true;
  double size_penalty = 0.0;
};

// Header row, comma separated, covariates then the response in the last column.
VariableSelectionTarget load_regression_csv(const std::filesystem::path& path,
                                            const RegressionCsvOptions& options = {});

// As above, but requires the UScrime layout: 15 covariates + response.
VariableSelectionTarget load_crime_csv(const std::filesystem::path& path,
                                       const RegressionCsvOptions& options = {});

}  // namespace lifted
