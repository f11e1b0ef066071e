#include "lifted/targets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lifted/rng.hpp"
#include "lifted/simd/kernels.hpp"

namespace lifted {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double TargetModel::log_ratio(const BinaryState& x, std::size_t i) const {
  const double here = log_mass(x);
  const double there = log_mass(flip(x, i));
  if (here == kNegInf) return there == kNegInf ? 0.0 : std::numeric_limits<double>::infinity();
  return there - here;
}

void TargetModel::log_ratios(const BinaryState& x, std::span<const std::size_t> sites,
                             std::span<double> out) const {
  for (std::size_t k = 0; k < sites.size(); ++k) out[k] = log_ratio(x, sites[k]);
}

// ---------------------------------------------------------------------------

std::vector<double> build_field(const FieldSpec& spec, std::size_t eta) {
  if (eta == 0) throw std::invalid_argument("build_field: eta must be positive");
  if (spec.ell < 1 || spec.ell > eta)
    throw std::invalid_argument("build_field: ell must satisfy 1 <= ell <= eta");
  if (spec.noise_half_width < 0) throw std::invalid_argument("build_field: negative noise width");
  Rng rng(spec.seed);
  std::vector<double> alpha(eta * eta);
  for (std::size_t r = 0; r < eta; ++r)
    for (std::size_t c = 0; c < eta; ++c) {
      const double eps = (2.0 * uniform01(rng) - 1.0) * spec.noise_half_width;
      alpha[r * eta + c] = (c + 1 <= spec.ell ? -spec.mu : spec.mu) + eps;
    }
  return alpha;
}

IsingModel::IsingModel(std::size_t eta, double lambda, std::vector<double> alpha, bool periodic)
    : eta_(eta), lambda_(lambda), alpha_(std::move(alpha)), periodic_(periodic) {
  if (eta_ == 0) throw std::invalid_argument("IsingModel: eta must be positive");
  if (!(lambda_ >= 0)) throw std::invalid_argument("IsingModel: lambda must be >= 0");
  if (alpha_.size() != eta_ * eta_)
    throw std::invalid_argument("IsingModel: field must have eta^2 entries");
  if (periodic_ && eta_ < 3) throw std::invalid_argument("IsingModel: periodic lattice needs eta >= 3");
  adjacency_.assign(4 * eta_ * eta_, kNoSite);
  const auto site = [&](std::size_t r, std::size_t c) { return static_cast<std::uint32_t>(r * eta_ + c); };
  for (std::size_t r = 0; r < eta_; ++r)
    for (std::size_t c = 0; c < eta_; ++c) {
      auto* nb = adjacency_.data() + 4 * (r * eta_ + c);
      if (r > 0) nb[0] = site(r - 1, c); else if (periodic_) nb[0] = site(eta_ - 1, c);
      if (r + 1 < eta_) nb[1] = site(r + 1, c); else if (periodic_) nb[1] = site(0, c);
      if (c > 0) nb[2] = site(r, c - 1); else if (periodic_) nb[2] = site(r, eta_ - 1);
      if (c + 1 < eta_) nb[3] = site(r, c + 1); else if (periodic_) nb[3] = site(r, 0);
    }
}

std::size_t IsingModel::edge_count() const {
  return periodic_ ? 2 * eta_ * eta_ : 2 * eta_ * (eta_ - 1);
}

int IsingModel::neighbor_sum(const BinaryState& x, std::size_t i) const {
  int s = 0;
  for (auto j : neighbors(i))
    if (j != kNoSite) s += x[j];
  return s;
}

double IsingModel::log_mass(const BinaryState& x) const {
  if (x.size() != dimension()) throw std::invalid_argument("IsingModel::log_mass: dimension mismatch");
  double field = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) field += alpha_[i] * x[i];
  // each edge once: down and right neighbours
  long coupling = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto nb = neighbors(i);
    if (nb[1] != kNoSite) coupling += x[i] * x[nb[1]];
    if (nb[3] != kNoSite) coupling += x[i] * x[nb[3]];
  }
  return field + lambda_ * static_cast<double>(coupling);
}

double IsingModel::log_ratio(const BinaryState& x, std::size_t i) const {
  return (-2.0 * static_cast<double>(x[i])) * local_field(alpha_[i], neighbor_sum(x, i));
}

void IsingModel::log_ratios(const BinaryState& x, std::span<const std::size_t> sites,
                            std::span<double> out) const {
  if (4 * sites.size() < dimension()) {
    for (std::size_t k = 0; k < sites.size(); ++k) out[k] = log_ratio(x, sites[k]);
    return;
  }
  thread_local std::vector<double> all;
  all.resize(dimension());
  all_log_ratios(x, all);
  for (std::size_t k = 0; k < sites.size(); ++k) out[k] = all[sites[k]];
}

void IsingModel::all_log_ratios(const BinaryState& x, std::span<double> out) const {
  const std::size_t stride = eta_ + 2;
  thread_local std::vector<double> padded, fields;
  padded.assign(stride * stride, 0.0);
  fields.resize(dimension());
  for (std::size_t r = 0; r < eta_; ++r)
    for (std::size_t c = 0; c < eta_; ++c) padded[(r + 1) * stride + c + 1] = x[r * eta_ + c];
  if (periodic_) {
    for (std::size_t c = 0; c < eta_; ++c) {
      padded[c + 1] = x[(eta_ - 1) * eta_ + c];
      padded[(eta_ + 1) * stride + c + 1] = x[c];
    }
    for (std::size_t r = 0; r < eta_; ++r) {
      padded[(r + 1) * stride] = x[r * eta_ + eta_ - 1];
      padded[(r + 1) * stride + eta_ + 1] = x[r * eta_];
    }
  }
  const auto& k = simd::kernels();
  k.ising_local_fields(padded, eta_, alpha_, lambda_, fields);
  k.flip_log_ratios(x.spins(), fields, out);
}

// ---------------------------------------------------------------------------

TabularTarget::TabularTarget(std::vector<double> masses) {
  std::vector<double> logs(masses.size());
  bool any_positive = false;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] >= 0) || !std::isfinite(masses[i]))
      throw std::invalid_argument("TabularTarget: masses must be finite and >= 0");
    any_positive |= masses[i] > 0;
    logs[i] = masses[i] > 0 ? std::log(masses[i]) : kNegInf;
  }
  if (!any_positive) throw std::invalid_argument("TabularTarget: at least one mass must be positive");
  *this = from_log_masses(std::move(logs));
}

TabularTarget TabularTarget::from_log_masses(std::vector<double> log_masses) {
  std::size_t n = 0;
  while ((std::size_t{1} << n) < log_masses.size()) ++n;
  if (n == 0 || n > 14 || (std::size_t{1} << n) != log_masses.size())
    throw std::invalid_argument("TabularTarget: need 2^n entries with 1 <= n <= 14");
  bool any_finite = false;
  for (double v : log_masses) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("TabularTarget: log-masses must be < +inf");
    any_finite |= std::isfinite(v);
  }
  if (!any_finite) throw std::invalid_argument("TabularTarget: at least one mass must be positive");
  TabularTarget t;
  t.n_ = n;
  t.log_masses_ = std::move(log_masses);
  return t;
}

TabularTarget random_tabular_target(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> logs(std::size_t{1} << n);
  for (auto& v : logs) v = -3.0 + 6.0 * uniform01(rng);
  return TabularTarget::from_log_masses(std::move(logs));
}

// ---------------------------------------------------------------------------

namespace {

double marginal_from_columns(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                             const BinaryState& x) {
  const auto n = design.rows();
  const auto k = static_cast<Eigen::Index>(x.n_plus());
  Eigen::MatrixXd a(n, k + 1);
  a.col(0).setOnes();
  Eigen::Index col = 1;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] == 1) a.col(col++) = design.col(static_cast<Eigen::Index>(j));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < k + 1) return kNegInf;
  const Eigen::VectorXd beta = qr.solve(y);
  const double rss = (y - a * beta).squaredNorm();
  double log_det = 0.0;
  const auto& r = qr.matrixR();
  for (Eigen::Index i = 0; i <= k; ++i) log_det += 2.0 * std::log(std::abs(r(i, i)));

  const double half_dof = 0.5 * static_cast<double>(n - k - 1);
  return std::lgamma(half_dof) - half_dof * std::log(rss) - 0.5 * log_det -
         half_dof * std::log(M_PI) - std::log(2.0);
}

}  // namespace

VariableSelectionTarget::VariableSelectionTarget(Eigen::MatrixXd design, Eigen::VectorXd response,
                                                 double size_penalty)
    : design_(std::move(design)), response_(std::move(response)), size_penalty_(size_penalty) {
  const auto n = design_.rows();
  const auto p = design_.cols();
  if (p < 1) throw std::invalid_argument("VariableSelectionTarget: need at least one covariate");
  if (response_.size() != n)
    throw std::invalid_argument("VariableSelectionTarget: response length differs from design rows");
  if (n <= p + 1)
    throw std::invalid_argument("VariableSelectionTarget: need more observations than covariates + 1 (n_obs=" +
                                std::to_string(n) + ", p=" + std::to_string(p) + ")");
  if (!design_.allFinite() || !response_.allFinite())
    throw std::invalid_argument("VariableSelectionTarget: non-finite data");
  if (!std::isfinite(size_penalty_)) throw std::invalid_argument("VariableSelectionTarget: non-finite size penalty");

  for (Eigen::Index j = 0; j < p; ++j) {
    auto c = design_.col(j);
    const double mean = c.mean();
    c.array() -= mean;
    const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(n - 1));
    if (sd > 0) c /= sd;
  }

  if (static_cast<std::size_t>(p) <= max_tabulated_dimension) {
    const std::size_t models = std::size_t{1} << p;
    table_.resize(models);
    for (std::size_t m = 0; m < models; ++m) {
      const auto x = BinaryState::from_index(m, static_cast<std::size_t>(p));
      table_[m] = log_marginal_likelihood(x) + model_log_prior(x.n_plus());
    }
  }
}

double VariableSelectionTarget::log_marginal_likelihood(const BinaryState& x) const {
  if (x.size() != dimension())
    throw std::invalid_argument("VariableSelectionTarget: dimension mismatch");
  return marginal_from_columns(design_, response_, x);
}

double VariableSelectionTarget::log_mass(const BinaryState& x) const {
  if (!table_.empty()) {
    if (x.size() != dimension())
      throw std::invalid_argument("VariableSelectionTarget: dimension mismatch");
    return table_[x.to_index()];
  }
  return log_marginal_likelihood(x) + model_log_prior(x.n_plus());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

}  // namespace

VariableSelectionTarget load_regression_csv(const std::filesystem::path& path,
                                            const RegressionCsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  const std::size_t columns = header.size();
  if (columns < 2) throw std::runtime_error(path.string() + ": need at least two columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != columns)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(columns) + " columns, found " +
                               std::to_string(cells.size()));
    std::vector<double> row(columns);
    for (std::size_t j = 0; j < columns; ++j) {
      const auto& c = cells[j];
      const auto res = std::from_chars(c.data(), c.data() + c.size(), row[j]);
      if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size() || !std::isfinite(row[j]))
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                                 c + "' in column '" + header[j] + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": no data rows");
  const std::size_t p = columns - 1;
  if (rows.size() <= p + 1)
    throw std::runtime_error(path.string() + ": " + std::to_string(rows.size()) +
                             " rows is too few for " + std::to_string(p) + " covariates");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd data(n, static_cast<Eigen::Index>(columns));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < columns; ++j) data(i, static_cast<Eigen::Index>(j)) = rows[i][j];
  if (options.log_transform)
    for (Eigen::Index j = 0; j < data.cols(); ++j)
      if ((data.col(j).array() > 0).all()) data.col(j) = data.col(j).array().log().matrix();

  return VariableSelectionTarget(data.leftCols(static_cast<Eigen::Index>(p)),
                                 data.col(static_cast<Eigen::Index>(p)), options.size_penalty);
}

VariableSelectionTarget load_crime_csv(const std::filesystem::path& path,
                                       const RegressionCsvOptions& options) {
  {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
    std::string header;
    std::getline(in, header);
    if (split_csv_line(header).size() != 16)
      throw std::runtime_error(path.string() + ": expected 16 columns (15 covariates + response)");
  }
  return load_regression_csv(path, options);
}

}  // namespace lifted
