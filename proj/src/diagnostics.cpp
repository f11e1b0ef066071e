#include "lifted/diagnostics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lifted {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> autocovariance(std::span<const double> trace, std::size_t max_lag) {
  const std::size_t n = trace.size();
  if (n == 0) return {};
  max_lag = std::min(max_lag, n - 1);
  const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(n);

  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  const std::size_t bins = len / 2 + 1;
  double* buf = fftw_alloc_real(len);
  fftw_complex* spec = fftw_alloc_complex(bins);
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), buf, spec, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec, buf, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) buf[i] = trace[i] - mean;
  std::fill(buf + n, buf + len, 0.0);
  fftw_execute(fwd);
  for (std::size_t k = 0; k < bins; ++k) {
    spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    spec[k][1] = 0.0;
  }
  fftw_execute(inv);

  std::vector<double> gamma(max_lag + 1);
  const double scale = 1.0 / (static_cast<double>(len) * static_cast<double>(n));
  for (std::size_t k = 0; k <= max_lag; ++k) gamma[k] = buf[k] * scale;
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(buf);
  fftw_free(spec);
  return gamma;
}

double ess(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 10) throw std::invalid_argument("ess: trace must have at least 10 values");
  const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
  if (*lo == *hi) return static_cast<double>(n);

  const auto gamma = autocovariance(trace, n - 1);
  const double g0 = gamma[0];
  // Geyer: pair sums Gamma_m = gamma_{2m} + gamma_{2m+1}, kept while positive
  // and forced to be non-increasing.
  double sum_pairs = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < gamma.size(); ++m) {
    double pair = gamma[2 * m] + gamma[2 * m + 1];
    if (!(pair > 0)) break;
    pair = std::min(pair, prev);
    sum_pairs += pair;
    prev = pair;
  }
  const double sigma2 = -g0 + 2.0 * sum_pairs;
  const double cap = 1.25 * static_cast<double>(n);
  if (!(sigma2 > 0)) return cap;
  return std::min(cap, static_cast<double>(n) * g0 / sigma2);
}

// ---------------------------------------------------------------------------

SummaryRow make_row(std::size_t replicate_id, std::string sampler, std::string proposal,
                    std::vector<std::pair<std::string, std::string>> target_params,
                    const TraceSummary& run) {
  SummaryRow r;
  r.replicate_id = replicate_id;
  r.sampler = std::move(sampler);
  r.proposal = std::move(proposal);
  r.target_params = std::move(target_params);
  r.ess = run.ess;
  r.ess_per_iter = run.ess_per_iter();
  r.accept_rate = run.accept_rate();
  r.flip_rate = run.flip_rate();
  r.evals = run.counters.ratio_evals;
  r.seconds = run.seconds;
  return r;
}

namespace {

bool same_group(const SummaryRow& a, const SummaryRow& b) {
  return a.sampler == b.sampler && a.proposal == b.proposal && a.target_params == b.target_params;
}

std::vector<std::vector<const SummaryRow*>> groups_of(const std::vector<SummaryRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize: no replicates");
  std::vector<std::vector<const SummaryRow*>> groups;
  for (const auto& r : rows) {
    if (r.target_params.size() != rows.front().target_params.size())
      throw std::invalid_argument("summarize: rows disagree on target parameters");
    for (std::size_t k = 0; k < r.target_params.size(); ++k)
      if (r.target_params[k].first != rows.front().target_params[k].first)
        throw std::invalid_argument("summarize: rows disagree on target parameters");
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return same_group(*g.front(), r); });
    if (it == groups.end())
      groups.push_back({&r});
    else
      it->push_back(&r);
  }
  return groups;
}

GroupStats stats_of(const std::vector<const SummaryRow*>& g) {
  GroupStats s;
  s.sampler = g.front()->sampler;
  s.proposal = g.front()->proposal;
  s.target_params = g.front()->target_params;
  s.replicates = g.size();
  const double r = static_cast<double>(g.size());
  for (const auto* row : g) {
    s.mean_ess_per_iter += row->ess_per_iter / r;
    s.mean_accept_rate += row->accept_rate / r;
    s.mean_flip_rate += row->flip_rate / r;
  }
  if (g.size() > 1) {
    double ss = 0.0;
    for (const auto* row : g) ss += (row->ess_per_iter - s.mean_ess_per_iter) * (row->ess_per_iter - s.mean_ess_per_iter);
    s.se_ess_per_iter = std::sqrt(ss / (r - 1.0) / r);
  }
  return s;
}

}  // namespace

std::vector<GroupStats> aggregate(const std::vector<SummaryRow>& rows) {
  std::vector<GroupStats> out;
  for (const auto& g : groups_of(rows)) out.push_back(stats_of(g));
  return out;
}

std::string summarize(const std::vector<SummaryRow>& rows) {
  const auto groups = groups_of(rows);
  std::ostringstream os;
  os << "replicate_id,sampler,proposal";
  for (const auto& [name, value] : rows.front().target_params) os << ',' << name;
  os << ",ess,ess_per_iter,accept_rate,flip_rate,evals,seconds,ess_per_iter_se\n";

  const auto params = [&](const SummaryRow& r) {
    for (const auto& [name, value] : r.target_params) os << ',' << value;
  };
  for (const auto& g : groups) {
    for (const auto* r : g) {
      os << r->replicate_id << ',' << r->sampler << ',' << r->proposal;
      params(*r);
      os << ',' << fmt(r->ess) << ',' << fmt(r->ess_per_iter) << ',' << fmt(r->accept_rate) << ','
         << fmt(r->flip_rate) << ',' << r->evals << ',' << fmt(r->seconds) << ",\n";
    }
    const double count = static_cast<double>(g.size());
    double ess_mean = 0, evals = 0, secs = 0;
    for (const auto* r : g) {
      ess_mean += r->ess / count;
      evals += static_cast<double>(r->evals) / count;
      secs += r->seconds / count;
    }
    const auto s = stats_of(g);
    os << "aggregate," << s.sampler << ',' << s.proposal;
    params(*g.front());
    os << ',' << fmt(ess_mean) << ',' << fmt(s.mean_ess_per_iter) << ',' << fmt(s.mean_accept_rate)
       << ',' << fmt(s.mean_flip_rate) << ',' << fmt(evals) << ',' << fmt(secs) << ','
       << fmt(s.se_ess_per_iter) << '\n';
  }
  return os.str();
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  const auto text = summarize(rows);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace lifted
