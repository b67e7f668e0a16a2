// Copyright 2026 The ricker-approx Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ricker/region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "ricker/errors.hpp"
#include "ricker/kernels.hpp"
#include "ricker/parallel.hpp"

namespace ricker {
namespace {

constexpr std::size_t kMinValidRows = 50;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

// Valid values of column j, sorted ascending.
std::vector<double> sorted_column(const StatMatrix& sims, std::size_t j) {
  std::vector<double> col;
  col.reserve(sims.rows.size());
  for (const auto& row : sims.rows) {
    const double v = row.values()[j];
    if (!std::isnan(v)) col.push_back(v);
  }
  std::sort(col.begin(), col.end());
  return col;
}

}  // namespace

double two_sided_tail(double alpha) { return (1.0 - alpha) / 10.0; }
double kolmogorov_level(double alpha) { return (4.0 + alpha) / 5.0; }

StatMatrix simulate_stats(const Theta& theta, const SurrogateEntry& entry, std::size_t n,
                          std::size_t n_sims, double delta, const RandomStream& rng) {
  validate(theta);
  if (n_sims < 100) throw std::invalid_argument("simulate_stats: n_sims must be >= 100");
  std::vector<std::int64_t> reference = reference_sample(entry, theta.phi, n);
  std::sort(reference.begin(), reference.end());

  StatMatrix out;
  out.rows.reserve(n_sims);
  for (std::size_t i = 0; i < n_sims; ++i) {
    const ObservationSeries series = simulate_series(theta, n, rng.derive(i));
    out.rows.push_back(stat_vector_sorted_reference(series, theta.phi, reference, delta));
    if (!out.rows.back().dynamics_valid) ++out.flagged;
  }
  if (2 * out.flagged > n_sims) {
    std::ostringstream msg;
    msg << "model mostly degenerate at theta=(log_r=" << theta.log_r << ", sigma=" << theta.sigma
        << ", phi=" << theta.phi << "): " << out.flagged << " of " << n_sims << " simulations";
    throw DegeneracyError(msg.str());
  }
  return out;
}

StatBounds stat_bounds(const StatMatrix& sims, double alpha) {
  check_alpha(alpha);
  const double tail = two_sided_tail(alpha);
  StatBounds bounds;
  for (std::size_t j = 0; j < kNumStats; ++j) {
    const std::vector<double> col = sorted_column(sims, j);
    if (col.size() < kMinValidRows)
      throw DegeneracyError("stat_bounds: fewer than 50 valid simulations");
    if (j + 1 < kNumStats) {
      bounds.lower[j] = sorted_quantile(col, tail);
      bounds.upper[j] = sorted_quantile(col, 1.0 - tail);
    } else {
      bounds.lower[j] = -std::numeric_limits<double>::infinity();
      bounds.upper[j] = sorted_quantile(col, kolmogorov_level(alpha));
    }
  }
  return bounds;
}

std::array<double, kNumStats> p_values(const StatMatrix& sims, const StatVector& observed) {
  std::array<double, kNumStats> p{};
  if (!observed.dynamics_valid) return p;
  const auto obs = observed.values();
  for (std::size_t j = 0; j < kNumStats; ++j) {
    const std::vector<double> col = sorted_column(sims, j);
    if (col.empty()) throw DegeneracyError("p_values: no valid simulations");
    const double m = static_cast<double>(col.size());
    if (j + 1 < kNumStats) {
      const auto below = std::upper_bound(col.begin(), col.end(), obs[j]) - col.begin();
      const double r = (static_cast<double>(below) + 1.0) / (m + 1.0);
      p[j] = std::min(1.0, 2.0 * std::min(r, 1.0 - r));
    } else {
      const auto above = col.end() - std::lower_bound(col.begin(), col.end(), obs[j]);
      p[j] = (static_cast<double>(above) + 1.0) / (m + 1.0);
    }
  }
  return p;
}

double mahalanobis_p(const StatMatrix& sims, const StatVector& observed, ScatterKind kind, double nu) {
  if (!observed.dynamics_valid) return 0.0;
  std::vector<const StatVector*> valid;
  for (const auto& row : sims.rows)
    if (row.dynamics_valid) valid.push_back(&row);
  if (valid.size() < kNumStats + 2) throw DegeneracyError("mahalanobis_p: too few valid simulations");

  Eigen::MatrixXd rows(static_cast<Eigen::Index>(valid.size()), static_cast<Eigen::Index>(kNumStats));
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const auto v = valid[i]->values();
    for (std::size_t j = 0; j < kNumStats; ++j)
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  ScatterEstimate est;
  try {
    est = kind == ScatterKind::classical ? sample_covariance(rows) : kent_tyler_fit(rows, nu);
  } catch (const SingularityError& e) {
    throw SingularityError(std::string(kind == ScatterKind::classical ? "classical covariance: "
                                                                      : "Kent-Tyler scatter: ") +
                           e.what());
  }
  const auto obs_values = observed.values();
  const Eigen::VectorXd obs = Eigen::Map<const Eigen::VectorXd>(obs_values.data(), kNumStats);
  const double d_obs = mahalanobis(obs, est);
  const std::vector<double> d = mahalanobis_rows(rows, est);
  const auto at_least = std::count_if(d.begin(), d.end(), [&](double di) { return di >= d_obs; });
  return (static_cast<double>(at_least) + 1.0) / (static_cast<double>(d.size()) + 1.0);
}

std::array<double, 19> AdequacyReport::assessment_values() const {
  std::array<double, 19> out{};
  for (std::size_t j = 0; j < 4; ++j) {
    out[4 * j + 0] = dynamics[j].lower;
    out[4 * j + 1] = dynamics[j].value;
    out[4 * j + 2] = dynamics[j].upper;
    out[4 * j + 3] = dynamics[j].p;
  }
  out[16] = k_dist;
  out[17] = k_upper;
  out[18] = k_p;
  return out;
}

AdequacyReport judge(const Theta& theta, const StatMatrix& sims, const StatVector& observed,
                     const AssessOptions& options) {
  const StatBounds bounds = stat_bounds(sims, options.alpha);
  const auto p = p_values(sims, observed);
  const auto obs = observed.values();

  AdequacyReport report;
  report.theta = theta;
  report.data_degenerate = !observed.dynamics_valid;
  report.degeneracy_rate = sims.degeneracy_rate();
  bool adequate = observed.dynamics_valid;
  for (std::size_t j = 0; j < 4; ++j) {
    report.dynamics[j] = {bounds.lower[j], obs[j], bounds.upper[j], p[j]};
    adequate = adequate && obs[j] >= bounds.lower[j] && obs[j] <= bounds.upper[j];
  }
  report.k_dist = observed.k_dist;
  report.k_upper = bounds.upper[4];
  report.k_p = p[4];
  adequate = adequate && observed.k_dist <= bounds.upper[4];
  report.adequate = adequate;
  report.min_p = *std::min_element(p.begin(), p.end());

  if (options.maha_classical) report.maha_p_classical = mahalanobis_p(sims, observed, ScatterKind::classical);
  if (options.maha_kent_tyler)
    report.maha_p_kt = mahalanobis_p(sims, observed, ScatterKind::kent_tyler, options.nu);
  return report;
}

AdequacyReport assess(const Theta& theta, const ObservationSeries& data, const SurrogateEntry& entry,
                      const AssessOptions& options, const RandomStream& rng) {
  check_alpha(options.alpha);
  const std::size_t n = data.size();
  const StatMatrix sims = simulate_stats(theta, entry, n, options.n_sims, options.delta, rng);
  const StatVector observed = stat_vector(data, theta.phi, entry, options.delta);
  return judge(theta, sims, observed, options);
}

AdequacyReport assess(const Theta& theta, const ObservationSeries& data, const SurrogateEntry& entry,
                      double alpha, std::size_t n_sims, double delta, const RandomStream& rng) {
  AssessOptions options;
  options.alpha = alpha;
  options.n_sims = n_sims;
  options.delta = delta;
  return assess(theta, data, entry, options, rng);
}

std::vector<double> phi_grid(const PhiInterval& interval) {
  if (!(interval.lo > 0.0) || !(interval.hi >= interval.lo))
    throw std::invalid_argument("phi_grid: invalid interval");
  const auto count = std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil((interval.hi - interval.lo) / 3.0)));
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = interval.lo + (interval.hi - interval.lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  grid.back() = interval.hi;
  return grid;
}

std::optional<std::size_t> RegionResult::best_index() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].failure.empty()) continue;
    if (!best || reports[i].min_p > reports[*best].min_p) best = i;
  }
  return best;
}

std::size_t RegionResult::region_size() const {
  return static_cast<std::size_t>(std::count_if(reports.begin(), reports.end(), [](const auto& r) {
    return r.failure.empty() && r.adequate;
  }));
}

RegionResult scan_region(const ObservationSeries& data, const SurrogateTable& table,
                         const ScanOptions& options, std::uint64_t seed) {
  check_alpha(options.assess.alpha);
  if (data.size() != table.n)
    throw std::invalid_argument("scan_region: data length " + std::to_string(data.size()) +
                                " does not match table n=" + std::to_string(table.n));

  RegionResult result;
  result.alpha = options.assess.alpha;
  result.n_sims = options.assess.n_sims;
  result.seed = seed;

  struct Unit {
    const SurrogateEntry* entry;
    double phi;
  };
  std::vector<Unit> units;
  const std::int64_t sum_y = data.total();
  for (const auto& entry : table.entries) {
    std::vector<double> grid;
    try {
      grid = phi_grid(phi_interval(sum_y, entry.q_lo_sum_n, entry.q_hi_sum_n, table.beta));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "(log_r=" << entry.log_r << ", sigma=" << entry.sigma << "): " << e.what();
      result.failures.push_back(msg.str());
      continue;
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double phi : grid) units.push_back({&entry, phi});
  }

  const RandomStream root(seed);
  result.reports.resize(units.size());
  parallel_for(units.size(), options.workers, [&](std::size_t u) {
    const Theta theta{units[u].entry->log_r, units[u].entry->sigma, units[u].phi};
    try {
      result.reports[u] = assess(theta, data, *units[u].entry, options.assess, root.derive(u));
    } catch (const std::exception& e) {
      AdequacyReport failed;
      failed.theta = theta;
      failed.failure = e.what();
      result.reports[u] = std::move(failed);
    }
  });
  return result;
}

std::vector<double> coverage(const Theta& theta, const SurrogateEntry& entry,
                             std::span<const double> alphas, const CoverageOptions& options,
                             const RandomStream& rng) {
  validate(theta);
  for (double a : alphas) check_alpha(a);
  if (options.n_outer < 1) throw std::invalid_argument("coverage: n_outer must be >= 1");
  const std::size_t n = entry.n;

  std::vector<std::vector<char>> hits(options.n_outer, std::vector<char>(alphas.size(), 0));
  parallel_for(options.n_outer, options.workers, [&](std::size_t i) {
    const RandomStream rep = rng.derive(i);
    const ObservationSeries data = simulate_series(theta, n, rep.derive(0));
    const StatMatrix sims = simulate_stats(theta, entry, n, options.n_inner, options.delta, rep.derive(1));
    const StatVector observed = stat_vector(data, theta.phi, entry, options.delta);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      AssessOptions judge_options;
      judge_options.alpha = alphas[a];
      judge_options.n_sims = options.n_inner;
      judge_options.delta = options.delta;
      hits[i][a] = judge(theta, sims, observed, judge_options).adequate ? 1 : 0;
    }
  });

  std::vector<double> out(alphas.size(), 0.0);
  for (const auto& row : hits)
    for (std::size_t a = 0; a < alphas.size(); ++a) out[a] += row[a];
  for (double& v : out) v /= static_cast<double>(options.n_outer);
  return out;
}

Calibration calibrate_alpha(const Theta& theta, const SurrogateEntry& entry, double alpha,
                            const CoverageOptions& options, const RandomStream& rng) {
  check_alpha(alpha);
  if (options.n_outer < 500) throw std::invalid_argument("calibrate_alpha: n_outer must be >= 500");
  const double alphas[] = {alpha};
  Calibration out;
  out.alpha_star = coverage(theta, entry, alphas, options, rng).front();
  out.alpha_tilde = 2.0 * alpha - out.alpha_star;
  return out;
}

namespace {

std::string cell(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string{}; }

}  // namespace

void write_report(std::ostream& out, const RegionResult& result) {
  out << "log_r,sigma,phi";
  for (const char* name : {"b1", "b2", "b3", "sd"})
    out << ',' << name << "_lower," << name << "_value," << name << "_upper," << name << "_p";
  out << ",k_dist,k_upper,k_p,min_p,adequate,degeneracy_rate,maha_p_classical,maha_p_kt\n";

  for (const auto& r : result.reports) {
    out << cell(r.theta.log_r) << ',' << cell(r.theta.sigma) << ',' << cell(r.theta.phi);
    if (!r.failure.empty()) {
      out << std::string(19, ',') << ",,0,,,\n";
      continue;
    }
    for (double v : r.assessment_values()) out << ',' << cell(v);
    out << ',' << cell(r.min_p) << ',' << (r.adequate ? 1 : 0) << ',' << cell(r.degeneracy_rate) << ','
        << cell(r.maha_p_classical) << ',' << cell(r.maha_p_kt) << '\n';
  }
}

void write_report(const std::filesystem::path& file, const RegionResult& result) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  write_report(out, result);
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

}  // namespace ricker
