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

#include "ricker/surrogate.hpp"

#include <algorithm>
#include <cinttypes>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "ricker/errors.hpp"
#include "ricker/kernels.hpp"
#include "ricker/model.hpp"
#include "ricker/parallel.hpp"

namespace ricker {

GridSpec GridSpec::standard(std::size_t n_g) {
  if (n_g < 2) throw std::invalid_argument("grid size n_g must be >= 2");
  GridSpec grid;
  const double ng = static_cast<double>(n_g);
  for (std::size_t i = 1; i <= n_g; ++i) {
    grid.log_r.push_back(1.05 + 4.0 * static_cast<double>(i) / ng);
    grid.sigma.push_back(0.05 + 1.1 * static_cast<double>(i - 1) / (ng - 1.0));
  }
  return grid;
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

}  // namespace

GridSpec GridSpec::uniform(double log_r_lo, double log_r_hi, std::size_t log_r_count,
                           double sigma_lo, double sigma_hi, std::size_t sigma_count) {
  GridSpec grid{linspace(log_r_lo, log_r_hi, log_r_count), linspace(sigma_lo, sigma_hi, sigma_count)};
  grid.validate();
  return grid;
}

void GridSpec::validate() const {
  if (log_r.empty() || sigma.empty()) throw std::invalid_argument("grid axes must be non-empty");
  auto increasing = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
  };
  if (!increasing(log_r) || !increasing(sigma))
    throw std::invalid_argument("grid axes must be strictly increasing");
  for (double s : sigma)
    if (!(s >= 0.0)) throw std::invalid_argument("grid sigma values must be >= 0");
  for (double r : log_r)
    if (!std::isfinite(r)) throw std::invalid_argument("grid log_r values must be finite");
}

std::array<double, kBasisSize> surrogate_basis(double x) {
  std::array<double, kBasisSize> b{};
  double power = 1.0;
  for (std::size_t k = 0; k < 7; ++k) {
    b[k] = power;
    power *= x;
  }
  b[7] = std::sin(3.0 * std::numbers::pi * x);
  b[8] = std::cos(3.0 * std::numbers::pi * x);
  return b;
}

GridPointSample simulate_grid_point(double log_r, double sigma, std::size_t n, std::size_t n_sims,
                                    const RandomStream& rng) {
  if (n_sims < 100) throw std::invalid_argument("n_sims must be >= 100");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const Theta theta{log_r, sigma, 1.0};

  GridPointSample out;
  out.mean_order_stats.assign(n, 0.0);
  out.sum_n.resize(n_sims);
  for (std::size_t s = 0; s < n_sims; ++s) {
    RandomStream path_rng = rng.derive(s);
    LatentPath path;
    try {
      path = simulate_latent(theta, n, kDefaultBurnIn, path_rng);
    } catch (const DivergenceError& e) {
      std::ostringstream msg;
      msg << e.what() << " at grid point (log_r=" << log_r << ", sigma=" << sigma << ")";
      throw DivergenceError(msg.str(), e.step());
    }
    double total = 0.0;
    for (double v : path.log_values) total += std::exp(v);
    out.sum_n[s] = total;
    std::sort(path.log_values.begin(), path.log_values.end());
    for (std::size_t t = 0; t < n; ++t) out.mean_order_stats[t] += path.log_values[t];
  }
  for (double& v : out.mean_order_stats) v /= static_cast<double>(n_sims);
  return out;
}

std::vector<double> mean_order_stats(double log_r, double sigma, std::size_t n, std::size_t n_sims,
                                     const RandomStream& rng) {
  return simulate_grid_point(log_r, sigma, n, n_sims, rng).mean_order_stats;
}

namespace {

struct HalfFit {
  BasisCoefficients coeffs{};
  double max_error = 0.0;
};

// Fits order statistics first..last (1-based, inclusive).
HalfFit fit_half(std::span<const double> mean_os, std::size_t n, std::size_t first, std::size_t last) {
  const std::size_t rows = last - first + 1;
  const std::size_t p = std::min(kBasisSize, rows - 1);
  Eigen::MatrixXd design(rows, p);
  Eigen::VectorXd response(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t t = first + i;
    const auto basis = surrogate_basis(static_cast<double>(t) / static_cast<double>(n));
    for (std::size_t k = 0; k < p; ++k) design(i, k) = basis[k];
    response(i) = mean_os[t - 1];
  }
  const LinearFit fit = ols_fit(design, response);
  HalfFit out;
  for (std::size_t k = 0; k < p; ++k) out.coeffs[k] = fit.coefficients(k);
  out.max_error = (response - design * fit.coefficients).cwiseAbs().maxCoeff();
  return out;
}

double eval_basis(const BasisCoefficients& coeffs, double x) {
  const auto basis = surrogate_basis(x);
  double v = 0.0;
  for (std::size_t k = 0; k < kBasisSize; ++k) v += coeffs[k] * basis[k];
  return v;
}

}  // namespace

SurrogateFit fit_surrogate(std::span<const double> mean_os, std::size_t n) {
  if (n < 8) throw std::invalid_argument("fit_surrogate: n must be >= 8");
  if (mean_os.size() != n) throw std::invalid_argument("fit_surrogate: expected n order statistics");
  const std::size_t half = n / 2;

  const HalfFit lower = fit_half(mean_os, n, 1, half);
  const HalfFit upper = fit_half(mean_os, n, half + 1, n - 2);
  SurrogateFit fit;
  fit.coeffs_lower = lower.coeffs;
  fit.coeffs_upper = upper.coeffs;
  fit.max_error_lower = lower.max_error;
  fit.max_error_upper = upper.max_error;
  fit.top_two = {mean_os[n - 2], mean_os[n - 1]};
  return fit;
}

std::vector<double> eval_surrogate(const SurrogateEntry& entry, std::size_t n) {
  if (n != entry.n)
    throw std::invalid_argument("eval_surrogate: entry was built for n=" + std::to_string(entry.n) +
                                ", requested n=" + std::to_string(n));
  if (n < 8) throw std::invalid_argument("eval_surrogate: n must be >= 8");
  const std::size_t half = n / 2;
  std::vector<double> f(n);
  for (std::size_t t = 1; t <= n - 2; ++t) {
    const double x = static_cast<double>(t) / static_cast<double>(n);
    f[t - 1] = eval_basis(t <= half ? entry.coeffs_lower : entry.coeffs_upper, x);
  }
  f[n - 2] = entry.top_two[0];
  f[n - 1] = entry.top_two[1];
  return f;
}

SurrogateEntry build_entry(double log_r, double sigma, std::size_t n, std::size_t n_sims,
                           double beta, const RandomStream& rng) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  GridPointSample sample = simulate_grid_point(log_r, sigma, n, n_sims, rng);
  const SurrogateFit fit = fit_surrogate(sample.mean_order_stats, n);

  SurrogateEntry entry;
  entry.n = n;
  entry.log_r = log_r;
  entry.sigma = sigma;
  entry.coeffs_lower = fit.coeffs_lower;
  entry.coeffs_upper = fit.coeffs_upper;
  entry.top_two = fit.top_two;
  std::sort(sample.sum_n.begin(), sample.sum_n.end());
  entry.q_lo_sum_n = sorted_quantile(sample.sum_n, (1.0 - beta) / 2.0);
  entry.q_hi_sum_n = sorted_quantile(sample.sum_n, (1.0 + beta) / 2.0);
  return entry;
}

SurrogateTable build_table(const GridSpec& grid, const TableBuildOptions& options) {
  grid.validate();
  if (options.n_sims < 100) throw std::invalid_argument("n_sims must be >= 100");
  if (options.n < 8) throw std::invalid_argument("n must be >= 8");
  if (!(options.beta > 0.0 && options.beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");

  SurrogateTable table;
  table.n = options.n;
  table.grid = grid;
  table.n_sims = options.n_sims;
  table.seed = options.seed;
  table.beta = options.beta;
  table.entries.resize(grid.size());

  const RandomStream root(options.seed);
  const std::size_t n_sigma = grid.sigma.size();
  std::vector<std::string> errors(grid.size());
  std::mutex progress_mutex;
  std::size_t done = 0;

  parallel_for(grid.size(), options.workers, [&](std::size_t k) {
    const double log_r = grid.log_r[k / n_sigma];
    const double sigma = grid.sigma[k % n_sigma];
    try {
      table.entries[k] = build_entry(log_r, sigma, options.n, options.n_sims, options.beta, root.derive(k));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "(log_r=" << log_r << ", sigma=" << sigma << "): " << e.what();
      errors[k] = msg.str();
    }
    if (options.progress) {
      std::lock_guard lock(progress_mutex);
      options.progress(++done, grid.size(), table.entries[k]);
    }
  });

  std::vector<std::string> failures;
  std::copy_if(errors.begin(), errors.end(), std::back_inserter(failures),
               [](const std::string& s) { return !s.empty(); });
  if (!failures.empty())
    throw TableBuildError("table build failed at " + std::to_string(failures.size()) + " grid point(s)",
                          std::move(failures));
  return table;
}

namespace {

// Index of the axis value closest to v; ties go to the smaller value.
std::size_t nearest_on_axis(const std::vector<double>& axis, double v) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), v);
  if (it == axis.begin()) return 0;
  if (it == axis.end()) return axis.size() - 1;
  const auto hi = static_cast<std::size_t>(it - axis.begin());
  return (v - axis[hi - 1] <= axis[hi] - v) ? hi - 1 : hi;
}

}  // namespace

const SurrogateEntry& nearest_entry(const SurrogateTable& table, double log_r, double sigma) {
  const auto& g = table.grid;
  if (table.entries.size() != g.size()) throw std::logic_error("nearest_entry: table is incomplete");
  if (!(log_r >= g.log_r.front() && log_r <= g.log_r.back() && sigma >= g.sigma.front() &&
        sigma <= g.sigma.back())) {
    std::ostringstream msg;
    msg << "query (log_r=" << log_r << ", sigma=" << sigma << ") outside grid box [" << g.log_r.front()
        << ", " << g.log_r.back() << "] x [" << g.sigma.front() << ", " << g.sigma.back() << "]";
    throw RangeError(msg.str());
  }
  // Squared distance separates over the axes of a product grid.
  const std::size_t i = nearest_on_axis(g.log_r, log_r);
  const std::size_t j = nearest_on_axis(g.sigma, sigma);
  return table.entries[i * g.sigma.size() + j];
}

namespace {

constexpr const char* kTableHeader =
    "n,log_r,sigma,cl0,cl1,cl2,cl3,cl4,cl5,cl6,cl7,cl8,cu0,cu1,cu2,cu3,cu4,cu5,cu6,cu7,cu8,"
    "os_nm1,os_n,q_lo_sumN,q_hi_sumN";
constexpr std::size_t kTableColumns = 25;

std::string format_real(double v) {
  // Shortest text that reads back to the same double.
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_real(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw FormatError("table line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

void write_table(std::ostream& out, const SurrogateTable& table) {
  out << "# n_sims=" << table.n_sims << " seed=" << table.seed << " beta=" << format_real(table.beta)
      << '\n';
  out << kTableHeader << '\n';
  for (const auto& e : table.entries) {
    out << e.n << ',' << format_real(e.log_r) << ',' << format_real(e.sigma);
    for (double c : e.coeffs_lower) out << ',' << format_real(c);
    for (double c : e.coeffs_upper) out << ',' << format_real(c);
    out << ',' << format_real(e.top_two[0]) << ',' << format_real(e.top_two[1]) << ','
        << format_real(e.q_lo_sum_n) << ',' << format_real(e.q_hi_sum_n) << '\n';
  }
}

void write_table(const std::filesystem::path& file, const SurrogateTable& table) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  write_table(out, table);
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

SurrogateTable read_table(std::istream& in) {
  SurrogateTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "n_sims") table.n_sims = std::stoull(value);
        else if (key == "seed") table.seed = std::stoull(value);
        else if (key == "beta") table.beta = parse_real(value, line_no);
      }
      continue;
    }
    if (!header_seen) {
      if (line != kTableHeader) throw FormatError("table: unexpected header on line " + std::to_string(line_no));
      header_seen = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != kTableColumns)
      throw FormatError("table line " + std::to_string(line_no) + ": expected 25 columns");
    SurrogateEntry e;
    e.n = static_cast<std::size_t>(parse_real(f[0], line_no));
    e.log_r = parse_real(f[1], line_no);
    e.sigma = parse_real(f[2], line_no);
    for (std::size_t k = 0; k < kBasisSize; ++k) {
      e.coeffs_lower[k] = parse_real(f[3 + k], line_no);
      e.coeffs_upper[k] = parse_real(f[12 + k], line_no);
    }
    e.top_two = {parse_real(f[21], line_no), parse_real(f[22], line_no)};
    e.q_lo_sum_n = parse_real(f[23], line_no);
    e.q_hi_sum_n = parse_real(f[24], line_no);
    table.entries.push_back(e);
  }
  if (!header_seen) throw FormatError("table: missing header");
  if (table.entries.empty()) throw FormatError("table: no entries");

  table.n = table.entries.front().n;
  for (const auto& e : table.entries) {
    if (e.n != table.n) throw FormatError("table: entries disagree on n");
    table.grid.log_r.push_back(e.log_r);
    table.grid.sigma.push_back(e.sigma);
  }
  for (auto* axis : {&table.grid.log_r, &table.grid.sigma}) {
    std::sort(axis->begin(), axis->end());
    axis->erase(std::unique(axis->begin(), axis->end()), axis->end());
  }
  if (table.grid.size() != table.entries.size()) throw FormatError("table: rows do not form a full grid");
  std::sort(table.entries.begin(), table.entries.end(), [](const auto& a, const auto& b) {
    return a.log_r != b.log_r ? a.log_r < b.log_r : a.sigma < b.sigma;
  });
  for (std::size_t k = 0; k < table.entries.size(); ++k) {
    const auto& e = table.entries[k];
    if (e.log_r != table.grid.log_r[k / table.grid.sigma.size()] ||
        e.sigma != table.grid.sigma[k % table.grid.sigma.size()])
      throw FormatError("table: rows do not form a full grid");
  }
  return table;
}

SurrogateTable read_table(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return read_table(in);
}

}  // namespace ricker
