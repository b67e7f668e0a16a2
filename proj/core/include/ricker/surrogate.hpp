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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ricker/random_stream.hpp"

namespace ricker {

/// Product grid over (log r, sigma). Both axes strictly increasing.
struct GridSpec {
  std::vector<double> log_r;
  std::vector<double> sigma;

  /// log r_i = 1.05 + 4 i / n_g,  sigma_i = 0.05 + 1.1 (i - 1) / (n_g - 1),  i = 1..n_g.
  static GridSpec standard(std::size_t n_g = 30);
  /// Evenly spaced axes, endpoints included. A count of 1 places the single value at `lo`.
  static GridSpec uniform(double log_r_lo, double log_r_hi, std::size_t log_r_count,
                          double sigma_lo, double sigma_hi, std::size_t sigma_count);

  std::size_t size() const noexcept { return log_r.size() * sigma.size(); }
  void validate() const;
};

inline constexpr std::size_t kBasisSize = 9;
using BasisCoefficients = std::array<double, kBasisSize>;

/// 1, x, ..., x^6, sin(3 pi x), cos(3 pi x).
std::array<double, kBasisSize> surrogate_basis(double x);

/// The 22 stored values of one grid point plus its coordinates.
struct SurrogateEntry {
  std::size_t n = 0;
  double log_r = 0.0;
  double sigma = 0.0;
  BasisCoefficients coeffs_lower{};
  BasisCoefficients coeffs_upper{};
  std::array<double, 2> top_two{};
  double q_lo_sum_n = 0.0;
  double q_hi_sum_n = 0.0;
};

struct SurrogateTable {
  std::size_t n = 0;
  GridSpec grid;
  /// Row-major over the grid: entry (i, j) is at i * grid.sigma.size() + j.
  std::vector<SurrogateEntry> entries;
  std::size_t n_sims = 0;
  std::uint64_t seed = 0;
  double beta = 0.99;
};

/// Output of the order-statistic fit, with the largest absolute residual on
/// each half.
struct SurrogateFit {
  BasisCoefficients coeffs_lower{};
  BasisCoefficients coeffs_upper{};
  std::array<double, 2> top_two{};
  double max_error_lower = 0.0;
  double max_error_upper = 0.0;
};

/// Simulated paths at one grid point: mean sorted log N and the sums of N.
struct GridPointSample {
  std::vector<double> mean_order_stats;
  std::vector<double> sum_n;
};

/// Path i uses rng.derive(i). Divergence errors are rethrown with the grid point attached.
GridPointSample simulate_grid_point(double log_r, double sigma, std::size_t n, std::size_t n_sims,
                                    const RandomStream& rng);

/// Componentwise mean of the ascending-sorted log N over n_sims paths.
std::vector<double> mean_order_stats(double log_r, double sigma, std::size_t n, std::size_t n_sims,
                                     const RandomStream& rng);

/// Least squares on the basis with x = t / n: t = 1..floor(n/2) for the lower
/// fit, t = floor(n/2)+1..n-2 for the upper fit. The two largest values are
/// stored verbatim. A half with fewer than 10 rows uses only its leading
/// (rows - 1) basis functions; the remaining coefficients are zero.
SurrogateFit fit_surrogate(std::span<const double> mean_os, std::size_t n);

/// f(t) for t = 1..n.
std::vector<double> eval_surrogate(const SurrogateEntry& entry, std::size_t n);

SurrogateEntry build_entry(double log_r, double sigma, std::size_t n, std::size_t n_sims,
                           double beta, const RandomStream& rng);

/// Lists the grid points whose simulation failed.
class TableBuildError : public std::runtime_error {
 public:
  TableBuildError(const std::string& what, std::vector<std::string> failures)
      : std::runtime_error(what), failures_(std::move(failures)) {}
  const std::vector<std::string>& failures() const noexcept { return failures_; }

 private:
  std::vector<std::string> failures_;
};

struct TableBuildOptions {
  std::size_t n = 100;
  std::size_t n_sims = 10000;
  double beta = 0.99;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  /// Called once per finished grid point, serialized, in completion order.
  std::function<void(std::size_t done, std::size_t total, const SurrogateEntry&)> progress;
};

/// Grid point k uses RandomStream(seed).derive(k).
SurrogateTable build_table(const GridSpec& grid, const TableBuildOptions& options);

/// Closest entry in (log r, sigma); ties go to the smaller log r, then the
/// smaller sigma. Throws RangeError outside the grid's bounding box.
const SurrogateEntry& nearest_entry(const SurrogateTable& table, double log_r, double sigma);

void write_table(std::ostream& out, const SurrogateTable& table);
void write_table(const std::filesystem::path& file, const SurrogateTable& table);
SurrogateTable read_table(std::istream& in);
SurrogateTable read_table(const std::filesystem::path& file);

}  // namespace ricker
