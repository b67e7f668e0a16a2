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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ricker/model.hpp"
#include "ricker/random_stream.hpp"
#include "ricker/statistics.hpp"
#include "ricker/surrogate.hpp"

namespace ricker {

/// Simulated statistic vectors for one theta. Rows with a degenerate
/// dynamics regression are kept, flagged through StatVector::dynamics_valid.
struct StatMatrix {
  std::vector<StatVector> rows;
  std::size_t flagged = 0;

  double degeneracy_rate() const {
    return rows.empty() ? 0.0 : static_cast<double>(flagged) / static_cast<double>(rows.size());
  }
};

/// Typical-value bounds per statistic. The Kolmogorov lower bound is -inf.
struct StatBounds {
  std::array<double, kNumStats> lower{};
  std::array<double, kNumStats> upper{};
};

/// Tail level spent on each side of the four two-sided statistics: (1 - alpha) / 10.
double two_sided_tail(double alpha);
/// Quantile level of the one-sided Kolmogorov bound: (4 + alpha) / 5.
double kolmogorov_level(double alpha);

/// Series i is simulate_series(theta, n, rng.derive(i)), scored against the
/// entry's reference sample at theta.phi. Throws DegeneracyError when more
/// than half the rows are flagged.
StatMatrix simulate_stats(const Theta& theta, const SurrogateEntry& entry, std::size_t n,
                          std::size_t n_sims, double delta, const RandomStream& rng);

/// Order-statistic bounds; each column uses its valid (non-NaN) values only.
StatBounds stat_bounds(const StatMatrix& sims, double alpha);

/// Add-one rank p-values: doubled smaller tail for the four dynamics
/// statistics, upper tail for the Kolmogorov distance. All zero when the
/// observed dynamics are degenerate.
std::array<double, kNumStats> p_values(const StatMatrix& sims, const StatVector& observed);

enum class ScatterKind { classical, kent_tyler };

/// Rank p-value of the observed Mahalanobis distance among the simulated ones,
/// with location/scatter from the non-degenerate simulated rows.
double mahalanobis_p(const StatMatrix& sims, const StatVector& observed, ScatterKind kind,
                     double nu = 2.0);

struct StatAssessment {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  double p = 0.0;
};

struct AdequacyReport {
  Theta theta;
  /// beta1, beta2, beta3, resid_sd.
  std::array<StatAssessment, 4> dynamics{};
  double k_dist = 0.0;
  double k_upper = 0.0;
  double k_p = 0.0;
  double min_p = 0.0;
  bool adequate = false;
  bool data_degenerate = false;
  double degeneracy_rate = 0.0;
  std::optional<double> maha_p_classical;
  std::optional<double> maha_p_kt;
  /// Non-empty when this theta could not be assessed; numeric fields are then meaningless.
  std::string failure;

  /// 4 x (lower, value, upper, p) followed by (k_dist, k_upper, k_p).
  std::array<double, 19> assessment_values() const;
};

struct AssessOptions {
  double alpha = 0.9;
  std::size_t n_sims = 1000;
  double delta = kDefaultDelta;
  bool maha_classical = false;
  bool maha_kent_tyler = false;
  double nu = 2.0;
};

/// Verdict for observed statistics against an existing simulation matrix.
AdequacyReport judge(const Theta& theta, const StatMatrix& sims, const StatVector& observed,
                     const AssessOptions& options);

AdequacyReport assess(const Theta& theta, const ObservationSeries& data, const SurrogateEntry& entry,
                      const AssessOptions& options, const RandomStream& rng);
AdequacyReport assess(const Theta& theta, const ObservationSeries& data, const SurrogateEntry& entry,
                      double alpha, std::size_t n_sims, double delta, const RandomStream& rng);

/// max(10, ceil((hi - lo) / 3)) evenly spaced points from lo to hi inclusive.
std::vector<double> phi_grid(const PhiInterval& interval);

struct RegionResult {
  std::vector<AdequacyReport> reports;
  double alpha = 0.0;
  std::size_t n_sims = 0;
  std::uint64_t seed = 0;
  /// Grid points whose phi interval could not be formed.
  std::vector<std::string> failures;

  /// Index of the report with the largest min_p among assessed reports.
  std::optional<std::size_t> best_index() const;
  std::size_t region_size() const;
};

struct ScanOptions {
  AssessOptions assess;
  std::size_t workers = 0;
};

/// Scans every table entry over its phi grid. Unit u (in entry-major, then
/// phi order) uses RandomStream(seed).derive(u), so the result does not
/// depend on the worker count.
RegionResult scan_region(const ObservationSeries& data, const SurrogateTable& table,
                         const ScanOptions& options, std::uint64_t seed);

struct CoverageOptions {
  std::size_t n_outer = 3000;
  std::size_t n_inner = 500;
  double delta = kDefaultDelta;
  std::size_t workers = 0;
};

/// Fraction of datasets simulated at theta judged adequate at theta, for
/// each alpha (all alphas share the same simulations). Replication i uses
/// rng.derive(i).
std::vector<double> coverage(const Theta& theta, const SurrogateEntry& entry,
                             std::span<const double> alphas, const CoverageOptions& options,
                             const RandomStream& rng);

struct Calibration {
  double alpha_star = 0.0;
  double alpha_tilde = 0.0;
};

/// alpha_star = coverage at alpha; alpha_tilde = 2 alpha - alpha_star.
Calibration calibrate_alpha(const Theta& theta, const SurrogateEntry& entry, double alpha,
                            const CoverageOptions& options, const RandomStream& rng);

void write_report(std::ostream& out, const RegionResult& result);
void write_report(const std::filesystem::path& file, const RegionResult& result);

}  // namespace ricker
