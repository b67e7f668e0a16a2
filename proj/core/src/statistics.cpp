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

#include "ricker/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Core>

#include "ricker/errors.hpp"
#include "ricker/kernels.hpp"

namespace ricker {

std::vector<std::int64_t> reference_sample(std::span<const double> surrogate, double phi) {
  if (!(phi > 0.0)) throw std::invalid_argument("reference_sample: phi must be > 0");
  std::vector<std::int64_t> out(surrogate.size());
  for (std::size_t t = 0; t < surrogate.size(); ++t) {
    const double v = phi * std::exp(surrogate[t]);
    if (!std::isfinite(v) || v >= 9.0e18)
      throw std::overflow_error("reference_sample: phi * exp(f) overflows at t=" + std::to_string(t + 1));
    out[t] = static_cast<std::int64_t>(std::floor(v + 0.5));
  }
  return out;
}

std::vector<std::int64_t> reference_sample(const SurrogateEntry& entry, double phi, std::size_t n) {
  return reference_sample(eval_surrogate(entry, n), phi);
}

double kolmogorov_distance_sorted(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("kolmogorov_distance: empty input");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double sup = 0.0;
  // Step both CDFs through each support point in increasing order.
  while (i < a.size() || j < b.size()) {
    std::int64_t x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j]))
      x = a[i];
    else
      x = b[j];
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    sup = std::max(sup, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return sup;
}

double kolmogorov_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  std::vector<std::int64_t> sa(a.begin(), a.end());
  std::vector<std::int64_t> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return kolmogorov_distance_sorted(sa, sb);
}

PhiInterval phi_interval(std::int64_t sum_y, double q_lo_sum_n, double q_hi_sum_n, double beta) {
  if (sum_y < 0) throw std::invalid_argument("phi_interval: sum_y must be >= 0");
  if (!(q_lo_sum_n > 0.0) || !(q_hi_sum_n >= q_lo_sum_n))
    throw std::invalid_argument("phi_interval: need 0 < q_lo <= q_hi");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("phi_interval: beta must lie in (0, 1)");

  PhiInterval out;
  try {
    out.lambda_l = invert_poisson_cdf(sum_y, (1.0 + beta) / 2.0);
  } catch (const std::domain_error&) {
    out.lambda_l = 1e-12;
    out.floored = true;
  }
  out.lambda_u = invert_poisson_cdf(sum_y, (1.0 - beta) / 2.0);
  out.lo = out.lambda_l / q_hi_sum_n;
  out.hi = out.lambda_u / q_lo_sum_n;
  return out;
}

DynamicsFit dynamics_fit(std::span<const double> series, double phi, double delta) {
  if (series.size() < 8) throw std::invalid_argument("dynamics_fit: series length must be >= 8");
  if (!(phi > 0.0)) throw std::invalid_argument("dynamics_fit: phi must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("dynamics_fit: delta must be > 0");

  const auto rows = static_cast<Eigen::Index>(series.size() - 1);
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd response(rows);
  double prev_log = std::log(series[0] / phi + delta);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double level = series[static_cast<std::size_t>(i)] / phi;
    const double cur_log = std::log(series[static_cast<std::size_t>(i) + 1] / phi + delta);
    design(i, 0) = 1.0;
    design(i, 1) = prev_log;
    design(i, 2) = level;
    response(i) = cur_log;
    prev_log = cur_log;
  }
  LinearFit fit;
  try {
    fit = ols_fit(design, response);
  } catch (const CollinearityError& e) {
    throw DegeneracyError(std::string("dynamics degenerate: ") + e.what());
  }
  return {fit.coefficients(0), fit.coefficients(1), fit.coefficients(2), fit.residual_sd, delta};
}

namespace {

std::vector<double> to_real(const ObservationSeries& series) {
  return {series.counts.begin(), series.counts.end()};
}

}  // namespace

DynamicsFit dynamics_fit(const ObservationSeries& series, double phi, double delta) {
  return dynamics_fit(to_real(series), phi, delta);
}

std::vector<double> forecast(std::span<const double> series, double phi, double delta,
                             const DynamicsFit& fit) {
  if (series.size() < 2) return {};
  std::vector<double> out(series.size() - 1);
  for (std::size_t t = 1; t < series.size(); ++t) {
    const double level = series[t - 1] / phi;
    out[t - 1] = phi * std::exp(fit.beta1) * std::pow(level + delta, fit.beta2) * std::exp(fit.beta3 * level);
  }
  return out;
}

std::vector<double> forecast(const ObservationSeries& series, double phi, double delta,
                             const DynamicsFit& fit) {
  return forecast(to_real(series), phi, delta, fit);
}

StatVector stat_vector_sorted_reference(const ObservationSeries& series, double phi,
                                        std::span<const std::int64_t> sorted_reference, double delta) {
  StatVector out;
  try {
    const DynamicsFit fit = dynamics_fit(series, phi, delta);
    out.beta1 = fit.beta1;
    out.beta2 = fit.beta2;
    out.beta3 = fit.beta3;
    out.resid_sd = fit.resid_sd;
  } catch (const DegeneracyError&) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    out.beta1 = out.beta2 = out.beta3 = out.resid_sd = nan;
    out.dynamics_valid = false;
  }
  std::vector<std::int64_t> sorted(series.counts);
  std::sort(sorted.begin(), sorted.end());
  out.k_dist = kolmogorov_distance_sorted(sorted, sorted_reference);
  return out;
}

StatVector stat_vector(const ObservationSeries& series, double phi, const SurrogateEntry& entry,
                       double delta) {
  std::vector<std::int64_t> reference = reference_sample(entry, phi, series.size());
  std::sort(reference.begin(), reference.end());
  return stat_vector_sorted_reference(series, phi, reference, delta);
}

}  // namespace ricker
