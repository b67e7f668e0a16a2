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
#include <span>
#include <vector>

#include "ricker/model.hpp"
#include "ricker/surrogate.hpp"

namespace ricker {

inline constexpr double kDefaultDelta = 0.01;

/// Approximation interval for phi derived from the total count.
struct PhiInterval {
  double lo = 0.0;
  double hi = 0.0;
  double lambda_l = 0.0;
  double lambda_u = 0.0;
  /// lambda_l fell below the inversion bracket and was replaced by its floor.
  bool floored = false;
};

/// Lag-one regression of log(y(t)/phi + delta) on
/// [1, log(y(t-1)/phi + delta), y(t-1)/phi], t = 2..n.
struct DynamicsFit {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double resid_sd = 0.0;
  double delta = kDefaultDelta;
};

inline constexpr std::size_t kNumStats = 5;

/// The five tested statistics of one series. When the dynamics regression is
/// degenerate the first four entries are NaN and `dynamics_valid` is false.
struct StatVector {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double resid_sd = 0.0;
  double k_dist = 0.0;
  bool dynamics_valid = true;

  std::array<double, kNumStats> values() const { return {beta1, beta2, beta3, resid_sd, k_dist}; }
};

/// Round-half-up of phi * exp(f(t)) over the surrogate curve.
std::vector<std::int64_t> reference_sample(const SurrogateEntry& entry, double phi, std::size_t n);
std::vector<std::int64_t> reference_sample(std::span<const double> surrogate, double phi);

/// sup_x |F_a(x) - F_b(x)| between the empirical CDFs.
double kolmogorov_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b);
/// As above for inputs already sorted ascending.
double kolmogorov_distance_sorted(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// [lambda_l / q_hi, lambda_u / q_lo] with ppois(sum_y, lambda_l) = (1 + beta) / 2 and
/// ppois(sum_y, lambda_u) = (1 - beta) / 2.
PhiInterval phi_interval(std::int64_t sum_y, double q_lo_sum_n, double q_hi_sum_n, double beta);

/// Throws DegeneracyError ("dynamics degenerate") for a collinear design.
DynamicsFit dynamics_fit(std::span<const double> series, double phi, double delta = kDefaultDelta);
DynamicsFit dynamics_fit(const ObservationSeries& series, double phi, double delta = kDefaultDelta);

/// phi exp(beta1) (y(t-1)/phi + delta)^beta2 exp(beta3 y(t-1)/phi), t = 2..n.
std::vector<double> forecast(std::span<const double> series, double phi, double delta,
                             const DynamicsFit& fit);
std::vector<double> forecast(const ObservationSeries& series, double phi, double delta,
                             const DynamicsFit& fit);

StatVector stat_vector(const ObservationSeries& series, double phi, const SurrogateEntry& entry,
                       double delta = kDefaultDelta);
/// Variant for repeated use against one reference sample, sorted ascending.
StatVector stat_vector_sorted_reference(const ObservationSeries& series, double phi,
                                        std::span<const std::int64_t> sorted_reference,
                                        double delta = kDefaultDelta);

}  // namespace ricker
