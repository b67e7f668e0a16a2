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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ricker/random_stream.hpp"

namespace ricker {

/// One candidate model: growth on the log scale, innovation SD, observation scale.
struct Theta {
  double log_r = 0.0;
  double sigma = 0.0;
  double phi = 1.0;
};

/// Throws std::invalid_argument unless sigma >= 0, phi > 0 and log_r finite.
void validate(const Theta& theta);

/// Latent population path. Stored on the log scale: values far below the
/// smallest positive double stay representable there.
struct LatentPath {
  std::vector<double> log_values;

  std::size_t size() const noexcept { return log_values.size(); }
  double value(std::size_t t) const;
  std::vector<double> values() const;
};

struct ObservationSeries {
  std::vector<std::int64_t> counts;

  std::size_t size() const noexcept { return counts.size(); }
  std::int64_t total() const noexcept;
};

inline constexpr std::size_t kDefaultBurnIn = 100;

/// Paths are aborted once log N exceeds this (exp overflows just above 709).
inline constexpr double kLogDivergenceBound = 700.0;

/// Iterates log N(t+1) = log r + log N(t) - N(t) + sigma * eps(t+1) from
/// log N = 0, drops `burn_in` iterates and returns the next `n`.
/// Throws DivergenceError when log N exceeds kLogDivergenceBound.
LatentPath simulate_latent(const Theta& theta, std::size_t n, std::size_t burn_in,
                           RandomStream& rng);

/// Exact Poisson draw. Sequential inversion below mean 10, Hormann's PTRS
/// transformed rejection above.
std::int64_t poisson_draw(double lambda, RandomStream& rng);

/// Independent Poisson(phi * N(t)) counts given the path.
ObservationSeries observe(const LatentPath& path, double phi, RandomStream& rng);

/// simulate_latent on rng.derive(0), then observe on rng.derive(1).
ObservationSeries simulate_series(const Theta& theta, std::size_t n, const RandomStream& rng,
                                  std::size_t burn_in = kDefaultBurnIn);

// Series file: one nonnegative integer per line.
void write_series(const std::filesystem::path& file, const ObservationSeries& series);
ObservationSeries read_series(const std::filesystem::path& file);

}  // namespace ricker
