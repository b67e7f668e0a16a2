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

#include "ricker/model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ricker/errors.hpp"

namespace ricker {

void validate(const Theta& theta) {
  if (!std::isfinite(theta.log_r)) throw std::invalid_argument("log_r must be finite");
  if (!(theta.sigma >= 0.0) || !std::isfinite(theta.sigma))
    throw std::invalid_argument("sigma must be finite and >= 0");
  if (!(theta.phi > 0.0) || !std::isfinite(theta.phi))
    throw std::invalid_argument("phi must be finite and > 0");
}

double LatentPath::value(std::size_t t) const { return std::exp(log_values.at(t)); }

std::vector<double> LatentPath::values() const {
  std::vector<double> out(log_values.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = std::exp(log_values[t]);
  return out;
}

std::int64_t ObservationSeries::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

LatentPath simulate_latent(const Theta& theta, std::size_t n, std::size_t burn_in,
                           RandomStream& rng) {
  validate(theta);
  if (n < 1) throw std::invalid_argument("simulate_latent: n must be >= 1");

  LatentPath path;
  path.log_values.resize(n);
  double log_n = 0.0;
  const std::size_t steps = burn_in + n;
  for (std::size_t step = 1; step <= steps; ++step) {
    log_n = theta.log_r + log_n - std::exp(log_n);
    if (theta.sigma > 0.0) log_n += theta.sigma * rng.normal();
    if (!(log_n <= kLogDivergenceBound)) {
      std::ostringstream msg;
      msg << "latent path diverged at step " << step << " (log N = " << log_n << ")";
      throw DivergenceError(msg.str(), step);
    }
    if (step > burn_in) path.log_values[step - burn_in - 1] = log_n;
  }
  return path;
}

namespace {

std::int64_t poisson_inversion(double lambda, RandomStream& rng) {
  // Sequential search; exact for small means.
  double u = rng.uniform();
  std::int64_t k = 0;
  double p = std::exp(-lambda);
  double cdf = p;
  while (u > cdf) {
    ++k;
    p *= lambda / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;  // tail exhausted in floating point
    cdf = next;
  }
  return k;
}

std::int64_t poisson_ptrs(double lambda, RandomStream& rng) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);

  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
    const double rhs = -lambda + kd * loglam - std::lgamma(kd + 1.0);
    if (lhs <= rhs) return static_cast<std::int64_t>(kd);
  }
}

}  // namespace

std::int64_t poisson_draw(double lambda, RandomStream& rng) {
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw std::invalid_argument("poisson_draw: mean must be finite and >= 0");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) return poisson_inversion(lambda, rng);
  return poisson_ptrs(lambda, rng);
}

ObservationSeries observe(const LatentPath& path, double phi, RandomStream& rng) {
  if (!(phi > 0.0)) throw std::invalid_argument("observe: phi must be > 0");
  ObservationSeries series;
  series.counts.resize(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) {
    const double lambda = phi * std::exp(path.log_values[t]);
    if (!std::isfinite(lambda))
      throw std::domain_error("observe: Poisson mean is not finite at t=" + std::to_string(t + 1));
    series.counts[t] = poisson_draw(lambda, rng);
  }
  return series;
}

ObservationSeries simulate_series(const Theta& theta, std::size_t n, const RandomStream& rng,
                                  std::size_t burn_in) {
  RandomStream latent_rng = rng.derive(0);
  RandomStream obs_rng = rng.derive(1);
  const LatentPath path = simulate_latent(theta, n, burn_in, latent_rng);
  return observe(path, theta.phi, obs_rng);
}

void write_series(const std::filesystem::path& file, const ObservationSeries& series) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  for (const auto c : series.counts) out << c << '\n';
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

ObservationSeries read_series(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  ObservationSeries series;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    std::size_t used = 0;
    long long value = 0;
    try {
      value = std::stoll(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || value < 0)
      throw FormatError(file.string() + ":" + std::to_string(line_no) +
                        ": expected a nonnegative integer, got '" + token + "'");
    series.counts.push_back(value);
  }
  return series;
}

}  // namespace ricker
