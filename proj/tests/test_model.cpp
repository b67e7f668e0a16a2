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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "ricker/errors.hpp"
#include "ricker/kernels.hpp"
#include "ricker/model.hpp"
#include "ricker/parallel.hpp"
#include "ricker/random_stream.hpp"

using namespace ricker;

namespace {

LatentPath constant_path(double log_n, std::size_t n) { return LatentPath{std::vector<double>(n, log_n)}; }

// Pearson chi-square p-value of Poisson(lambda) draws. Cells are pooled until
// their expected count reaches 5; the last cell absorbs the upper tail.
double poisson_gof_p(double lambda, std::size_t draws, RandomStream rng) {
  const boost::math::poisson_distribution<> dist(lambda);
  std::vector<double> counts;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto k = static_cast<std::size_t>(poisson_draw(lambda, rng));
    if (k >= counts.size()) counts.resize(k + 1, 0.0);
    counts[k] += 1.0;
  }

  const double n = static_cast<double>(draws);
  double stat = 0.0, used_expected = 0.0, used_observed = 0.0;
  double cell_expected = 0.0, cell_observed = 0.0;
  int cells = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    cell_expected += n * boost::math::pdf(dist, static_cast<double>(k));
    cell_observed += counts[k];
    const double rest = n - used_expected - cell_expected;
    if (cell_expected >= 5.0 && rest >= 5.0) {
      stat += (cell_observed - cell_expected) * (cell_observed - cell_expected) / cell_expected;
      used_expected += cell_expected;
      used_observed += cell_observed;
      cell_expected = cell_observed = 0.0;
      ++cells;
    }
  }
  const double tail_expected = n - used_expected;
  const double tail_observed = n - used_observed;
  stat += (tail_observed - tail_expected) * (tail_observed - tail_expected) / tail_expected;
  ++cells;
  const boost::math::chi_squared chi(cells - 1);
  return boost::math::cdf(boost::math::complement(chi, stat));
}

}  // namespace

TEST_CASE("random streams are reproducible and derivation ignores consumption") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  RandomStream fresh(42);
  CHECK(a.derive(3).key() == fresh.derive(3).key());
  CHECK(fresh.derive(3).key() != fresh.derive(4).key());
  CHECK(fresh.derive(3).derive(0).key() != fresh.derive(0).derive(3).key());

  RandomStream u(9);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = u.uniform();
    CHECK_MESSAGE((v >= 0.0 && v < 1.0), "uniform out of range");
    sum += v;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal deviates have unit variance") {
  RandomStream rng(8);
  double s1 = 0, s2 = 0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::fabs(s1 / n) < 0.01);
  CHECK(std::fabs(s2 / n - 1.0) < 0.01);
}

TEST_CASE("theta validation") {
  CHECK_NOTHROW(validate(Theta{3.6, 0.3, 10}));
  CHECK_THROWS_AS(validate(Theta{3.6, -0.1, 10}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Theta{3.6, 0.3, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Theta{NAN, 0.3, 1.0}), std::invalid_argument);
}

TEST_CASE("simulate_latent sits at the fixed point for log r = 1, sigma = 0") {
  RandomStream rng(1);
  const auto path = simulate_latent(Theta{1.0, 0.0, 1.0}, 5, 0, rng);
  REQUIRE(path.size() == 5);
  for (double v : path.values()) CHECK(v == 1.0);
}

TEST_CASE("sigma = 0 reproduces the deterministic Ricker map exactly") {
  RandomStream rng(1);
  const auto path = simulate_latent(Theta{2.1, 0.0, 1.0}, 100, kDefaultBurnIn, rng);
  const auto expected = oracle::ricker_orbit(2.1, 100, kDefaultBurnIn);
  for (std::size_t t = 0; t < 100; ++t)
    CHECK(path.log_values[t] == doctest::Approx(expected[t]).epsilon(1e-15));

  const auto long_path = simulate_latent(Theta{2.1, 0.0, 1.0}, 10000, 0, rng);
  const auto long_expected = oracle::ricker_orbit(2.1, 10000, 0);
  CHECK(long_path.log_values == long_expected);
}

TEST_CASE("latent paths stay positive and finite across the table grid") {
  for (double log_r : {1.1833, 3.0, 5.05})
    for (double sigma : {0.05, 0.6, 1.15}) {
      RandomStream rng(RandomStream(77).derive(static_cast<std::uint64_t>(log_r * 1000 + sigma * 100)));
      const auto path = simulate_latent(Theta{log_r, sigma, 1.0}, 5000, kDefaultBurnIn, rng);
      double mean = 0.0;
      for (double v : path.log_values) {
        REQUIRE(std::isfinite(v));
        mean += v;
      }
      CHECK(std::isfinite(mean / 5000));
    }
}

TEST_CASE("simulate_latent reports divergence with the step index") {
  RandomStream rng(1);
  try {
    simulate_latent(Theta{800.0, 0.0, 1.0}, 10, 0, rng);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("sum of N at (3.6, 0.3) matches the reference 99% range") {
  const RandomStream root(2024);
  std::vector<double> sums(10000);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    RandomStream rng = root.derive(i);
    const auto values = simulate_latent(Theta{3.6, 0.3, 1.0}, 100, kDefaultBurnIn, rng).values();
    sums[i] = std::accumulate(values.begin(), values.end(), 0.0);
  }
  // Reference: 342.0 and 378.2.
  CHECK(std::fabs(empirical_quantile(sums, 0.005) - 342.0) < 3.0);
  CHECK(std::fabs(empirical_quantile(sums, 0.995) - 378.2) < 3.0);
}

TEST_CASE("observe: zero means give zero counts") {
  RandomStream rng(3);
  const auto series = observe(constant_path(-1000.0, 50), 10.0, rng);
  for (auto c : series.counts) CHECK(c == 0);
  CHECK_THROWS_AS(observe(constant_path(0.0, 3), 0.0, rng), std::invalid_argument);
}

TEST_CASE("observe: Poisson(10) moments over a million draws") {
  RandomStream rng(4);
  const auto series = observe(constant_path(0.0, 1'000'000), 10.0, rng);
  double mean = 0.0;
  for (auto c : series.counts) mean += static_cast<double>(c);
  mean /= static_cast<double>(series.size());
  double var = 0.0, lag = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    const double d = static_cast<double>(series.counts[t]) - mean;
    var += d * d;
    if (t > 0) lag += d * (static_cast<double>(series.counts[t - 1]) - mean);
  }
  const double lag_corr = lag / var;
  var /= static_cast<double>(series.size() - 1);
  CHECK(std::fabs(mean - 10.0) <= 0.05);
  CHECK(std::fabs(var - 10.0) <= 0.3);
  CHECK(std::fabs(lag_corr) < 0.01);
}

TEST_CASE("poisson_draw passes chi-square goodness of fit across regimes") {
  const RandomStream root(55);
  std::uint64_t slice = 0;
  for (double lambda : {0.3, 4.0, 9.99, 10.0, 37.5, 1000.0}) {
    const double p = poisson_gof_p(lambda, 50000, root.derive(slice++));
    CAPTURE(lambda);
    CHECK(p > 1e-4);
  }
}

TEST_CASE("poisson_draw is exact in the mean for very large lambda") {
  RandomStream rng(6);
  const double lambda = 1e7;
  double s1 = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(poisson_draw(lambda, rng));
    s1 += k;
    s2 += k * k;
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  CHECK(std::fabs(mean - lambda) < 5.0 * std::sqrt(lambda / n));
  CHECK(var == doctest::Approx(lambda).epsilon(0.05));
  CHECK_THROWS_AS(poisson_draw(INFINITY, rng), std::invalid_argument);
}

TEST_CASE("observed totals at (exp(3.6), 0.3, 10) are of the reference order") {
  const RandomStream root(31);
  double total = 0.0;
  for (std::size_t i = 0; i < 200; ++i)
    total += static_cast<double>(simulate_series(Theta{3.6, 0.3, 10.0}, 100, root.derive(i)).total());
  // One reference realization had total 3473.
  CHECK(total / 200 > 3300);
  CHECK(total / 200 < 3900);
}

TEST_CASE("simulate_series with a vanishing phi yields zeros") {
  const auto series = simulate_series(Theta{1.0, 0.0, 1e-12}, 100, RandomStream(8));
  for (auto c : series.counts) CHECK(c == 0);
}

TEST_CASE("simulate_series is deterministic and worker-count invariant") {
  const Theta theta{3.6, 0.3, 10.0};
  const RandomStream root(99);
  CHECK(simulate_series(theta, 100, root).counts == simulate_series(theta, 100, root).counts);

  auto batch = [&](std::size_t workers) {
    std::vector<ObservationSeries> out(1000);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = simulate_series(theta, 100, root.derive(i)); });
    return out;
  };
  const auto one = batch(1);
  const auto eight = batch(8);
  for (std::size_t i = 0; i < one.size(); ++i) REQUIRE(one[i].counts == eight[i].counts);
}

TEST_CASE("series files round-trip and reject malformed lines") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto file = dir / "ricker_series_roundtrip.txt";
  const auto series = simulate_series(Theta{3.6, 0.3, 10.0}, 100, RandomStream(12));
  write_series(file, series);
  CHECK(read_series(file).counts == series.counts);

  const auto bad = dir / "ricker_series_bad.txt";
  std::ofstream(bad) << "3\n-1\n";
  CHECK_THROWS_AS(read_series(bad), FormatError);
  std::ofstream(bad) << "3\n4.5\n";
  CHECK_THROWS_AS(read_series(bad), FormatError);
  std::filesystem::remove(file);
  std::filesystem::remove(bad);
}
