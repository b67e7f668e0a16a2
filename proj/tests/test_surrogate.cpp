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
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ricker/errors.hpp"
#include "ricker/model.hpp"
#include "ricker/surrogate.hpp"

using namespace ricker;

namespace {

std::vector<double> one_plus_x_squared(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t t = 1; t <= n; ++t) {
    const double x = static_cast<double>(t) / static_cast<double>(n);
    v[t - 1] = 1.0 + x * x;
  }
  return v;
}

SurrogateEntry entry_from_fit(const SurrogateFit& fit, std::size_t n) {
  SurrogateEntry e;
  e.n = n;
  e.coeffs_lower = fit.coeffs_lower;
  e.coeffs_upper = fit.coeffs_upper;
  e.top_two = fit.top_two;
  e.q_lo_sum_n = 1.0;
  e.q_hi_sum_n = 2.0;
  return e;
}

SurrogateTable small_table(std::size_t workers = 1) {
  TableBuildOptions options;
  options.n = 20;
  options.n_sims = 200;
  options.seed = 5;
  options.workers = workers;
  return build_table(GridSpec::uniform(2.0, 3.5, 2, 0.1, 0.5, 2), options);
}

}  // namespace

TEST_CASE("standard grid reproduces the reference grid values") {
  const auto g = GridSpec::standard(30);
  REQUIRE(g.log_r.size() == 30);
  REQUIRE(g.sigma.size() == 30);
  CHECK(g.log_r.front() == doctest::Approx(1.05 + 4.0 / 30));  // exp(1.18)
  CHECK(g.log_r[19] == doctest::Approx(3.7167).epsilon(1e-4));  // exp(3.716)
  CHECK(g.log_r.back() == doctest::Approx(5.05));
  CHECK(g.sigma.front() == doctest::Approx(0.05));
  CHECK(g.sigma[7] == doctest::Approx(0.3155).epsilon(1e-3));  // 0.315
  CHECK(g.sigma.back() == doctest::Approx(1.15));
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_AS(GridSpec::standard(1), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec::uniform(2.0, 1.0, 3, 0.1, 0.2, 2), std::invalid_argument);
}

TEST_CASE("mean_order_stats at the fixed point is identically zero") {
  const auto m = mean_order_stats(1.0, 0.0, 50, 100, RandomStream(1));
  for (double v : m) CHECK(v == 0.0);
}

TEST_CASE("mean_order_stats with sigma = 0 is the sorted deterministic orbit") {
  auto orbit = oracle::ricker_orbit(2.1, 100, kDefaultBurnIn);
  std::sort(orbit.begin(), orbit.end());
  const auto m = mean_order_stats(2.1, 0.0, 100, 100, RandomStream(1));
  for (std::size_t t = 0; t < 100; ++t) CHECK(m[t] == doctest::Approx(orbit[t]).epsilon(1e-12));
}

TEST_CASE("mean_order_stats at (2.1, 0.05) is two plateaus joined at the middle") {
  const auto m = mean_order_stats(2.1, 0.05, 100, 1000, RandomStream(3));
  CHECK(std::is_sorted(m.begin(), m.end()));
  // Near a two-cycle half the path sits on each branch.
  std::vector<double> gaps(99);
  for (std::size_t t = 0; t < 99; ++t) gaps[t] = m[t + 1] - m[t];
  const auto widest = std::max_element(gaps.begin(), gaps.end()) - gaps.begin();
  CHECK(widest >= 44);
  CHECK(widest <= 54);
  std::vector<double> sorted_gaps = gaps;
  std::sort(sorted_gaps.begin(), sorted_gaps.end());
  CHECK(gaps[widest] > 10 * sorted_gaps[49]);
}

TEST_CASE("mean_order_stats agrees across disjoint seeds within Monte-Carlo error") {
  const std::size_t n = 100, sims = 5000;
  const auto a = mean_order_stats(3.6, 0.3, n, sims, RandomStream(101));
  const auto b = mean_order_stats(3.6, 0.3, n, sims, RandomStream(202));

  // Per-component standard deviation from an independent third batch.
  std::vector<double> s1(n, 0.0), s2(n, 0.0);
  const RandomStream root(303);
  const std::size_t ref = 2000;
  for (std::size_t i = 0; i < ref; ++i) {
    RandomStream rng = root.derive(i);
    auto path = simulate_latent(Theta{3.6, 0.3, 1.0}, n, kDefaultBurnIn, rng).log_values;
    std::sort(path.begin(), path.end());
    for (std::size_t t = 0; t < n; ++t) {
      s1[t] += path[t];
      s2[t] += path[t] * path[t];
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    const double mean = s1[t] / ref;
    const double sd = std::sqrt(std::max(0.0, s2[t] / ref - mean * mean));
    const double se_diff = sd * std::sqrt(2.0 / static_cast<double>(sims));
    CAPTURE(t);
    CHECK(std::fabs(a[t] - b[t]) <= 3.0 * se_diff);
  }
}

TEST_CASE("fit_surrogate on a zero curve gives zero coefficients") {
  const auto fit = fit_surrogate(std::vector<double>(100, 0.0), 100);
  for (double c : fit.coeffs_lower) CHECK(c == doctest::Approx(0.0));
  for (double c : fit.coeffs_upper) CHECK(c == doctest::Approx(0.0));
  CHECK(fit.top_two == std::array<double, 2>{0.0, 0.0});
}

TEST_CASE("fit_surrogate recovers an exactly representable target") {
  const auto target = one_plus_x_squared(100);
  const auto fit = fit_surrogate(target, 100);
  const BasisCoefficients expected{1, 0, 1, 0, 0, 0, 0, 0, 0};
  for (std::size_t k = 0; k < kBasisSize; ++k) {
    CHECK(std::fabs(fit.coeffs_lower[k] - expected[k]) <= 1e-8);
    CHECK(std::fabs(fit.coeffs_upper[k] - expected[k]) <= 1e-8);
  }
  CHECK(fit.max_error_lower <= 1e-10);
  CHECK(fit.max_error_upper <= 1e-10);

  const auto f = eval_surrogate(entry_from_fit(fit, 100), 100);
  for (std::size_t t = 0; t < 98; ++t) CHECK(std::fabs(f[t] - target[t]) <= 1e-8);
  CHECK(f[98] == target[98]);
  CHECK(f[99] == target[99]);
}

TEST_CASE("fit_surrogate truncates the basis when a half is too short") {
  // n = 20: the upper range t = 11..18 has only 8 rows.
  const auto target = one_plus_x_squared(20);
  const auto fit = fit_surrogate(target, 20);
  CHECK(fit.coeffs_upper[7] == 0.0);
  CHECK(fit.coeffs_upper[8] == 0.0);
  const auto f = eval_surrogate(entry_from_fit(fit, 20), 20);
  for (std::size_t t = 0; t < 18; ++t) CHECK(std::fabs(f[t] - target[t]) <= 1e-8);
  CHECK_THROWS_AS(fit_surrogate(std::vector<double>(6, 0.0), 6), std::invalid_argument);
}

TEST_CASE("odd n splits at floor(n / 2)") {
  const auto target = one_plus_x_squared(51);
  const auto fit = fit_surrogate(target, 51);
  const auto f = eval_surrogate(entry_from_fit(fit, 51), 51);
  for (std::size_t t = 0; t < 49; ++t) CHECK(std::fabs(f[t] - target[t]) <= 1e-8);
}

TEST_CASE("eval_surrogate round-trip error is bounded by the reported fit errors") {
  for (auto [log_r, sigma] : {std::pair{2.1, 0.05}, std::pair{3.6, 0.3}, std::pair{5.05, 1.15}}) {
    const auto m = mean_order_stats(log_r, sigma, 100, 500, RandomStream(4));
    const auto fit = fit_surrogate(m, 100);
    const auto f = eval_surrogate(entry_from_fit(fit, 100), 100);
    for (std::size_t t = 1; t <= 98; ++t) {
      const double bound = t <= 50 ? fit.max_error_lower : fit.max_error_upper;
      CHECK(std::fabs(f[t - 1] - m[t - 1]) <= bound * (1 + 1e-12) + 1e-12);
    }
    CHECK(f[98] == m[98]);
    CHECK(f[99] == m[99]);
  }
}

TEST_CASE("eval_surrogate of an all-zero entry") {
  SurrogateEntry e;
  e.n = 30;
  for (double v : eval_surrogate(e, 30)) CHECK(v == 0.0);
  CHECK_THROWS_AS(eval_surrogate(e, 31), std::invalid_argument);
}

TEST_CASE("build_table produces a structurally valid smoke table") {
  const auto table = small_table();
  REQUIRE(table.entries.size() == 4);
  for (const auto& e : table.entries) {
    CHECK(e.n == 20);
    CHECK(e.q_lo_sum_n < e.q_hi_sum_n);
    CHECK(e.top_two[0] <= e.top_two[1]);
  }
  CHECK(table.entries[1].log_r == 2.0);
  CHECK(table.entries[1].sigma == 0.5);
  CHECK(table.entries[2].log_r == 3.5);
}

TEST_CASE("build_table output does not depend on the worker count") {
  std::ostringstream one, eight;
  write_table(one, small_table(1));
  write_table(eight, small_table(8));
  CHECK(one.str() == eight.str());
}

TEST_CASE("build_table lists failed grid points") {
  TableBuildOptions options;
  options.n = 20;
  options.n_sims = 100;
  try {
    build_table(GridSpec::uniform(2.0, 800.0, 2, 0.1, 0.2, 2), options);
    FAIL("expected a build error");
  } catch (const TableBuildError& e) {
    CHECK(e.failures().size() == 2);
    CHECK(e.failures()[0].find("log_r=800") != std::string::npos);
  }
  CHECK_THROWS_AS(build_table(GridSpec::standard(2), TableBuildOptions{.n = 20, .n_sims = 50}),
                  std::invalid_argument);
}

TEST_CASE("table files round-trip bit-exactly") {
  const auto table = small_table();
  std::stringstream buffer;
  write_table(buffer, table);
  const auto back = read_table(buffer);
  CHECK(back.n == table.n);
  CHECK(back.n_sims == table.n_sims);
  CHECK(back.seed == table.seed);
  CHECK(back.beta == table.beta);
  CHECK(back.grid.log_r == table.grid.log_r);
  CHECK(back.grid.sigma == table.grid.sigma);
  REQUIRE(back.entries.size() == table.entries.size());
  for (std::size_t k = 0; k < table.entries.size(); ++k) {
    CHECK(eval_surrogate(back.entries[k], 20) == eval_surrogate(table.entries[k], 20));
    CHECK(back.entries[k].q_lo_sum_n == table.entries[k].q_lo_sum_n);
    CHECK(back.entries[k].q_hi_sum_n == table.entries[k].q_hi_sum_n);
  }
  std::istringstream bad("n,log_r\n1,2\n");
  CHECK_THROWS_AS(read_table(bad), FormatError);
}

TEST_CASE("nearest_entry lookup and tie-breaking") {
  SurrogateTable table;
  table.n = 10;
  table.grid = GridSpec::uniform(1.0, 4.0, 4, 0.1, 0.7, 4);
  for (double r : table.grid.log_r)
    for (double s : table.grid.sigma) {
      SurrogateEntry e;
      e.n = 10;
      e.log_r = r;
      e.sigma = s;
      table.entries.push_back(e);
    }

  const auto& exact = nearest_entry(table, 3.0, 0.3);
  CHECK(exact.log_r == 3.0);
  CHECK(exact.sigma == doctest::Approx(0.3));
  const auto& mid = nearest_entry(table, 2.5, 0.1);
  CHECK(mid.log_r == 2.0);
  CHECK_THROWS_AS(nearest_entry(table, 4.5, 0.3), RangeError);
  CHECK_THROWS_AS(nearest_entry(table, 2.0, 0.05), RangeError);

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ur(1.0, 4.0), us(0.1, 0.7);
  for (int i = 0; i < 2000; ++i) {
    const double r = ur(gen), s = us(gen);
    const SurrogateEntry* best = nullptr;
    double best_d = 1e300;
    for (const auto& e : table.entries) {
      const double d = (e.log_r - r) * (e.log_r - r) + (e.sigma - s) * (e.sigma - s);
      if (d < best_d) {
        best_d = d;
        best = &e;
      }
    }
    CHECK(&nearest_entry(table, r, s) == best);
  }
}
