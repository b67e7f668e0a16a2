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


// ricker: build surrogate tables, simulate data, scan for adequate parameters
// and calibrate the probability allocation.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ricker/errors.hpp"
#include "ricker/model.hpp"
#include "ricker/region.hpp"
#include "ricker/surrogate.hpp"

namespace fs = std::filesystem;
using namespace ricker;

namespace {

enum ExitCode : int { kOk = 0, kValidation = 2, kCompute = 3, kEmptyRegion = 4 };

// Raised for bad user input detected after parsing; maps to kValidation.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t drawn = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << drawn << "\n";
  return drawn;
}

void require_writable_parent(const std::string& path) {
  const fs::path parent = fs::absolute(path).parent_path();
  if (!fs::is_directory(parent)) throw UsageError("output directory does not exist: " + parent.string());
}

// Write through a sibling temp file so readers never see a partial file.
void write_atomically(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

// ---- tables ----

struct TablesConfig {
  std::size_t n = 100;
  std::size_t grid = 30;
  std::size_t sims = 10000;
  double beta = 0.99;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t workers = 0;
  std::vector<double> log_r_range;
  std::vector<double> sigma_range;
  bool quiet = false;
};

GridSpec tables_grid(const TablesConfig& c) {
  if (c.log_r_range.empty() != c.sigma_range.empty())
    throw UsageError("--logr-range and --sigma-range must be given together");
  if (c.log_r_range.empty()) return GridSpec::standard(c.grid);
  auto count = [](double v, const char* flag) {
    if (!(v >= 1 && v == std::floor(v))) throw UsageError(std::string(flag) + ": count must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  return GridSpec::uniform(c.log_r_range[0], c.log_r_range[1], count(c.log_r_range[2], "--logr-range"),
                           c.sigma_range[0], c.sigma_range[1], count(c.sigma_range[2], "--sigma-range"));
}

int run_tables(const TablesConfig& c) {
  GridSpec grid;
  try {
    grid = tables_grid(c);
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  require_writable_parent(c.out);

  TableBuildOptions options;
  options.n = c.n;
  options.n_sims = c.sims;
  options.beta = c.beta;
  options.seed = resolve_seed(c.seed);
  options.workers = c.workers;
  if (!c.quiet) {
    options.progress = [](std::size_t done, std::size_t total, const SurrogateEntry& e) {
      std::fprintf(stderr, "[%zu/%zu] log_r=%.4f sigma=%.4f\n", done, total, e.log_r, e.sigma);
    };
  }

  const auto start = std::chrono::steady_clock::now();
  SurrogateTable table;
  try {
    table = build_table(grid, options);
  } catch (const TableBuildError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& f : e.failures()) std::cerr << "  " << f << "\n";
    return kCompute;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ostringstream text;
  write_table(text, table);
  write_atomically(c.out, text.str());
  std::fprintf(stderr, "wrote %zu entries to %s in %.2f s\n", table.entries.size(), c.out.c_str(), seconds);
  return kOk;
}

// ---- simulate ----

struct SimulateConfig {
  double log_r = 0;
  double sigma = 0;
  double phi = 0;
  std::size_t n = 100;
  std::size_t burn_in = kDefaultBurnIn;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_simulate(const SimulateConfig& c) {
  const Theta theta{c.log_r, c.sigma, c.phi};
  try {
    validate(theta);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!c.out.empty()) require_writable_parent(c.out);

  const auto series = simulate_series(theta, c.n, RandomStream(resolve_seed(c.seed)), c.burn_in);
  std::ostringstream text;
  for (auto y : series.counts) text << y << "\n";
  if (c.out.empty())
    std::cout << text.str();
  else
    write_atomically(c.out, text.str());
  return kOk;
}

// ---- analyze ----

struct AnalyzeConfig {
  std::string data;
  std::string table;
  double alpha = 0.9;
  std::size_t sims = 1000;
  double delta = kDefaultDelta;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string plotdata;
  std::vector<std::string> maha;
  double nu = 2.0;
  std::size_t workers = 0;
};

void write_plot_data(const std::string& prefix, const RegionResult& result) {
  const char* names[] = {"log_r", "sigma", "phi"};
  for (int axis = 0; axis < 3; ++axis) {
    std::ostringstream text;
    text.precision(10);
    text << names[axis] << ",min_p\n";
    for (const auto& r : result.reports) {
      const double x = axis == 0 ? r.theta.log_r : axis == 1 ? r.theta.sigma : r.theta.phi;
      text << x << "," << (r.failure.empty() ? r.min_p : 0.0) << "\n";
    }
    write_atomically(prefix + "_" + names[axis] + ".csv", text.str());
  }
}

int run_analyze(const AnalyzeConfig& c) {
  ObservationSeries data;
  SurrogateTable table;
  try {
    data = read_series(c.data);
    table = read_table(fs::path(c.table));
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (data.counts.size() != table.n)
    throw UsageError("data length " + std::to_string(data.counts.size()) + " does not match table n = " +
                     std::to_string(table.n));
  require_writable_parent(c.out);
  if (!c.plotdata.empty()) require_writable_parent(c.plotdata + "_phi.csv");

  ScanOptions options;
  options.assess.alpha = c.alpha;
  options.assess.n_sims = c.sims;
  options.assess.delta = c.delta;
  options.assess.nu = c.nu;
  for (const auto& kind : c.maha) {
    if (kind == "classical") options.assess.maha_classical = true;
    if (kind == "kt") options.assess.maha_kent_tyler = true;
  }
  options.workers = c.workers;

  const auto result = scan_region(data, table, options, resolve_seed(c.seed));
  std::ostringstream text;
  write_report(text, result);
  write_atomically(c.out, text.str());
  if (!c.plotdata.empty()) write_plot_data(c.plotdata, result);

  for (const auto& f : result.failures) std::cerr << "warning: " << f << "\n";
  const auto best = result.best_index();
  if (!best) {
    std::cout << "no parameter assessed successfully\n";
    return kCompute;
  }
  const auto& b = result.reports[*best];
  std::printf("theta*: log_r=%.6g sigma=%.6g phi=%.6g min_p=%.6g adequate=%d\n", b.theta.log_r,
              b.theta.sigma, b.theta.phi, b.min_p, b.adequate ? 1 : 0);
  std::printf("adequate: %zu of %zu\n", result.region_size(), result.reports.size());
  return result.region_size() == 0 ? kEmptyRegion : kOk;
}

// ---- calibrate ----

struct CalibrateConfig {
  double log_r = 0;
  double sigma = 0;
  double phi = 0;
  double alpha = 0.9;
  std::size_t outer = 3000;
  std::size_t inner = 500;
  double delta = kDefaultDelta;
  std::optional<std::uint64_t> seed;
  std::string table;
  std::size_t n = 100;
  std::size_t entry_sims = 10000;
  double beta = 0.99;
  std::size_t workers = 0;
};

int run_calibrate(const CalibrateConfig& c) {
  const Theta theta{c.log_r, c.sigma, c.phi};
  try {
    validate(theta);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (c.outer < 500) throw UsageError("--outer must be >= 500");

  const std::uint64_t seed = resolve_seed(c.seed);
  const RandomStream root(seed);
  SurrogateEntry entry;
  if (!c.table.empty()) {
    SurrogateTable table;
    try {
      table = read_table(fs::path(c.table));
      entry = nearest_entry(table, c.log_r, c.sigma);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  } else {
    entry = build_entry(c.log_r, c.sigma, c.n, c.entry_sims, c.beta, root.derive(0));
  }

  CoverageOptions options;
  options.n_outer = c.outer;
  options.n_inner = c.inner;
  options.delta = c.delta;
  options.workers = c.workers;
  const auto cal = calibrate_alpha(theta, entry, c.alpha, options, root.derive(1));
  std::printf("alpha=%.6g alpha_star=%.6g alpha_tilde=%.6g\n", c.alpha, cal.alpha_star, cal.alpha_tilde);
  return kOk;
}

template <class T>
CLI::Option* seed_option(CLI::App* app, std::optional<T>& seed) {
  return app->add_option("--seed", seed, "Random seed (drawn and logged when omitted)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adequate approximation of stochastic Ricker data"};
  app.require_subcommand(1);

  const auto open_unit = CLI::Range(0.0, 1.0);
  const auto positive = CLI::PositiveNumber;

  TablesConfig tc;
  auto* tables = app.add_subcommand("tables", "Build a surrogate table over a (log_r, sigma) grid");
  tables->add_option("--n", tc.n, "Series length")->check(CLI::Range(std::size_t{8}, std::size_t{1} << 24));
  tables->add_option("--grid", tc.grid, "Points per axis of the standard grid")->check(CLI::Range(2, 100000));
  tables->add_option("--sims", tc.sims, "Simulations per grid point")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 32));
  tables->add_option("--beta", tc.beta, "Coverage of the sum-N quantiles")->check(open_unit);
  seed_option(tables, tc.seed);
  tables->add_option("--out", tc.out, "Output table file")->required();
  tables->add_option("--workers", tc.workers, "Worker threads (0 = default)");
  tables->add_option("--logr-range", tc.log_r_range, "Custom grid: LO HI COUNT")->expected(3);
  tables->add_option("--sigma-range", tc.sigma_range, "Custom grid: LO HI COUNT")->expected(3);
  tables->add_flag("--quiet", tc.quiet, "Suppress per-point progress");

  SimulateConfig sc;
  auto* simulate = app.add_subcommand("simulate", "Simulate one observed series");
  simulate->add_option("--logr", sc.log_r, "log r")->required();
  simulate->add_option("--sigma", sc.sigma, "Process noise")->required();
  simulate->add_option("--phi", sc.phi, "Observation scale")->required();
  simulate->add_option("--n", sc.n, "Series length")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 32));
  simulate->add_option("--burn-in", sc.burn_in, "Discarded initial iterates");
  seed_option(simulate, sc.seed);
  simulate->add_option("--out", sc.out, "Output file (stdout when omitted)");

  AnalyzeConfig ac;
  auto* analyze = app.add_subcommand("analyze", "Scan the table for adequate parameters");
  analyze->add_option("--data", ac.data, "Series file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--table", ac.table, "Surrogate table file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--alpha", ac.alpha, "Overall adequacy level")->check(open_unit);
  analyze->add_option("--sims", ac.sims, "Simulations per parameter")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 32));
  analyze->add_option("--delta", ac.delta, "Offset inside the logarithm")->check(positive);
  seed_option(analyze, ac.seed);
  analyze->add_option("--out", ac.out, "Report CSV")->required();
  analyze->add_option("--plotdata", ac.plotdata, "Prefix for min_p plot data files");
  analyze->add_option("--maha", ac.maha, "Mahalanobis p-value: classical, kt")->check(CLI::IsMember({"classical", "kt"}));
  analyze->add_option("--nu", ac.nu, "Kent-Tyler degrees of freedom")->check(positive);
  analyze->add_option("--workers", ac.workers, "Worker threads (0 = default)");

  CalibrateConfig cc;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate coverage and the adjusted alpha");
  calibrate->add_option("--logr", cc.log_r, "log r")->required();
  calibrate->add_option("--sigma", cc.sigma, "Process noise")->required();
  calibrate->add_option("--phi", cc.phi, "Observation scale")->required();
  calibrate->add_option("--alpha", cc.alpha, "Nominal adequacy level")->check(open_unit);
  calibrate->add_option("--outer", cc.outer, "Outer replications");
  calibrate->add_option("--inner", cc.inner, "Inner simulations")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 32));
  calibrate->add_option("--delta", cc.delta, "Offset inside the logarithm")->check(positive);
  seed_option(calibrate, cc.seed);
  calibrate->add_option("--table", cc.table, "Surrogate table (otherwise an entry is built at theta)")->check(CLI::ExistingFile);
  calibrate->add_option("--n", cc.n, "Series length when building an entry")->check(CLI::Range(std::size_t{8}, std::size_t{1} << 24));
  calibrate->add_option("--entry-sims", cc.entry_sims, "Simulations when building an entry")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 32));
  calibrate->add_option("--beta", cc.beta, "Coverage of the sum-N quantiles")->check(open_unit);
  calibrate->add_option("--workers", cc.workers, "Worker threads (0 = default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  // CLI::Range is closed; alpha and beta must lie strictly inside (0, 1).
  for (double v : {tc.beta, ac.alpha, cc.alpha, cc.beta}) {
    if (v <= 0.0 || v >= 1.0) {
      std::cerr << "error: alpha and beta must lie strictly between 0 and 1\n";
      return kValidation;
    }
  }

  try {
    if (*tables) return run_tables(tc);
    if (*simulate) return run_simulate(sc);
    if (*analyze) return run_analyze(ac);
    if (*calibrate) return run_calibrate(cc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCompute;
  }
  return kOk;
}
