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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ricker/errors.hpp"

namespace ricker {

struct LinearFit {
  Eigen::VectorXd coefficients;
  /// sqrt(RSS / (m - p)).
  double residual_sd = 0.0;
};

/// Smallest-to-largest singular value ratio below which a design is rejected.
inline constexpr double kRankTolerance = 1e-10;

/// Least squares via Householder QR. Requires m > p; throws
/// CollinearityError if the design is rank deficient at kRankTolerance.
LinearFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response);

/// The ceil(p*m)-th smallest element (1-based); p <= 1/m gives the minimum.
double empirical_quantile(std::span<const double> sample, double p);

/// Same convention on data already sorted ascending.
double sorted_quantile(std::span<const double> sorted, double p);

/// P(Poisson(lambda) <= y), through the regularized upper incomplete gamma Q(y+1, lambda).
double poisson_cdf(std::int64_t y, double lambda);

/// The lambda with poisson_cdf(y, lambda) == p, by bisection on a bracket
/// known to contain it. Throws std::domain_error if p lies outside the CDF's
/// range on the bracket (possible only for y == 0 and p extremely close to 1).
double invert_poisson_cdf(std::int64_t y, double p);

struct ScatterEstimate {
  Eigen::VectorXd location;
  Eigen::MatrixXd scatter;
};

/// Mean and unbiased (m - 1) covariance of the rows of an m x k matrix.
ScatterEstimate sample_covariance(const Eigen::MatrixXd& rows);

/// Thrown when the Kent-Tyler iteration hits max_iter; carries the last iterate.
class KentTylerConvergenceError : public ConvergenceError {
 public:
  KentTylerConvergenceError(const std::string& what, ScatterEstimate last)
      : ConvergenceError(what), last_(std::move(last)) {}
  const ScatterEstimate& last_iterate() const noexcept { return last_; }

 private:
  ScatterEstimate last_;
};

/// Joint location/scatter M-estimate of the multivariate t with `nu` degrees
/// of freedom (Kent & Tyler 1991). Fixed point of
///
///   w_i = (nu + k) / (nu + d_i^2),   mu = sum w_i x_i / sum w_i,
///   Sigma = (1/m) sum w_i (x_i - mu)(x_i - mu)^T,
///
/// started from the sample mean and covariance. Stops when the largest
/// relative change of location and scatter falls below `tol`.
ScatterEstimate kent_tyler_fit(const Eigen::MatrixXd& rows, double nu, double tol = 1e-8,
                               std::size_t max_iter = 500);

/// sqrt((x - mu)^T Sigma^{-1} (x - mu)).
double mahalanobis(const Eigen::VectorXd& x, const ScatterEstimate& est);

/// Distances of every row of `rows` under one factorization of the scatter.
std::vector<double> mahalanobis_rows(const Eigen::MatrixXd& rows, const ScatterEstimate& est);

/// Throws SingularityError unless the scatter is symmetric positive definite.
void check_positive_definite(const Eigen::MatrixXd& scatter, const char* who);

}  // namespace ricker
