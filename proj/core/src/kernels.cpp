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

#include "ricker/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <boost/math/special_functions/gamma.hpp>

namespace ricker {

LinearFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
  const auto m = design.rows();
  const auto p = design.cols();
  if (p < 1 || m <= p) throw std::invalid_argument("ols_fit: need more rows than columns");
  if (response.size() != m) throw std::invalid_argument("ols_fit: response length mismatch");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  // R shares A's singular values.
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  if (!(sv(p - 1) >= kRankTolerance * sv(0)))
    throw CollinearityError("ols_fit: design is rank deficient (singular value ratio " +
                            std::to_string(sv(0) > 0 ? sv(p - 1) / sv(0) : 0.0) + ")");

  LinearFit fit;
  fit.coefficients = qr.solve(response);
  // One refinement step with the residual accumulated in extended precision.
  Eigen::VectorXd correction_rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    long double acc = response(i);
    for (Eigen::Index j = 0; j < p; ++j)
      acc -= static_cast<long double>(design(i, j)) * static_cast<long double>(fit.coefficients(j));
    correction_rhs(i) = static_cast<double>(acc);
  }
  fit.coefficients += qr.solve(correction_rhs);
  const double rss = (response - design * fit.coefficients).squaredNorm();
  fit.residual_sd = std::sqrt(rss / static_cast<double>(m - p));
  return fit;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("empirical_quantile: p must lie in (0, 1]");
  const auto m = static_cast<double>(sorted.size());
  // The slack absorbs representation error in p (0.98 * 1000 = 980.0000000000001).
  auto rank = static_cast<std::size_t>(std::ceil(p * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double empirical_quantile(std::span<const double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  std::vector<double> copy(sample.begin(), sample.end());
  std::sort(copy.begin(), copy.end());
  return sorted_quantile(copy, p);
}

double poisson_cdf(std::int64_t y, double lambda) {
  if (y < 0) throw std::invalid_argument("poisson_cdf: y must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson_cdf: lambda must be >= 0");
  if (lambda == 0.0) return 1.0;
  if (std::isinf(lambda)) return 0.0;
  return boost::math::gamma_q(static_cast<double>(y) + 1.0, lambda);
}

double invert_poisson_cdf(std::int64_t y, double p) {
  if (y < 0) throw std::invalid_argument("invert_poisson_cdf: y must be >= 0");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("invert_poisson_cdf: p must lie in (0, 1)");
  const double yd = static_cast<double>(y);
  double lo = std::max(1e-12, yd / 10.0);
  double hi = 10.0 * (yd + 1.0) + 50.0;
  // The CDF decreases in lambda: cdf(lo) >= p >= cdf(hi).
  const double cdf_lo = poisson_cdf(y, lo);
  if (cdf_lo < p)
    throw std::domain_error("invert_poisson_cdf: solution lies below lambda = " + std::to_string(lo));
  // Very small p puts the root past the nominal bracket.
  for (int grow = 0; poisson_cdf(y, hi) > p; ++grow) {
    if (grow == 64) throw std::logic_error("invert_poisson_cdf: upper bracket does not enclose the solution");
    lo = hi;
    hi *= 2.0;
  }

  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = poisson_cdf(y, mid);
    if (std::fabs(cdf - p) <= 1e-12 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
      return mid;
    if (cdf > p)
      lo = mid;
    else
      hi = mid;
  }
  const double mid = 0.5 * (lo + hi);
  if (std::fabs(poisson_cdf(y, mid) - p) <= 1e-9) return mid;
  throw std::logic_error("invert_poisson_cdf: bisection did not converge");
}

void check_positive_definite(const Eigen::MatrixXd& scatter, const char* who) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double largest = ev.maxCoeff();
  if (!std::isfinite(largest) || !(largest > 0.0) || !(ev.minCoeff() > 1e-12 * largest))
    throw SingularityError(std::string(who) + ": scatter matrix is singular");
}

ScatterEstimate sample_covariance(const Eigen::MatrixXd& rows) {
  const auto m = rows.rows();
  const auto k = rows.cols();
  if (m <= k) throw std::invalid_argument("sample_covariance: need more rows than dimensions");
  ScatterEstimate est;
  est.location = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - est.location.transpose();
  est.scatter = (centered.transpose() * centered) / static_cast<double>(m - 1);
  check_positive_definite(est.scatter, "sample_covariance");
  return est;
}

ScatterEstimate kent_tyler_fit(const Eigen::MatrixXd& rows, double nu, double tol,
                               std::size_t max_iter) {
  const auto m = rows.rows();
  const auto k = rows.cols();
  if (m <= k + 1) throw std::invalid_argument("kent_tyler_fit: need m > k + 1 rows");
  if (!(nu > 0.0)) throw std::invalid_argument("kent_tyler_fit: nu must be > 0");

  ScatterEstimate est;
  est.location = rows.colwise().mean().transpose();
  {
    const Eigen::MatrixXd centered = rows.rowwise() - est.location.transpose();
    est.scatter = (centered.transpose() * centered) / static_cast<double>(m - 1);
  }
  const double kd = static_cast<double>(k);
  Eigen::VectorXd weights(m);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    check_positive_definite(est.scatter, "kent_tyler_fit");
    const Eigen::LLT<Eigen::MatrixXd> llt(est.scatter);
    const Eigen::MatrixXd centered = rows.rowwise() - est.location.transpose();
    const Eigen::MatrixXd whitened = llt.matrixL().solve(centered.transpose());
    const Eigen::VectorXd d2 = whitened.colwise().squaredNorm().transpose();
    weights = (nu + kd) / (nu + d2.array());

    ScatterEstimate next;
    next.location = (rows.transpose() * weights) / weights.sum();
    const Eigen::MatrixXd recentered = rows.rowwise() - next.location.transpose();
    next.scatter =
        (recentered.transpose() * weights.asDiagonal() * recentered) / static_cast<double>(m);

    const double scale = est.scatter.cwiseAbs().maxCoeff();
    const double loc_change =
        (next.location - est.location).cwiseAbs().maxCoeff() / std::sqrt(scale);
    const double scatter_change = (next.scatter - est.scatter).cwiseAbs().maxCoeff() / scale;
    est = std::move(next);
    if (std::max(loc_change, scatter_change) < tol) {
      check_positive_definite(est.scatter, "kent_tyler_fit");
      return est;
    }
  }
  throw KentTylerConvergenceError(
      "kent_tyler_fit: no convergence after " + std::to_string(max_iter) + " iterations", est);
}

double mahalanobis(const Eigen::VectorXd& x, const ScatterEstimate& est) {
  if (x.size() != est.location.size()) throw std::invalid_argument("mahalanobis: dimension mismatch");
  check_positive_definite(est.scatter, "mahalanobis");
  const Eigen::LLT<Eigen::MatrixXd> llt(est.scatter);
  const Eigen::VectorXd z = llt.matrixL().solve(x - est.location);
  return z.norm();
}

std::vector<double> mahalanobis_rows(const Eigen::MatrixXd& rows, const ScatterEstimate& est) {
  if (rows.cols() != est.location.size()) throw std::invalid_argument("mahalanobis: dimension mismatch");
  check_positive_definite(est.scatter, "mahalanobis");
  const Eigen::LLT<Eigen::MatrixXd> llt(est.scatter);
  const Eigen::MatrixXd centered = rows.rowwise() - est.location.transpose();
  const Eigen::MatrixXd z = llt.matrixL().solve(centered.transpose());
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = z.col(i).norm();
  return out;
}

}  // namespace ricker
