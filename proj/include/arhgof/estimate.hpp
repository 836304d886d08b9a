// Copyright 2026 The arhgof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Empirical second-order structure of a functional series and the projection
// estimator of the autocorrelation operator.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "arhgof/eigen_system.hpp"
#include "arhgof/error.hpp"
#include "arhgof/func_core.hpp"

namespace arhgof {

// lag 0: (1/n) sum_i Y_i(u_a) Y_i(u_b), flagged symmetric.
// lag 1: (1/(n-1)) sum_{i<n} Y_i(u_a) Y_{i+1}(u_b).
inline KernelMatrix empirical_cov_operator(const FunctionalSeries& series, int lag) {
  const int n = series.length();
  if (n < 2) throw PreconditionError("empirical_cov_operator: need at least 2 observations");
  const RowMatrix& y = series.rows();
  if (lag == 0) {
    Matrix c = (y.transpose() * y) / static_cast<double>(n);
    Matrix sym = 0.5 * (c + c.transpose());
    return {series.grid(), std::move(sym), true};
  }
  if (lag == 1) {
    Matrix d = (y.topRows(n - 1).transpose() * y.bottomRows(n - 1)) / static_cast<double>(n - 1);
    return {series.grid(), std::move(d), false};
  }
  throw PreconditionError("empirical_cov_operator: lag must be 0 or 1");
}

// D_n f = (1/(n-1)) sum_i <Y_i, f> Y_{i+1}, as a plain operator matrix.
inline Matrix lag1_operator(const FunctionalSeries& series) {
  const KernelMatrix d = empirical_cov_operator(series, 1);
  return d.entries().transpose() * series.grid()->weight_vector().asDiagonal();
}

struct GammaEstimate {
  KernelMatrix op;
  int k_n;
  EigenSystem basis;
  Vector lambdas;     // the k_n eigenvalues that were inverted
  double norm;        // weighted operator norm of the estimate
  double norm_bound;  // ||D_n|| * max_j 1/lambda_j
};

inline constexpr double kRelativeEigenFloor = 1e-6;

// max(1, floor(log n)) capped at the last eigenvalue above 1e-6 * lambda_1.
inline int default_truncation(int n, const Vector& lambdas) {
  int k = std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(n)))));
  k = std::min<int>(k, static_cast<int>(lambdas.size()));
  int admissible = 0;
  for (int j = 0; j < lambdas.size(); ++j) {
    if (lambdas[j] > kRelativeEigenFloor * lambdas[0]) admissible = j + 1;
    else break;
  }
  return std::max(1, std::min(k, admissible));
}

namespace detail {

inline GammaEstimate projection_estimate(const FunctionalSeries& series, std::optional<int> k_n,
                                         EigenSystem basis, Vector lambdas) {
  const int n = series.length();
  const int m = series.grid()->size();
  int k = k_n ? *k_n : default_truncation(n, lambdas);
  if (k < 1 || k > m) throw PreconditionError("estimate_autocorrelation: k_n must lie in [1, m]");
  // eigenvalues at round-off level of lambda_1 count as zero
  const double zero_level = m * std::numeric_limits<double>::epsilon() * std::max(lambdas[0], 0.0);
  for (int j = 0; j < k; ++j)
    if (!(lambdas[j] > zero_level))
      throw PreconditionError("estimate_autocorrelation: eigenvalue " + std::to_string(j + 1) +
                              " is not positive");

  const Matrix phi = basis.basis.leftCols(k);
  const Vector w = series.grid()->weight_vector();
  const Matrix z = series.rows() * (w.asDiagonal() * phi);  // n x k coordinates
  // coef(j, l) = (1/(n-1)) sum_i lambda_j^{-1} <Y_i, phi_j> <Y_{i+1}, phi_l>
  Matrix coef = (z.topRows(n - 1).transpose() * z.bottomRows(n - 1)) / static_cast<double>(n - 1);
  const Vector inv = lambdas.head(k).cwiseInverse();
  coef = inv.asDiagonal() * coef;
  // Gamma f = sum_l sum_j coef(j,l) <f, phi_j> phi_l
  Matrix op = phi * coef.transpose() * phi.transpose() * w.asDiagonal();

  const double op_norm = weighted_operator_norm(op, series.grid());
  const double bound = weighted_operator_norm(lag1_operator(series), series.grid()) * inv.maxCoeff();
  if (op_norm > bound * (1.0 + 1e-9) + 1e-300)
    throw NumericalError("estimate_autocorrelation: operator norm exceeds ||D_n|| max 1/lambda");

  Vector used = lambdas.head(k);
  return GammaEstimate{KernelMatrix(series.grid(), std::move(op), false), k, std::move(basis), std::move(used),
                       op_norm, bound};
}

}  // namespace detail

// Projection estimator on the leading k_n empirical eigenpairs of C_n.
inline GammaEstimate estimate_autocorrelation(const FunctionalSeries& series, std::optional<int> k_n = {}) {
  if (series.length() < 2) throw PreconditionError("estimate_autocorrelation: need at least 2 observations");
  EigenSystem basis = eigen_decompose(empirical_cov_operator(series, 0));
  Vector lambdas = basis.eigenvalues;
  return detail::projection_estimate(series, k_n, std::move(basis), std::move(lambdas));
}

// Same estimator on known eigenfunctions, with lambda_k = (1/n) sum_i <Y_i, phi_k>^2.
inline GammaEstimate estimate_autocorrelation(const FunctionalSeries& series, std::optional<int> k_n,
                                              const EigenSystem& known) {
  const int n = series.length();
  if (n < 2) throw PreconditionError("estimate_autocorrelation: need at least 2 observations");
  require_same_grid(series.grid(), known.grid, "estimate_autocorrelation");
  const Matrix z = known.coordinates(series.rows());
  Vector lambdas = z.colwise().squaredNorm().transpose() / static_cast<double>(n);
  return detail::projection_estimate(series, k_n, known, std::move(lambdas));
}

// C_Y - Gamma0 C_Y Gamma0^T, symmetrized and clamped to PSD.
inline KernelMatrix innovation_cov_h0(const FunctionalSeries& series, const KernelMatrix& gamma0,
                                      OperatorConvention convention = OperatorConvention::kernel_scaled) {
  require_same_grid(series.grid(), gamma0.grid(), "innovation_cov_h0");
  KernelMatrix c = empirical_cov_operator(series, 0);
  if (gamma0.entries().isZero(0.0)) return c;
  const Matrix g = effective_operator(gamma0, convention);
  Matrix r = c.entries() - g * c.entries() * g.transpose();
  r = 0.5 * (r + r.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(r);
  if (es.info() != Eigen::Success) throw NumericalError("innovation_cov_h0: eigensolver failed");
  if (es.eigenvalues().minCoeff() < 0.0) {
    const Vector clamped = es.eigenvalues().cwiseMax(0.0);
    r = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    r = 0.5 * (r + r.transpose()).eval();
  }
  return {series.grid(), std::move(r), true};
}

// Weighted operator norm of (estimate - truth).
inline double operator_error(const KernelMatrix& estimate, const KernelMatrix& truth) {
  require_same_grid(estimate.grid(), truth.grid(), "operator_error");
  return weighted_operator_norm(estimate.entries() - truth.entries(), truth.grid());
}

}  // namespace arhgof
