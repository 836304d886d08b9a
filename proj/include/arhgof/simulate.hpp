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

// Data-generating processes: exponential kernels, Gaussian random elements
// (Cholesky or truncated Karhunen-Loeve), the ARH(1) recursion with burn-in and
// random projection directions.

#include <Eigen/Cholesky>

#include <cmath>
#include <optional>
#include <random>
#include <utility>

#include "arhgof/eigen_system.hpp"
#include "arhgof/error.hpp"
#include "arhgof/func_core.hpp"
#include "arhgof/rng.hpp"

namespace arhgof {

inline constexpr int kDefaultBurnIn = 500;
inline constexpr int kDefaultKlTruncation = 5;

// sigma^2 exp(-|u - v| / theta), flagged symmetric.
inline KernelMatrix exp_kernel(const GridHandle& grid, double sigma, double theta) {
  if (!(sigma > 0.0) || !(theta > 0.0)) throw PreconditionError("exp_kernel: sigma and theta must be positive");
  const int m = grid->size();
  Matrix k(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) k(i, j) = sigma * sigma * std::exp(-std::abs(grid->node(i) - grid->node(j)) / theta);
  return {grid, std::move(k), true};
}

// scale * exp(-|u - v| / theta) as an autocorrelation operator (no symmetric flag).
inline KernelMatrix exp_scaled_kernel(const GridHandle& grid, double scale, double theta) {
  if (!(theta > 0.0)) throw PreconditionError("exp_scaled_kernel: theta must be positive");
  const int m = grid->size();
  Matrix k(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) k(i, j) = scale * std::exp(-std::abs(grid->node(i) - grid->node(j)) / theta);
  return {grid, std::move(k), false};
}

// The alternative used in the simulation study: (1/71) exp(-|u-v|/0.8).
inline KernelMatrix h1_kernel(const GridHandle& grid) { return exp_scaled_kernel(grid, 1.0 / 71.0, 0.8); }

struct GaussianSpec {
  KernelMatrix kernel;
  std::optional<GridFunction> mean;
  std::optional<int> kl_truncation;
};

// Precomputed factor F with kernel ~= F F^T; a draw is mean + F xi.
class GaussianSampler {
 public:
  explicit GaussianSampler(const GaussianSpec& spec)
      : grid_(spec.kernel.grid()), mean_(Vector::Zero(spec.kernel.size())) {
    const KernelMatrix& k = spec.kernel;
    if (!k.symmetric()) throw PreconditionError("GaussianSampler: kernel must be symmetric PSD");
    if (spec.mean) {
      require_same_grid(spec.mean->grid(), grid_, "GaussianSampler");
      mean_ = spec.mean->values();
    }
    const int m = k.size();
    if (spec.kl_truncation && (*spec.kl_truncation < 1 || *spec.kl_truncation > m))
      throw PreconditionError("GaussianSampler: KL truncation must be in [1, m]");
    if (k.entries().diagonal().maxCoeff() == 0.0) {
      factor_ = Matrix(m, 0);
      return;
    }
    if (spec.kl_truncation) {
      factor_ = eigen_factor(k, *spec.kl_truncation);
      return;
    }
    const double base = 1e-10 * k.entries().trace() / m;
    for (double jitter : {base, 10.0 * base}) {
      Matrix a = k.entries();
      a.diagonal().array() += jitter;
      Eigen::LLT<Matrix> llt(a);
      if (llt.info() == Eigen::Success) {
        factor_ = llt.matrixL();
        lower_triangular_ = true;
        return;
      }
    }
    // Singular-but-PSD kernels (clamped estimates) fall back to the eigen factor.
    factor_ = eigen_factor(k, m);
  }

  const GridHandle& grid() const { return grid_; }
  int rank() const { return static_cast<int>(factor_.cols()); }
  const Matrix& factor() const { return factor_; }

  template <class E>
  Vector draw_values(E& engine) const {
    std::normal_distribution<double> normal;
    Vector xi(factor_.cols());
    for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] = normal(engine);
    if (xi.size() == 0) return mean_;
    if (lower_triangular_) return mean_ + factor_.triangularView<Eigen::Lower>() * xi;
    return mean_ + factor_ * xi;
  }

  template <class E>
  GridFunction draw(E& engine) const {
    return {grid_, draw_values(engine)};
  }

 private:
  static Matrix eigen_factor(const KernelMatrix& k, int rank) {
    const EigenSystem sys = eigen_decompose(k);
    Matrix f(k.size(), rank);
    for (int c = 0; c < rank; ++c) f.col(c) = std::sqrt(sys.eigenvalues[c]) * sys.basis.col(c);
    return f;
  }

  GridHandle grid_;
  Vector mean_;
  Matrix factor_;
  bool lower_triangular_ = false;
};

inline GridFunction sample_gaussian(const GaussianSpec& spec, const RngStream& rng) {
  Engine engine = rng.engine();
  return GaussianSampler(spec).draw(engine);
}

// Projection directions default to a rank-5 Karhunen-Loeve truncation.
inline GaussianSpec projection_spec(GaussianSpec spec) {
  if (!spec.kl_truncation) spec.kl_truncation = std::min(kDefaultKlTruncation, spec.kernel.size());
  return spec;
}

inline GridFunction draw_projection_direction(const GaussianSpec& spec, const RngStream& rng) {
  return sample_gaussian(projection_spec(spec), rng);
}

struct ARHSpec {
  KernelMatrix gamma;
  GaussianSpec noise;
  GaussianSpec initial;
  int burn_in = kDefaultBurnIn;
  int n = 200;
  OperatorConvention convention = OperatorConvention::kernel_scaled;
};

// Largest singular value of the plain operator matrix; below 1 the recursion is
// stationary.
inline double stationarity_proxy(const KernelMatrix& gamma,
                                 OperatorConvention convention = OperatorConvention::kernel_scaled) {
  Eigen::JacobiSVD<Matrix> svd(effective_operator(gamma, convention));
  return svd.singularValues()[0];
}

// ARH(1) recursion with cached factorizations, reusable across repetitions.
class ArhSimulator {
 public:
  explicit ArhSimulator(const ARHSpec& spec)
      : grid_(spec.gamma.grid()),
        op_(effective_operator(spec.gamma, spec.convention)),
        zero_operator_(spec.gamma.entries().isZero(0.0)),
        noise_(spec.noise),
        initial_(spec.initial),
        burn_in_(spec.burn_in) {
    require_same_grid(grid_, spec.noise.kernel.grid(), "ArhSimulator");
    require_same_grid(grid_, spec.initial.kernel.grid(), "ArhSimulator");
    if (burn_in_ < 0) throw PreconditionError("ArhSimulator: burn-in must be nonnegative");
  }

  // Y_0 from the initial law, Y_t = Gamma(Y_{t-1}) + eps_t for t = 1..burn_in+n;
  // returns Y_{burn_in+1}, ..., Y_{burn_in+n}.
  FunctionalSeries simulate(int n, const RngStream& rng) const {
    if (n < 1) throw PreconditionError("simulate_arh1: n must be >= 1");
    Engine engine = rng.engine();
    const int m = grid_->size();
    RowMatrix out(n, m);
    Vector y = initial_.draw_values(engine);
    for (int t = 1; t <= burn_in_ + n; ++t) {
      Vector eps = noise_.draw_values(engine);
      if (zero_operator_) {
        y = std::move(eps);
      } else {
        Vector next = op_ * y;
        next += eps;
        y = std::move(next);
      }
      if (t > burn_in_) out.row(t - burn_in_ - 1) = y.transpose();
    }
    return {grid_, std::move(out)};
  }

 private:
  GridHandle grid_;
  Matrix op_;
  bool zero_operator_;
  GaussianSampler noise_;
  GaussianSampler initial_;
  int burn_in_;
};

inline FunctionalSeries simulate_arh1(const ARHSpec& spec, const RngStream& rng) {
  return ArhSimulator(spec).simulate(spec.n, rng);
}

}  // namespace arhgof
