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

// Goodness-of-fit test for the autocorrelation operator of an ARH(1) process,
// based on the marked empirical process
//
//   V_n(x) = n^{-1/2} sum_i <Y_i - Gamma(Y_{i-1}), g_eps> 1{<Y_{i-1}, g_y> <= x}
//
// along random Gaussian directions (g_eps, g_y), calibrated with a multiplier
// bootstrap and combined across directions by Benjamini-Hochberg.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "arhgof/csv.hpp"
#include "arhgof/error.hpp"
#include "arhgof/estimate.hpp"
#include "arhgof/func_core.hpp"
#include "arhgof/rng.hpp"
#include "arhgof/simulate.hpp"

namespace arhgof {

enum class Multiplier { normal, rademacher };
enum class TestMode { specified, misspecified };

inline const char* to_string(TestMode mode) {
  return mode == TestMode::specified ? "specified" : "misspecified";
}

struct TestConfig {
  int n_projections = 1;
  int n_bootstrap = 2000;
  bool standardized = false;
  Multiplier multiplier = Multiplier::normal;
  int k_min = 5;
  double alpha = 0.05;
  // (1 + #{S* >= S}) / (B + 1) instead of #{S* >= S} / B.
  bool add_one = false;
  OperatorConvention convention = OperatorConvention::kernel_scaled;

  void validate() const {
    if (n_projections < 1) throw PreconditionError("TestConfig: n_projections must be >= 1");
    if (n_bootstrap < 1) throw PreconditionError("TestConfig: n_bootstrap must be >= 1");
    if (k_min < 1) throw PreconditionError("TestConfig: k_min must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("TestConfig: alpha must lie in (0,1)");
  }
};

// Scalar reduction of the data along one pair of directions.
struct ProjectedSample {
  std::vector<double> thresholds;
  std::vector<double> marks;
  std::vector<int> order;  // stable ascending order of thresholds

  int size() const { return static_cast<int>(marks.size()); }

  static ProjectedSample make(std::vector<double> thresholds, std::vector<double> marks) {
    if (thresholds.size() != marks.size()) throw StructuralError("ProjectedSample: length mismatch");
    ProjectedSample s{std::move(thresholds), std::move(marks), {}};
    s.order.resize(s.thresholds.size());
    std::iota(s.order.begin(), s.order.end(), 0);
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](int a, int b) { return s.thresholds[a] < s.thresholds[b]; });
    return s;
  }
};

// Residual functions Y_i - Gamma(Y_{i-1}) for i = 2..n, one per row. Each row
// uses the same matrix-vector product as the simulator, so data generated
// without noise leaves exact zeros.
inline RowMatrix residual_functions(const FunctionalSeries& series, const KernelMatrix& gamma,
                                    OperatorConvention convention = OperatorConvention::kernel_scaled) {
  const int n = series.length();
  if (n < 2) throw PreconditionError("compute_residual_marks: series must have at least 2 observations");
  require_same_grid(series.grid(), gamma.grid(), "compute_residual_marks");
  RowMatrix resid = series.rows().bottomRows(n - 1);
  if (gamma.entries().isZero(0.0)) return resid;
  const Matrix op = effective_operator(gamma, convention);
  Vector prev(series.grid()->size());
  for (int i = 0; i + 1 < n; ++i) {
    prev = series.rows().row(i).transpose();
    const Vector fitted = op * prev;
    resid.row(i) -= fitted.transpose();
  }
  return resid;
}

// Projects precomputed residuals: threshold <Y_{i-1}, g_y>, mark <resid_i, g_eps>.
inline ProjectedSample project_residuals(const FunctionalSeries& series, const RowMatrix& residuals,
                                         const GridFunction& gamma_eps, const GridFunction& gamma_y) {
  require_same_grid(series.grid(), gamma_eps.grid(), "compute_residual_marks");
  require_same_grid(series.grid(), gamma_y.grid(), "compute_residual_marks");
  const int n = series.length();
  const Vector w = series.grid()->weight_vector();
  const Vector t = series.rows().topRows(n - 1) * w.cwiseProduct(gamma_y.values());
  const Vector mk = residuals * w.cwiseProduct(gamma_eps.values());
  return ProjectedSample::make(std::vector<double>(t.data(), t.data() + t.size()),
                               std::vector<double>(mk.data(), mk.data() + mk.size()));
}

// Pairs mark i with predecessor i-1 inside the sample, i = 2..n:
//   threshold <Y_{i-1}, g_y>, mark <Y_i - Gamma(Y_{i-1}), g_eps>.
inline ProjectedSample compute_residual_marks(const FunctionalSeries& series, const KernelMatrix& gamma,
                                              const GridFunction& gamma_eps, const GridFunction& gamma_y,
                                              OperatorConvention convention = OperatorConvention::kernel_scaled) {
  const RowMatrix resid = residual_functions(series, gamma, convention);
  return project_residuals(series, resid, gamma_eps, gamma_y);
}

// The process at its jump points. Tied thresholds form one jump.
struct MepPath {
  std::vector<double> thresholds;
  std::vector<double> values;  // V(j) = n^{-1/2} sum_{t_i <= t_(j)} m_i
  std::vector<int> counts;     // N(j) = #{t_i <= t_(j)}
  int n = 0;
};

inline MepPath mep_path(const ProjectedSample& sample) {
  MepPath path;
  path.n = sample.size();
  const double root_n = std::sqrt(static_cast<double>(path.n));
  double cumulative = 0.0;
  for (std::size_t k = 0; k < sample.order.size(); ++k) {
    const int i = sample.order[k];
    cumulative += sample.marks[i];
    const bool group_end =
        k + 1 == sample.order.size() || sample.thresholds[sample.order[k + 1]] != sample.thresholds[i];
    if (group_end) {
      path.thresholds.push_back(sample.thresholds[i]);
      path.values.push_back(cumulative / root_n);
      path.counts.push_back(static_cast<int>(k + 1));
    }
  }
  return path;
}

// raw: max_j |V(j)|. standardized: max over N(j) >= k_min of |V(j)| (N(j)/n)^{-1/2}.
inline double sup_statistic(const MepPath& path, bool standardized, int k_min = 5) {
  if (!standardized) {
    double best = 0.0;
    for (double v : path.values) best = std::max(best, std::abs(v));
    return best;
  }
  if (path.counts.empty() || path.counts.back() < k_min)
    throw PreconditionError("sup_statistic: no jump point with at least k_min observations");
  double best = 0.0;
  for (std::size_t j = 0; j < path.values.size(); ++j) {
    if (path.counts[j] < k_min) continue;
    best = std::max(best, std::abs(path.values[j]) / std::sqrt(static_cast<double>(path.counts[j]) / path.n));
  }
  return best;
}

struct BootstrapResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Sort order and group boundaries are fixed across replicates; each replicate
// is a single O(n) cumulative pass over multiplied marks.
class FastBootstrap {
 public:
  FastBootstrap(const ProjectedSample& sample, bool standardized, int k_min)
      : standardized_(standardized), root_n_(std::sqrt(static_cast<double>(sample.size()))) {
    const std::size_t n = sample.order.size();
    sorted_marks_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const int i = sample.order[k];
      sorted_marks_.push_back(sample.marks[i]);
      const bool group_end =
          k + 1 == n || sample.thresholds[sample.order[k + 1]] != sample.thresholds[i];
      if (group_end) {
        const int count = static_cast<int>(k + 1);
        if (!standardized || count >= k_min) {
          ends_.push_back(static_cast<int>(k));
          scales_.push_back(std::sqrt(static_cast<double>(count) / static_cast<double>(n)));
        }
      }
    }
    if (standardized && ends_.empty())
      throw PreconditionError("fast_bootstrap: no jump point with at least k_min observations");
  }

  int size() const { return static_cast<int>(sorted_marks_.size()); }

  // Statistic of the marks weighted by `eta` (given in sorted order).
  double statistic(const std::vector<double>& eta) const {
    double cumulative = 0.0;
    double best = 0.0;
    std::size_t g = 0;
    const std::size_t n = sorted_marks_.size();
    for (std::size_t k = 0; k < n && g < ends_.size(); ++k) {
      cumulative += eta[k] * sorted_marks_[k];
      if (static_cast<int>(k) == ends_[g]) {
        if (standardized_) {
          best = std::max(best, std::abs(cumulative / root_n_) / scales_[g]);
        } else {
          best = std::max(best, std::abs(cumulative));
        }
        ++g;
      }
    }
    return standardized_ ? best : best / root_n_;
  }

  template <class E>
  void draw_multipliers(E& engine, Multiplier kind, std::vector<double>& eta) const {
    eta.resize(sorted_marks_.size());
    if (kind == Multiplier::normal) {
      std::normal_distribution<double> normal;
      for (double& e : eta) e = normal(engine);
    } else {
      for (double& e : eta) e = (engine() >> 63) ? 1.0 : -1.0;
    }
  }

 private:
  bool standardized_;
  double root_n_;
  std::vector<double> sorted_marks_;
  std::vector<int> ends_;
  std::vector<double> scales_;
};

inline BootstrapResult fast_bootstrap_pvalue(const ProjectedSample& sample, const TestConfig& config,
                                             const RngStream& rng) {
  config.validate();
  const MepPath path = mep_path(sample);
  BootstrapResult result;
  result.statistic = sup_statistic(path, config.standardized, config.k_min);
  const FastBootstrap boot(sample, config.standardized, config.k_min);
  Engine engine = rng.engine();
  std::vector<double> eta;
  long exceed = 0;
  for (int b = 0; b < config.n_bootstrap; ++b) {
    boot.draw_multipliers(engine, config.multiplier, eta);
    if (boot.statistic(eta) >= result.statistic) ++exceed;
  }
  result.p_value = config.add_one ? (1.0 + exceed) / (config.n_bootstrap + 1.0)
                                  : static_cast<double>(exceed) / config.n_bootstrap;
  return result;
}

// Benjamini-Hochberg adjusted minimum: min(1, min_k NP p_(k) / k).
inline double fdr_combine(const std::vector<double>& p_values) {
  if (p_values.empty()) throw PreconditionError("fdr_combine: no p-values");
  std::vector<double> sorted(p_values);
  for (double p : sorted)
    if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("fdr_combine: p-value outside [0,1]");
  std::sort(sorted.begin(), sorted.end());
  const double np = static_cast<double>(sorted.size());
  double best = 1.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) best = std::min(best, np * sorted[k] / static_cast<double>(k + 1));
  return best;
}

struct ProjectionResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

struct TestOutcome {
  std::vector<ProjectionResult> per_projection;
  double combined_p = 1.0;
  bool reject = false;
  double alpha = 0.05;
  TestMode mode = TestMode::specified;
  double innovation_trace = 0.0;
  std::optional<int> k_n;
};

struct ProjectionSpecs {
  GaussianSpec gamma_eps;
  GaussianSpec gamma_y;
};

// Reusable tester: projection samplers are factorized once.
class GofTester {
 public:
  GofTester(const ProjectionSpecs& specs, TestConfig config)
      : eps_sampler_(projection_spec(specs.gamma_eps)),
        y_sampler_(projection_spec(specs.gamma_y)),
        config_(config) {
    config_.validate();
    require_same_grid(eps_sampler_.grid(), y_sampler_.grid(), "GofTester");
  }

  const TestConfig& config() const { return config_; }

  GridFunction gamma_eps(const RngStream& rng, int k) const {
    Engine e = rng.with(Purpose::gamma_eps, static_cast<std::uint64_t>(k)).engine();
    return eps_sampler_.draw(e);
  }
  GridFunction gamma_y(const RngStream& rng, int k) const {
    Engine e = rng.with(Purpose::gamma_y, static_cast<std::uint64_t>(k)).engine();
    return y_sampler_.draw(e);
  }

  // Per-projection statistics and p-values for directions 0..count-1. Direction
  // k always comes from the same streams, so a larger count extends a smaller one.
  std::vector<ProjectionResult> projections(const FunctionalSeries& series, const KernelMatrix& residual_gamma,
                                            const RngStream& rng, int count) const {
    std::vector<ProjectionResult> out;
    out.reserve(static_cast<std::size_t>(count));
    const RowMatrix resid = residual_functions(series, residual_gamma, config_.convention);
    for (int k = 0; k < count; ++k) {
      const ProjectedSample sample = project_residuals(series, resid, gamma_eps(rng, k), gamma_y(rng, k));
      const BootstrapResult r =
          fast_bootstrap_pvalue(sample, config_, rng.with(Purpose::bootstrap, static_cast<std::uint64_t>(k)));
      out.push_back({r.statistic, r.p_value});
    }
    return out;
  }

  TestOutcome run(const FunctionalSeries& series, const KernelMatrix& gamma0, const RngStream& rng,
                  TestMode mode) const {
    require_same_grid(series.grid(), gamma0.grid(), "run_gof_test");
    TestOutcome out;
    out.alpha = config_.alpha;
    out.mode = mode;
    out.innovation_trace = trace_norm(innovation_cov_h0(series, gamma0, config_.convention));
    if (mode == TestMode::specified) {
      out.per_projection = projections(series, gamma0, rng, config_.n_projections);
    } else {
      const GammaEstimate est = estimate_autocorrelation(series);
      out.k_n = est.k_n;
      out.per_projection = projections(series, est.op, rng, config_.n_projections);
    }
    std::vector<double> p;
    for (const auto& r : out.per_projection) p.push_back(r.p_value);
    out.combined_p = fdr_combine(p);
    out.reject = out.combined_p <= config_.alpha;
    return out;
  }

 private:
  GaussianSampler eps_sampler_;
  GaussianSampler y_sampler_;
  TestConfig config_;
};

inline TestOutcome run_gof_test(const FunctionalSeries& series, const KernelMatrix& gamma0, const TestConfig& config,
                                const ProjectionSpecs& specs, const RngStream& rng,
                                TestMode mode = TestMode::specified) {
  return GofTester(specs, config).run(series, gamma0, rng, mode);
}

// max over jump points of |V~_n - V_n|, where V~_n uses the estimated operator
// in the residuals and both paths share the same thresholds.
inline double equivalence_gap(const FunctionalSeries& series, const KernelMatrix& gamma_true,
                              const GammaEstimate& gamma_est, const GridFunction& gamma_eps,
                              const GridFunction& gamma_y) {
  const MepPath exact = mep_path(compute_residual_marks(series, gamma_true, gamma_eps, gamma_y));
  const MepPath fitted = mep_path(compute_residual_marks(series, gamma_est.op, gamma_eps, gamma_y));
  double gap = 0.0;
  for (std::size_t j = 0; j < exact.values.size(); ++j)
    gap = std::max(gap, std::abs(fitted.values[j] - exact.values[j]));
  return gap;
}

// Variance of <eps, g> under the innovation kernel: sum_ab w_a w_b g_a K_ab g_b.
inline double projected_variance(const KernelMatrix& eps_kernel, const GridFunction& gamma_eps) {
  require_same_grid(eps_kernel.grid(), gamma_eps.grid(), "projected_variance");
  const Vector wg = eps_kernel.grid()->weight_vector().cwiseProduct(gamma_eps.values());
  return wg.dot(eps_kernel.entries() * wg);
}

// Var V at a threshold whose covariate CDF value is `prob`: prob * Var <eps, g>.
inline double variance_oracle(const KernelMatrix& eps_kernel, const GridFunction& gamma_eps, double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw PreconditionError("variance_oracle: prob must lie in [0,1]");
  return prob * projected_variance(eps_kernel, gamma_eps);
}

// Cov(V(s), V(t)) = min(F(s), F(t)) * Var <eps, g>.
inline double covariance_oracle(const KernelMatrix& eps_kernel, const GridFunction& gamma_eps, double prob_s,
                                double prob_t) {
  return variance_oracle(eps_kernel, gamma_eps, std::min(prob_s, prob_t));
}

inline void write_outcome_csv(std::ostream& os, const TestOutcome& outcome) {
  os << "projection_index,statistic,p_value\n";
  for (std::size_t k = 0; k < outcome.per_projection.size(); ++k)
    os << k << ',' << csv::format_double(outcome.per_projection[k].statistic) << ','
       << csv::format_double(outcome.per_projection[k].p_value) << '\n';
  os << "combined_p,reject,alpha,mode,k_n\n";
  os << csv::format_double(outcome.combined_p) << ',' << (outcome.reject ? "true" : "false") << ','
     << csv::format_double(outcome.alpha) << ',' << to_string(outcome.mode) << ','
     << (outcome.k_n ? std::to_string(*outcome.k_n) : std::string("NA")) << '\n';
}

}  // namespace arhgof
