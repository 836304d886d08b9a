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

// Discretized L2[0,1]: grids, grid functions, kernel matrices and the
// quadrature realizations of the inner product, operator application and
// trace norm.
//
// Convention: an operator is stored as a plain matrix whose quadrature weight
// is already folded in, so applying it is an unweighted matrix-vector product.
// Inner products and traces carry the grid weights explicitly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "arhgof/error.hpp"

namespace arhgof {

class Grid;
using GridHandle = std::shared_ptr<const Grid>;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kDefaultGridSize = 71;

class Grid {
 public:
  Grid(std::vector<double> nodes, std::vector<double> weights)
      : nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (nodes_.empty()) throw StructuralError("Grid: no nodes");
    if (nodes_.size() != weights_.size())
      throw StructuralError("Grid: nodes and weights differ in length");
    if (nodes_.front() < 0.0 || nodes_.back() > 1.0)
      throw PreconditionError("Grid: nodes must lie in [0,1]");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (!(nodes_[i] > nodes_[i - 1]))
        throw PreconditionError("Grid: nodes must be strictly increasing");
    for (double w : weights_)
      if (!(w > 0.0) || !std::isfinite(w))
        throw PreconditionError("Grid: weights must be positive");
  }

  // m equispaced nodes (i)/(m-1) with weight 1/m each.
  static GridHandle uniform(int m = kDefaultGridSize) {
    if (m < 1) throw PreconditionError("Grid::uniform: m must be >= 1");
    std::vector<double> nodes(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) nodes[i] = m == 1 ? 0.0 : static_cast<double>(i) / (m - 1);
    std::vector<double> weights(static_cast<std::size_t>(m), 1.0 / m);
    return std::make_shared<const Grid>(std::move(nodes), std::move(weights));
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }

  Eigen::Map<const Vector> weight_vector() const {
    return {weights_.data(), static_cast<Eigen::Index>(weights_.size())};
  }

  // Trapezoid weights on the same nodes, summing to nodes.back() - nodes.front().
  std::vector<double> trapezoid_weights() const {
    const std::size_t m = nodes_.size();
    std::vector<double> t(m, 0.0);
    if (m == 1) {
      t[0] = 1.0;
      return t;
    }
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double h = nodes_[i + 1] - nodes_[i];
      t[i] += 0.5 * h;
      t[i + 1] += 0.5 * h;
    }
    return t;
  }

  bool operator==(const Grid& other) const {
    return nodes_ == other.nodes_ && weights_ == other.weights_;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

inline bool same_grid(const GridHandle& a, const GridHandle& b) {
  return a && b && (a == b || *a == *b);
}

inline void require_same_grid(const GridHandle& a, const GridHandle& b, const char* where) {
  if (!same_grid(a, b)) throw StructuralError(std::string(where) + ": grid mismatch");
}

namespace detail {
template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}
}  // namespace detail

class GridFunction {
 public:
  GridFunction(GridHandle grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw StructuralError("GridFunction: null grid");
    if (values_.size() != grid_->size())
      throw StructuralError("GridFunction: length does not match grid");
    if (!detail::all_finite(values_)) throw NumericalError("GridFunction: non-finite value");
  }

  static GridFunction zero(GridHandle grid) {
    const int m = grid->size();
    return {std::move(grid), Vector::Zero(m)};
  }

  static GridFunction constant(GridHandle grid, double c) {
    const int m = grid->size();
    return {std::move(grid), Vector::Constant(m, c)};
  }

  const GridHandle& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  GridHandle grid_;
  Vector values_;
};

// Maximum eigenvalue magnitude below zero tolerated for a symmetric kernel,
// relative to its largest diagonal entry.
inline constexpr double kPsdTolerance = 1e-8;

class KernelMatrix {
 public:
  KernelMatrix(GridHandle grid, Matrix entries, bool symmetric)
      : grid_(std::move(grid)), entries_(std::move(entries)), symmetric_(symmetric) {
    if (!grid_) throw StructuralError("KernelMatrix: null grid");
    const int m = grid_->size();
    if (entries_.rows() != m || entries_.cols() != m)
      throw StructuralError("KernelMatrix: shape does not match grid");
    if (!detail::all_finite(entries_)) throw NumericalError("KernelMatrix: non-finite entry");
    if (symmetric_) validate_symmetric_psd();
  }

  static KernelMatrix zero(GridHandle grid, bool symmetric = true) {
    const int m = grid->size();
    return {std::move(grid), Matrix::Zero(m, m), symmetric};
  }

  static KernelMatrix identity(GridHandle grid) {
    const int m = grid->size();
    return {std::move(grid), Matrix::Identity(m, m), true};
  }

  const GridHandle& grid() const { return grid_; }
  const Matrix& entries() const { return entries_; }
  bool symmetric() const { return symmetric_; }
  int size() const { return static_cast<int>(entries_.rows()); }

 private:
  void validate_symmetric_psd() const {
    if (entries_ != entries_.transpose())
      throw NumericalError("KernelMatrix: symmetric flag set on an asymmetric matrix");
    const double max_diag = entries_.diagonal().cwiseAbs().maxCoeff();
    if (max_diag == 0.0) {
      if (!entries_.isZero(0.0)) throw NumericalError("KernelMatrix: not positive semidefinite");
      return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTolerance * max_diag)
      throw NumericalError("KernelMatrix: not positive semidefinite");
  }

  GridHandle grid_;
  Matrix entries_;
  bool symmetric_;
};

class FunctionalSeries {
 public:
  FunctionalSeries(GridHandle grid, RowMatrix rows) : grid_(std::move(grid)), rows_(std::move(rows)) {
    if (!grid_) throw StructuralError("FunctionalSeries: null grid");
    if (rows_.cols() != grid_->size())
      throw StructuralError("FunctionalSeries: row length does not match grid");
    if (!detail::all_finite(rows_)) throw NumericalError("FunctionalSeries: non-finite value");
  }

  const GridHandle& grid() const { return grid_; }
  const RowMatrix& rows() const { return rows_; }
  int length() const { return static_cast<int>(rows_.rows()); }
  GridFunction at(int t) const { return {grid_, rows_.row(t).transpose()}; }

  // First `count` observations.
  FunctionalSeries head(int count) const {
    if (count < 0 || count > length()) throw PreconditionError("FunctionalSeries::head: bad count");
    return {grid_, rows_.topRows(count)};
  }

 private:
  GridHandle grid_;
  RowMatrix rows_;
};

inline double inner_product(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  return (f.values().array() * g.values().array() * f.grid()->weight_vector().array()).sum();
}

inline double norm(const GridFunction& f) { return std::sqrt(inner_product(f, f)); }

// How an operator matrix turns into a sum over the grid.
//   kernel_scaled: plain matrix-vector product (weight folded into the kernel).
//   trapezoid: the kernel is read as K(u,v)/m and re-integrated with trapezoid
//              weights, i.e. result_i = sum_j K_ij * m * tau_j * f_j.
enum class OperatorConvention { kernel_scaled, trapezoid };

// Matrix that realizes the operator as a plain matrix-vector product.
inline Matrix effective_operator(const KernelMatrix& k, OperatorConvention convention) {
  if (convention == OperatorConvention::kernel_scaled) return k.entries();
  const auto tau = k.grid()->trapezoid_weights();
  const double m = k.size();
  Vector scale(k.size());
  for (int j = 0; j < k.size(); ++j) scale[j] = m * tau[static_cast<std::size_t>(j)];
  return k.entries() * scale.asDiagonal();
}

inline GridFunction apply_operator(const KernelMatrix& k, const GridFunction& f,
                                   OperatorConvention convention = OperatorConvention::kernel_scaled) {
  require_same_grid(k.grid(), f.grid(), "apply_operator");
  if (convention == OperatorConvention::kernel_scaled) return {f.grid(), k.entries() * f.values()};
  return {f.grid(), effective_operator(k, convention) * f.values()};
}

inline double trace_norm(const KernelMatrix& k) {
  if (!k.symmetric()) throw PreconditionError("trace_norm: kernel is not symmetric");
  return (k.entries().diagonal().array() * k.grid()->weight_vector().array()).sum();
}

// Operator norm in the weighted L2 space of the operator f -> A f, with A applied
// as a plain matrix-vector product: the largest singular value of W^{1/2} A W^{-1/2}.
inline double weighted_operator_norm(const Matrix& a, const GridHandle& grid) {
  const Vector sw = grid->weight_vector().cwiseSqrt();
  const Matrix scaled = sw.asDiagonal() * a * sw.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(scaled);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

inline double operator_norm(const KernelMatrix& k,
                            OperatorConvention convention = OperatorConvention::kernel_scaled) {
  return weighted_operator_norm(effective_operator(k, convention), k.grid());
}

}  // namespace arhgof
