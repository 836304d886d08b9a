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

#include <Eigen/Eigenvalues>

#include <vector>

#include "arhgof/error.hpp"
#include "arhgof/func_core.hpp"

namespace arhgof {

// Eigenpairs of a covariance kernel viewed as an integral operator on the
// weighted grid. Eigenvalues are descending and nonnegative; eigenfunctions
// (columns of `basis`) are orthonormal in the quadrature inner product.
struct EigenSystem {
  GridHandle grid;
  Vector eigenvalues;
  Matrix basis;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  GridFunction eigenfunction(int k) const { return {grid, basis.col(k)}; }

  // Coordinates <y, phi_k> of every row of `rows`, as an n x size() matrix.
  Matrix coordinates(const RowMatrix& rows) const {
    const Vector w = grid->weight_vector();
    return rows * (w.asDiagonal() * basis);
  }
};

// Solves the weighted problem through diag(sqrt w) K diag(sqrt w) and maps the
// eigenvectors back by 1/sqrt(w). Each eigenfunction's first significant
// coordinate is made positive.
inline EigenSystem eigen_decompose(const KernelMatrix& k) {
  if (!k.symmetric()) throw PreconditionError("eigen_decompose: kernel is not symmetric");
  const int m = k.size();
  const Vector sw = k.grid()->weight_vector().cwiseSqrt();
  const Matrix scaled = sw.asDiagonal() * k.entries() * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
  if (es.info() != Eigen::Success) throw NumericalError("eigen_decompose: solver failed");

  EigenSystem sys{k.grid(), Vector(m), Matrix(m, m)};
  for (int c = 0; c < m; ++c) {
    const int src = m - 1 - c;
    sys.eigenvalues[c] = std::max(es.eigenvalues()[src], 0.0);
    Vector phi = es.eigenvectors().col(src).cwiseQuotient(sw);
    const double scale = phi.cwiseAbs().maxCoeff();
    for (int i = 0; i < m; ++i) {
      if (std::abs(phi[i]) > 1e-12 * scale) {
        if (phi[i] < 0) phi = -phi;
        break;
      }
    }
    sys.basis.col(c) = phi;
  }
  return sys;
}

}  // namespace arhgof
