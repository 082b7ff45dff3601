/* Copyright 2026 The protohead Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <Eigen/Dense>
#include <cmath>

#include "protohead/numerics.hpp"

namespace protohead {

Pca2d pca_2d(const Matrix& points) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (n < 3) throw Error("pca_2d: need at least 3 points, got " + std::to_string(n));
  if (d < 1) throw ShapeError("pca_2d: points have zero columns");

  Pca2d out;
  out.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += points(i, j);
  for (double& m : out.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd centred(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centred(i, j) = points(i, j) - out.mean[j];
  Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("pca_2d: eigendecomposition failed");
  // Eigenvalues ascend.
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const double top = evals(d - 1);
  if (!(top > 0.0)) throw Error("pca_2d: data has rank 0 (all points identical)");
  const double tol = top * 1e-12 * static_cast<double>(d);

  out.coords = Matrix(n, 2);
  for (int c = 0; c < 2; ++c) {
    std::vector<double> comp(d, 0.0);
    double var = 0.0;
    if (static_cast<std::size_t>(c) < d) {
      const Eigen::Index idx = static_cast<Eigen::Index>(d - 1 - c);
      var = evals(idx);
      if (var <= tol) var = 0.0;
      if (var > 0.0) {
        for (std::size_t j = 0; j < d; ++j) comp[j] = solver.eigenvectors()(static_cast<Eigen::Index>(j), idx);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
          if (std::abs(comp[j]) > std::abs(comp[arg])) arg = j;
        if (comp[arg] < 0.0)
          for (double& x : comp) x = -x;
      }
    }
    out.variance[c] = var;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (points(i, j) - out.mean[j]) * comp[j];
      out.coords(i, c) = s;
    }
    out.components[c] = std::move(comp);
  }
  return out;
}

}  // namespace protohead
