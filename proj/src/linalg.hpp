// Copyright 2026 The LanePerf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LANEPERF_LINALG_HPP
#define LANEPERF_LINALG_HPP

#include <vector>

#include "types.hpp"

namespace laneperf {

// Small dense square matrix, row-major. Dimensions here are lane-feature
// sized (tens), so no sparse or blocked machinery.
struct Mat {
  int n = 0;
  std::vector<double> a;

  Mat() = default;
  explicit Mat(int dim) : n(dim), a(static_cast<size_t>(dim) * dim, 0.0) {}
  double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
  static Mat identity(int dim);
};

Mat mat_mul(const Mat& x, const Mat& y);
double trace(const Mat& m);
double frobenius_norm(const Mat& m);

struct GaussianStats {
  std::vector<double> mu;
  Mat sigma;
  int64_t n = 0;
};

// Sample mean and covariance (1/n by default, 1/(n-1) with bessel=true);
// the covariance is symmetrized as (S + S^T)/2.
GaussianStats gaussian_stats(const std::vector<std::vector<double>>& features,
                             bool bessel = false);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations
// (off-diagonal tolerance 1e-12 relative, at most 100 sweeps).
// Returns eigenvalues ascending; eigvecs columns are the eigenvectors.
void jacobi_eigen(const Mat& m, std::vector<double>& eigvals, Mat& eigvecs);

// Symmetric PSD square root: S with S*S ~= m. Negative eigenvalues (within
// -1e-8 tolerance) are clamped to zero; an asymmetric input throws.
Mat sym_sqrt(const Mat& m);

// ||mu_a - mu_b||^2 + Tr(Sa) + Tr(Sb) - 2 Tr((Sa^1/2 Sb Sa^1/2)^1/2),
// clamped at zero. The trace of the similarity-transformed root equals
// Tr((Sa Sb)^1/2) for PSD inputs.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Least-squares line fit. When variance(xs) < 1e-12 the fit degenerates to
// (slope 0, intercept mean(ys)).
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit fit_linear_regression(const std::vector<double>& xs,
                                const std::vector<double>& ys);

}  // namespace laneperf

#endif  // LANEPERF_LINALG_HPP
