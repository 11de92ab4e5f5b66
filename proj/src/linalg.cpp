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

#include "linalg.hpp"

#include <algorithm>
#include <cmath>

namespace laneperf {

Mat Mat::identity(int dim) {
  Mat m(dim);
  for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
  return m;
}

Mat mat_mul(const Mat& x, const Mat& y) {
  Mat out(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      double v = x.at(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < x.n; ++j) out.at(i, j) += v * y.at(k, j);
    }
  return out;
}

double trace(const Mat& m) {
  double t = 0.0;
  for (int i = 0; i < m.n; ++i) t += m.at(i, i);
  return t;
}

double frobenius_norm(const Mat& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

GaussianStats gaussian_stats(const std::vector<std::vector<double>>& features,
                             bool bessel) {
  if (features.empty()) throw DataError("gaussian_stats: empty feature list");
  size_t d = features[0].size();
  for (const auto& f : features)
    if (f.size() != d) throw DataError("gaussian_stats: ragged feature dimensions");
  GaussianStats out;
  out.n = static_cast<int64_t>(features.size());
  out.mu.assign(d, 0.0);
  for (const auto& f : features)
    for (size_t i = 0; i < d; ++i) out.mu[i] += f[i];
  for (size_t i = 0; i < d; ++i) out.mu[i] /= static_cast<double>(out.n);

  out.sigma = Mat(static_cast<int>(d));
  double denom = bessel ? std::max<int64_t>(out.n - 1, 1) : out.n;
  for (const auto& f : features)
    for (size_t i = 0; i < d; ++i) {
      double di = f[i] - out.mu[i];
      for (size_t j = i; j < d; ++j)
        out.sigma.at(static_cast<int>(i), static_cast<int>(j)) +=
            di * (f[j] - out.mu[j]);
    }
  for (size_t i = 0; i < d; ++i)
    for (size_t j = i; j < d; ++j) {
      double v = out.sigma.at(static_cast<int>(i), static_cast<int>(j)) / denom;
      out.sigma.at(static_cast<int>(i), static_cast<int>(j)) = v;
      out.sigma.at(static_cast<int>(j), static_cast<int>(i)) = v;
    }
  return out;
}

void jacobi_eigen(const Mat& m, std::vector<double>& eigvals, Mat& eigvecs) {
  int n = m.n;
  Mat a = m;
  eigvecs = Mat::identity(n);

  double scale = 0.0;
  for (double v : a.a) scale = std::max(scale, std::abs(v));
  double tol = 1e-12 * (scale > 0.0 ? scale : 1.0);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a.at(p, q)));
    if (off <= tol) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a.at(p, q);
        if (std::abs(apq) <= tol) continue;
        double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = eigvecs.at(k, p), vkq = eigvecs.at(k, q);
          eigvecs.at(k, p) = c * vkp - s * vkq;
          eigvecs.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  eigvals.resize(n);
  for (int i = 0; i < n; ++i) eigvals[i] = a.at(i, i);

  // Sort ascending, permuting eigenvector columns alongside.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return eigvals[x] < eigvals[y]; });
  std::vector<double> sorted_vals(n);
  Mat sorted_vecs(n);
  for (int i = 0; i < n; ++i) {
    sorted_vals[i] = eigvals[order[i]];
    for (int k = 0; k < n; ++k) sorted_vecs.at(k, i) = eigvecs.at(k, order[i]);
  }
  eigvals = std::move(sorted_vals);
  eigvecs = std::move(sorted_vecs);
}

Mat sym_sqrt(const Mat& m) {
  double scale = 0.0;
  for (double v : m.a) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j)
      if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-8 * (1.0 + scale))
        throw DataError("sym_sqrt: input matrix is not symmetric");

  std::vector<double> vals;
  Mat vecs;
  jacobi_eigen(m, vals, vecs);
  for (double& v : vals) {
    if (v < -1e-8 * (1.0 + scale))
      throw DataError("sym_sqrt: input matrix is not positive semidefinite");
    v = v > 0.0 ? std::sqrt(v) : 0.0;
  }
  // V * diag(sqrt(lambda)) * V^T
  Mat out(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = i; j < m.n; ++j) {
      double s = 0.0;
      for (int k = 0; k < m.n; ++k) s += vecs.at(i, k) * vals[k] * vecs.at(j, k);
      out.at(i, j) = s;
      out.at(j, i) = s;
    }
  return out;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mu.size() != b.mu.size())
    throw DataError("frechet_distance: dimension mismatch");
  int n = a.sigma.n;

  // Shrinkage keeps the inner root well behaved under rank deficiency. The
  // scale is tied to the matrix itself so the 1-D closed form survives.
  auto shrunk = [](const Mat& s) {
    double mean_diag = 0.0;
    for (int i = 0; i < s.n; ++i) mean_diag += s.at(i, i);
    mean_diag /= s.n > 0 ? s.n : 1;
    Mat out = s;
    double eps = 1e-12 * mean_diag;
    for (int i = 0; i < s.n; ++i) out.at(i, i) += eps;
    return out;
  };
  Mat sa = shrunk(a.sigma);
  Mat sb = shrunk(b.sigma);

  double mu_term = 0.0;
  for (size_t i = 0; i < a.mu.size(); ++i) {
    double d = a.mu[i] - b.mu[i];
    mu_term += d * d;
  }

  Mat root_a = sym_sqrt(sa);
  Mat inner = mat_mul(mat_mul(root_a, sb), root_a);
  // Symmetrize against accumulated roundoff before the second root.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = 0.5 * (inner.at(i, j) + inner.at(j, i));
      inner.at(i, j) = v;
      inner.at(j, i) = v;
    }
  double cross = trace(sym_sqrt(inner));
  double dist = mu_term + trace(sa) + trace(sb) - 2.0 * cross;
  return std::max(dist, 0.0);
}

LinearFit fit_linear_regression(const std::vector<double>& xs,
                                const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DataError("fit_linear_regression: need >= 2 paired points");
  size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LinearFit fit;
  if (sxx / static_cast<double>(n) < 1e-12) {
    fit.slope = 0.0;
    fit.intercept = my;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace laneperf
