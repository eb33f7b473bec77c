/*
 * Copyright (c) 2026, The MITP Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Plain loop reference implementations used as independent oracles. Nothing
// here touches the library's tensor code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline Vec matmul(const Vec& a, const Vec& b, std::size_t m, std::size_t k, std::size_t n) {
  Vec c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  return c;
}

inline Vec layer_norm(const Vec& x, const Vec& g, const Vec& b, std::size_t m, std::size_t n, double eps) {
  Vec y(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x[i * n + j];
    mu /= n;
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[i * n + j] - mu) * (x[i * n + j] - mu);
    var /= n;
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = (x[i * n + j] - mu) / std::sqrt(var + eps) * g[j] + b[j];
  }
  return y;
}

// Row-wise x W1 + b1 -> relu -> W2 + b2.
inline Vec mlp(const Vec& x, std::size_t rows, std::size_t in, std::size_t hidden, std::size_t out, const Vec& w1,
               const Vec& b1, const Vec& w2, const Vec& b2) {
  Vec y(rows * out);
  for (std::size_t r = 0; r < rows; ++r) {
    Vec h(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double s = b1[j];
      for (std::size_t i = 0; i < in; ++i) s += x[r * in + i] * w1[i * hidden + j];
      h[j] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t o = 0; o < out; ++o) {
      double s = b2[o];
      for (std::size_t j = 0; j < hidden; ++j) s += h[j] * w2[j * out + o];
      y[r * out + o] = s;
    }
  }
  return y;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline double cosine(const double* a, const double* b, std::size_t d) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < d; ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

inline double covariance(const double* a, const double* b, std::size_t d) {
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < d; ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= d;
  mb /= d;
  double s = 0;
  for (std::size_t k = 0; k < d; ++k) s += (a[k] - ma) * (b[k] - mb);
  return s / (d - 1);
}

inline double pearson(const double* a, const double* b, std::size_t d) {
  const double va = covariance(a, a, d), vb = covariance(b, b, d);
  if (va == 0.0 || vb == 0.0) return 0.0;
  return covariance(a, b, d) / std::sqrt(va * vb);
}

// Median of the pairwise distances among the pooled samples x ∪ y.
inline double median_bandwidth(const double* x, const double* y, std::size_t d) {
  Vec pool(x, x + d);
  pool.insert(pool.end(), y, y + d);
  Vec dist;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) dist.push_back(std::abs(pool[i] - pool[j]));
  std::sort(dist.begin(), dist.end());
  const std::size_t n = dist.size();
  const double med = n % 2 ? dist[n / 2] : 0.5 * (dist[n / 2 - 1] + dist[n / 2]);
  return med > 0.0 ? med : 1.0;
}

// Unbiased MMD^2 with k(u,v) = exp(-(u-v)^2 / (2 s^2)).
inline double mmd2(const double* x, const double* y, std::size_t d, double s) {
  auto k = [s](double u, double v) { return std::exp(-(u - v) * (u - v) / (2 * s * s)); };
  double xx = 0, yy = 0, xy = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j) {
        xx += k(x[i], x[j]);
        yy += k(y[i], y[j]);
      }
      xy += k(x[i], y[j]);
    }
  const double n = static_cast<double>(d);
  return xx / (n * (n - 1)) + yy / (n * (n - 1)) - 2 * xy / (n * n);
}

inline double mmd_similarity(const double* x, const double* y, std::size_t d) {
  return std::exp(-std::max(0.0, mmd2(x, y, d, median_bandwidth(x, y, d))));
}

// Multinomial logistic regression fitted by full-batch gradient descent on
// standardised features; returns accuracy on the evaluation set.
inline double linear_probe_accuracy(const std::vector<Vec>& train_x, const std::vector<std::size_t>& train_y,
                                    const std::vector<Vec>& test_x, const std::vector<std::size_t>& test_y,
                                    std::size_t classes, int iterations = 400, double lr = 0.5) {
  const std::size_t d = train_x.front().size();
  Vec mu(d, 0.0), sd(d, 0.0);
  for (const auto& x : train_x)
    for (std::size_t j = 0; j < d; ++j) mu[j] += x[j] / train_x.size();
  for (const auto& x : train_x)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (x[j] - mu[j]) * (x[j] - mu[j]) / train_x.size();
  for (auto& s : sd) s = s > 0 ? std::sqrt(s) : 1.0;
  auto standard = [&](const Vec& x) {
    Vec z(d);
    for (std::size_t j = 0; j < d; ++j) z[j] = (x[j] - mu[j]) / sd[j];
    return z;
  };
  std::vector<Vec> tx;
  for (const auto& x : train_x) tx.push_back(standard(x));
  Vec w(classes * (d + 1), 0.0);
  auto scores = [&](const Vec& z) {
    Vec s(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      double v = w[c * (d + 1) + d];
      for (std::size_t j = 0; j < d; ++j) v += w[c * (d + 1) + j] * z[j];
      s[c] = v;
    }
    return s;
  };
  for (int it = 0; it < iterations; ++it) {
    Vec grad(w.size(), 0.0);
    for (std::size_t i = 0; i < tx.size(); ++i) {
      Vec s = scores(tx[i]);
      const double mx = *std::max_element(s.begin(), s.end());
      double total = 0;
      for (auto& v : s) total += (v = std::exp(v - mx));
      for (std::size_t c = 0; c < classes; ++c) {
        const double delta = s[c] / total - (c == train_y[i] ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) grad[c * (d + 1) + j] += delta * tx[i][j];
        grad[c * (d + 1) + d] += delta;
      }
    }
    for (std::size_t q = 0; q < w.size(); ++q) w[q] -= lr * grad[q] / tx.size();
  }
  std::size_t right = 0;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    const Vec s = scores(standard(test_x[i]));
    if (static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin()) == test_y[i]) ++right;
  }
  return static_cast<double>(right) / test_x.size();
}

}  // namespace oracle
