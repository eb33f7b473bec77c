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

#include "mitp/numerics/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mitp/numerics/error.hpp"

namespace mitp::ops {

namespace {

using detail::Node;

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(fmt::format("{}: incompatible shapes {} and {}", op, shape_str(a.shape()), shape_str(b.shape())));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const std::string& why) {
  throw ShapeError(fmt::format("{}: shape {} {}", op, shape_str(a.shape()), why));
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2) shape_fail(op, a, "is not a matrix");
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail(op, a, b);
}

Buffer buffer(std::size_t n) { return Buffer(n, 0.0); }

Node& in(Node& self, std::size_t i) { return *self.inputs[i]; }

void warn_degenerate(const char* op) {
  static std::atomic<bool> cosine_warned{false};
  static std::atomic<bool> pearson_warned{false};
  auto& flag = std::string_view(op) == "row_cosine" ? cosine_warned : pearson_warned;
  if (!flag.exchange(true)) {
    spdlog::warn("{}: degenerate row (zero norm or zero variance) scored as 0", op);
  }
}

// Elementwise unary op with derivative expressed via (x, y).
template <class F, class D>
Tensor unary(const Tensor& a, const char* op, F f, D df) {
  const auto x = a.values();
  Buffer y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return Tensor::make_result(a.shape(), std::move(y), op, {a}, [df](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(a.values[i], self.values[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  std::size_t m, k, n;
  Shape out;
  if (a.rank() == 2 && b.rank() == 2) {
    m = a.rows(); k = a.cols(); n = b.cols();
    if (b.rows() != k) shape_fail("matmul", a, b);
    out = {m, n};
  } else if (a.rank() == 2 && b.rank() == 1) {
    m = a.rows(); k = a.cols(); n = 1;
    if (b.numel() != k) shape_fail("matmul", a, b);
    out = {m};
  } else if (a.rank() == 1 && b.rank() == 2) {
    m = 1; k = a.numel(); n = b.cols();
    if (b.rows() != k) shape_fail("matmul", a, b);
    out = {n};
  } else {
    shape_fail("matmul", a, b);
  }
  const double* A = a.values().data();
  const double* B = b.values().data();
  Buffer c = buffer(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double* C = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* Brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) C[j] += av * Brow[j];
    }
  }
  return Tensor::make_result(std::move(out), std::move(c), "matmul", {a, b}, [m, k, n](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    const double* G = self.grad.data();
    if (a.requires_grad) {
      auto& ga = a.grad_buffer();
      const double* B = b.values.data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* Brow = B + p * n;
          const double* Grow = G + i * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += Grow[j] * Brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (b.requires_grad) {
      auto& gb = b.grad_buffer();
      const double* A = a.values.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* Grow = G + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          double* GB = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) GB[j] += av * Grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  const auto x = a.values();
  Buffer y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
  return Tensor::make_result({n, m}, std::move(y), "transpose", {a}, [m, n](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  const auto x = a.values(), z = b.values();
  Buffer y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + z[i];
  return Tensor::make_result(a.shape(), std::move(y), "add", {a, b}, [](Node& self) {
    for (std::size_t s = 0; s < 2; ++s) {
      Node& t = in(self, s);
      if (!t.requires_grad) continue;
      auto& g = t.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  const auto x = a.values(), z = b.values();
  Buffer y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - z[i];
  return Tensor::make_result(a.shape(), std::move(y), "sub", {a, b}, [](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    if (a.requires_grad) {
      auto& g = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.requires_grad) {
      auto& g = b.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  const auto x = a.values(), z = b.values();
  Buffer y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * z[i];
  return Tensor::make_result(a.shape(), std::move(y), "mul", {a, b}, [](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    if (a.requires_grad) {
      auto& g = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b.values[i];
    }
    if (b.requires_grad) {
      auto& g = b.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a.values[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) { return affine(a, c, 0.0); }

Tensor affine(const Tensor& a, double alpha, double beta) {
  const auto x = a.values();
  Buffer y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i] + beta;
  return Tensor::make_result(a.shape(), std::move(y), "affine", {a}, [alpha](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += alpha * self.grad[i];
  });
}

Tensor add_n(std::span<const Tensor> terms) {
  if (terms.empty()) throw ShapeError("add_n: no terms");
  Buffer y(terms[0].numel(), 0.0);
  for (const auto& t : terms) {
    require_same("add_n", terms[0], t);
    const auto x = t.values();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += x[i];
  }
  std::vector<Tensor> inputs(terms.begin(), terms.end());
  return Tensor::make_result(terms[0].shape(), std::move(y), "add_n", std::move(inputs), [](Node& self) {
    for (auto& t : self.inputs) {
      if (!t->requires_grad) continue;
      auto& g = t->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_matrix("add_bias", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.rank() != 1 || bias.numel() != n) shape_fail("add_bias", a, bias);
  const auto x = a.values(), b = bias.values();
  Buffer y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = x[i * n + j] + b[j];
  return Tensor::make_result(a.shape(), std::move(y), "add_bias", {a, bias}, [m, n](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    if (a.requires_grad) {
      auto& g = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.requires_grad) {
      auto& g = b.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
  require_matrix("scale_rows", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (s.rank() != 1 || s.numel() != m) shape_fail("scale_rows", a, s);
  const auto x = a.values(), w = s.values();
  Buffer y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = w[i] * x[i * n + j];
  return Tensor::make_result(a.shape(), std::move(y), "scale_rows", {a, s}, [m, n](Node& self) {
    Node& a = in(self, 0);
    Node& s = in(self, 1);
    if (a.requires_grad) {
      auto& g = a.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += s.values[i] * self.grad[i * n + j];
    }
    if (s.requires_grad) {
      auto& g = s.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += a.values[i * n + j] * self.grad[i * n + j];
        g[i] += acc;
      }
    }
  });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  return unary(
      a, "gelu", [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
      [](double x, double) {
        const double t = std::tanh(c * (x + k * x * x * x));
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * k * x * x);
      });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a, double floor) {
  return unary(
      a, "log", [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  std::size_t outer, len, stride;
  if (a.rank() == 1) {
    if (axis != 0) shape_fail("softmax", a, fmt::format("has no axis {}", axis));
    outer = 1; len = a.numel(); stride = 1;
  } else if (a.rank() == 2) {
    if (axis == 1) {
      outer = a.rows(); len = a.cols(); stride = 1;
    } else if (axis == 0) {
      outer = a.cols(); len = a.rows(); stride = a.cols();
    } else {
      shape_fail("softmax", a, fmt::format("has no axis {}", axis));
    }
  } else {
    shape_fail("softmax", a, "is not a vector or matrix");
  }
  if (len == 0) shape_fail("softmax", a, "has an empty softmax axis");
  // Index of element t along the axis within slice o.
  const bool by_row = a.rank() == 1 || axis == 1;
  auto index = [=](std::size_t o, std::size_t t) { return by_row ? o * len + t : t * stride + o; };
  const auto x = a.values();
  Buffer y(x.size());
  for (std::size_t o = 0; o < outer; ++o) {
    double mx = -INFINITY;
    for (std::size_t t = 0; t < len; ++t) mx = std::max(mx, x[index(o, t)]);
    double total = 0.0;
    for (std::size_t t = 0; t < len; ++t) total += (y[index(o, t)] = std::exp(x[index(o, t)] - mx));
    for (std::size_t t = 0; t < len; ++t) y[index(o, t)] /= total;
  }
  return Tensor::make_result(a.shape(), std::move(y), "softmax", {a}, [=](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t o = 0; o < outer; ++o) {
      double dot = 0.0;
      for (std::size_t t = 0; t < len; ++t) dot += self.grad[index(o, t)] * self.values[index(o, t)];
      for (std::size_t t = 0; t < len; ++t) {
        const auto i = index(o, t);
        g[i] += self.values[i] * (self.grad[i] - dot);
      }
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps) {
  if (a.rank() != 1 && a.rank() != 2) shape_fail("layer_norm", a, "is not a vector or matrix");
  const std::size_t n = a.shape().back();
  const std::size_t m = a.numel() / n;
  if (gamma.rank() != 1 || gamma.numel() != n) shape_fail("layer_norm", a, gamma);
  if (beta.rank() != 1 || beta.numel() != n) shape_fail("layer_norm", a, beta);
  const auto x = a.values(), gm = gamma.values(), bt = beta.values();
  Buffer y(x.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* r = x.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += r[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (r[j] - mu) * (r[j] - mu);
    var /= static_cast<double>(n);
    const double rstd = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = (r[j] - mu) * rstd * gm[j] + bt[j];
  }
  return Tensor::make_result(a.shape(), std::move(y), "layer_norm", {a, gamma, beta}, [m, n, eps](Node& self) {
    Node& a = in(self, 0);
    Node& gamma = in(self, 1);
    Node& beta = in(self, 2);
    std::vector<double> xhat(n), dxhat(n);
    for (std::size_t i = 0; i < m; ++i) {
      const double* r = a.values.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      double mu = 0.0;
      for (std::size_t j = 0; j < n; ++j) mu += r[j];
      mu /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t j = 0; j < n; ++j) var += (r[j] - mu) * (r[j] - mu);
      var /= static_cast<double>(n);
      const double rstd = 1.0 / std::sqrt(var + eps);
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        xhat[j] = (r[j] - mu) * rstd;
        dxhat[j] = dy[j] * gamma.values[j];
        mean_dxhat += dxhat[j];
        mean_dxhat_xhat += dxhat[j] * xhat[j];
      }
      mean_dxhat /= static_cast<double>(n);
      mean_dxhat_xhat /= static_cast<double>(n);
      if (a.requires_grad) {
        auto& g = a.grad_buffer();
        for (std::size_t j = 0; j < n; ++j)
          g[i * n + j] += rstd * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
      }
      if (gamma.requires_grad) {
        auto& g = gamma.grad_buffer();
        for (std::size_t j = 0; j < n; ++j) g[j] += dy[j] * xhat[j];
      }
      if (beta.requires_grad) {
        auto& g = beta.grad_buffer();
        for (std::size_t j = 0; j < n; ++j) g[j] += dy[j];
      }
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) shape_fail("reshape", a, fmt::format("cannot become {}", shape_str(shape)));
  Buffer y(a.values().begin(), a.values().end());
  return Tensor::make_result(std::move(shape), std::move(y), "reshape", {a}, [](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
  require_matrix("concat_rows", top);
  require_matrix("concat_rows", bottom);
  if (top.cols() != bottom.cols()) shape_fail("concat_rows", top, bottom);
  const std::size_t split = top.numel();
  Buffer y(top.numel() + bottom.numel());
  std::copy(top.values().begin(), top.values().end(), y.begin());
  std::copy(bottom.values().begin(), bottom.values().end(), y.begin() + static_cast<std::ptrdiff_t>(split));
  return Tensor::make_result({top.rows() + bottom.rows(), top.cols()}, std::move(y), "concat_rows", {top, bottom},
                             [split](Node& self) {
                               Node& t = in(self, 0);
                               Node& b = in(self, 1);
                               if (t.requires_grad) {
                                 auto& g = t.grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                               }
                               if (b.requires_grad) {
                                 auto& g = b.grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[split + i];
                               }
                             });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", a);
  if (begin >= end || end > a.rows()) shape_fail("slice_rows", a, fmt::format("cannot take rows [{}, {})", begin, end));
  const std::size_t n = a.cols();
  const auto x = a.values();
  Buffer y(x.begin() + static_cast<std::ptrdiff_t>(begin * n), x.begin() + static_cast<std::ptrdiff_t>(end * n));
  return Tensor::make_result({end - begin, n}, std::move(y), "slice_rows", {a}, [begin, n](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * n + i] += self.grad[i];
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  for (const auto& p : parts) {
    require_matrix("concat_cols", p);
    if (p.rows() != parts[0].rows()) shape_fail("concat_cols", parts[0], p);
  }
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    offsets.push_back(total);
    total += p.cols();
  }
  Buffer y(m * total);
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto x = parts[s].values();
    const std::size_t w = parts[s].cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(x.data() + i * w, w, y.data() + i * total + offsets[s]);
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return Tensor::make_result({m, total}, std::move(y), "concat_cols", std::move(inputs),
                             [m, total, offsets](Node& self) {
                               for (std::size_t s = 0; s < self.inputs.size(); ++s) {
                                 Node& p = *self.inputs[s];
                                 if (!p.requires_grad) continue;
                                 const std::size_t w = p.shape[1];
                                 auto& g = p.grad_buffer();
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * total + offsets[s] + j];
                               }
                             });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", a);
  if (begin >= end || end > a.cols()) shape_fail("slice_cols", a, fmt::format("cannot take cols [{}, {})", begin, end));
  const std::size_t m = a.rows(), n = a.cols(), w = end - begin;
  const auto x = a.values();
  Buffer y(m * w);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(x.data() + i * n + begin, w, y.data() + i * w);
  return Tensor::make_result({m, w}, std::move(y), "slice_cols", {a}, [m, n, w, begin](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += self.grad[i * w + j];
  });
}

Tensor row(const Tensor& a, std::size_t i) {
  require_matrix("row", a);
  if (i >= a.rows()) shape_fail("row", a, fmt::format("has no row {}", i));
  const std::size_t n = a.cols();
  const auto x = a.values();
  Buffer y(x.begin() + static_cast<std::ptrdiff_t>(i * n), x.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  return Tensor::make_result({n}, std::move(y), "row", {a}, [i, n](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_matrix("gather_rows", table);
  if (ids.empty()) shape_fail("gather_rows", table, "given no ids");
  const std::size_t n = table.cols();
  const auto x = table.values();
  Buffer y(ids.size() * n);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= table.rows()) shape_fail("gather_rows", table, fmt::format("has no row {}", ids[r]));
    std::copy_n(x.data() + ids[r] * n, n, y.data() + r * n);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return Tensor::make_result({ids.size(), n}, std::move(y), "gather_rows", {table}, [idx, n](Node& self) {
    Node& t = in(self, 0);
    if (!t.requires_grad) return;
    auto& g = t.grad_buffer();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) g[idx[r] * n + j] += self.grad[r * n + j];
  });
}

Tensor pick(const Tensor& a, std::size_t i) {
  if (i >= a.numel()) shape_fail("pick", a, fmt::format("has no element {}", i));
  Buffer y{a.values()[i]};
  return Tensor::make_result({}, std::move(y), "pick", {a}, [i](Node& self) {
    Node& a = in(self, 0);
    if (a.requires_grad) a.grad_buffer()[i] += self.grad[0];
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return Tensor::make_result({}, Buffer{s}, "sum", {a}, [](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mean_axis(const Tensor& a, std::size_t axis) {
  require_matrix("mean_axis", a);
  if (axis > 1) shape_fail("mean_axis", a, fmt::format("has no axis {}", axis));
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t out_n = axis == 1 ? m : n;
  const double inv = 1.0 / static_cast<double>(axis == 1 ? n : m);
  const auto x = a.values();
  Buffer y(out_n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[axis == 1 ? i : j] += x[i * n + j] * inv;
  return Tensor::make_result({out_n}, std::move(y), "mean_axis", {a}, [=](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[axis == 1 ? i : j] * inv;
  });
}

Tensor variance_axis(const Tensor& a, std::size_t axis, std::size_t ddof) {
  require_matrix("variance_axis", a);
  if (axis > 1) shape_fail("variance_axis", a, fmt::format("has no axis {}", axis));
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t count = axis == 1 ? n : m;
  if (count <= ddof) shape_fail("variance_axis", a, fmt::format("has too few samples for ddof {}", ddof));
  const std::size_t out_n = axis == 1 ? m : n;
  const auto x = a.values();
  std::vector<double> mu(out_n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) mu[axis == 1 ? i : j] += x[i * n + j] / static_cast<double>(count);
  Buffer y(out_n, 0.0);
  const double div = static_cast<double>(count - ddof);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t o = axis == 1 ? i : j;
      const double c = x[i * n + j] - mu[o];
      y[o] += c * c / div;
    }
  return Tensor::make_result({out_n}, std::move(y), "variance_axis", {a}, [=](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t o = axis == 1 ? i : j;
        g[i * n + j] += self.grad[o] * 2.0 * (a.values[i * n + j] - mu[o]) / div;
      }
  });
}

Tensor normalize(const Tensor& v) {
  if (v.rank() != 1) shape_fail("normalize", v, "is not a vector");
  const auto x = v.values();
  double sq = 0.0;
  for (double e : x) sq += e * e;
  const double norm = std::sqrt(sq);
  Buffer y(x.size(), 0.0);
  if (norm > 0.0)
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / norm;
  return Tensor::make_result(v.shape(), std::move(y), "normalize", {v}, [norm](Node& self) {
    Node& v = in(self, 0);
    if (!v.requires_grad || norm == 0.0) return;
    double dot = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * self.values[i];
    auto& g = v.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += (self.grad[i] - self.values[i] * dot) / norm;
  });
}

namespace {

// Shared kernel for the cosine-style row similarities. When `centered` is
// set each row is mean-centred first, giving Pearson's r.
Tensor row_cosine_impl(const Tensor& a, const Tensor& b, bool centered, const char* op) {
  require_matrix(op, a);
  require_same(op, a, b);
  const std::size_t L = a.rows(), d = a.cols();
  if (centered && d < 2) shape_fail(op, a, "needs at least 2 features per row");
  const auto x = a.values(), z = b.values();
  Buffer y(L, 0.0);
  bool degenerate = false;
  for (std::size_t i = 0; i < L; ++i) {
    const double* ar = x.data() + i * d;
    const double* br = z.data() + i * d;
    double ma = 0.0, mb = 0.0, raw_a = 0.0, raw_b = 0.0;
    if (centered) {
      for (std::size_t k = 0; k < d; ++k) {
        ma += ar[k];
        mb += br[k];
      }
      ma /= static_cast<double>(d);
      mb /= static_cast<double>(d);
    }
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double ac = ar[k] - ma, bc = br[k] - mb;
      ab += ac * bc;
      aa += ac * ac;
      bb += bc * bc;
      raw_a += ar[k] * ar[k];
      raw_b += br[k] * br[k];
    }
    // Centring a constant row leaves rounding residue, so compare against
    // the raw energy rather than exact zero.
    const bool dead = aa <= 1e-24 * raw_a || bb <= 1e-24 * raw_b || aa == 0.0 || bb == 0.0;
    if (dead) {
      degenerate = true;
      continue;
    }
    y[i] = ab / std::sqrt(aa * bb);
  }
  if (degenerate) warn_degenerate(op);
  return Tensor::make_result({L}, std::move(y), op, {a, b}, [L, d, centered](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    std::vector<double> ac(d), bc(d);
    for (std::size_t i = 0; i < L; ++i) {
      const double s = self.values[i];
      const double* ar = a.values.data() + i * d;
      const double* br = b.values.data() + i * d;
      double ma = 0.0, mb = 0.0;
      if (centered) {
        for (std::size_t k = 0; k < d; ++k) {
          ma += ar[k];
          mb += br[k];
        }
        ma /= static_cast<double>(d);
        mb /= static_cast<double>(d);
      }
      double aa = 0.0, bb = 0.0, raw_a = 0.0, raw_b = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        ac[k] = ar[k] - ma;
        bc[k] = br[k] - mb;
        aa += ac[k] * ac[k];
        bb += bc[k] * bc[k];
        raw_a += ar[k] * ar[k];
        raw_b += br[k] * br[k];
      }
      if (aa <= 1e-24 * raw_a || bb <= 1e-24 * raw_b || aa == 0.0 || bb == 0.0) continue;
      const double na = std::sqrt(aa), nb = std::sqrt(bb);
      const double gi = self.grad[i];
      // Both gradients are already zero-mean when centred.
      if (a.requires_grad) {
        auto& g = a.grad_buffer();
        for (std::size_t k = 0; k < d; ++k) g[i * d + k] += gi * (bc[k] / (na * nb) - s * ac[k] / aa);
      }
      if (b.requires_grad) {
        auto& g = b.grad_buffer();
        for (std::size_t k = 0; k < d; ++k) g[i * d + k] += gi * (ac[k] / (na * nb) - s * bc[k] / bb);
      }
    }
  });
}

double rbf(double u, double v, double two_sigma_sq) { return std::exp(-(u - v) * (u - v) / two_sigma_sq); }

}  // namespace

Tensor row_cosine(const Tensor& a, const Tensor& b) { return row_cosine_impl(a, b, false, "row_cosine"); }

Tensor row_pearson(const Tensor& a, const Tensor& b) { return row_cosine_impl(a, b, true, "row_pearson"); }

Tensor row_covariance(const Tensor& a, const Tensor& b) {
  require_matrix("row_covariance", a);
  require_same("row_covariance", a, b);
  const std::size_t L = a.rows(), d = a.cols();
  if (d < 2) shape_fail("row_covariance", a, "needs at least 2 features per row");
  const auto x = a.values(), z = b.values();
  Buffer y(L, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    const double* ar = x.data() + i * d;
    const double* br = z.data() + i * d;
    double ma = 0.0, mb = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      ma += ar[k];
      mb += br[k];
    }
    ma /= static_cast<double>(d);
    mb /= static_cast<double>(d);
    double c = 0.0;
    for (std::size_t k = 0; k < d; ++k) c += (ar[k] - ma) * (br[k] - mb);
    y[i] = c / static_cast<double>(d - 1);
  }
  return Tensor::make_result({L}, std::move(y), "row_covariance", {a, b}, [L, d](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    const double div = static_cast<double>(d - 1);
    for (std::size_t i = 0; i < L; ++i) {
      const double* ar = a.values.data() + i * d;
      const double* br = b.values.data() + i * d;
      double ma = 0.0, mb = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        ma += ar[k];
        mb += br[k];
      }
      ma /= static_cast<double>(d);
      mb /= static_cast<double>(d);
      const double gi = self.grad[i];
      if (a.requires_grad) {
        auto& g = a.grad_buffer();
        for (std::size_t k = 0; k < d; ++k) g[i * d + k] += gi * (br[k] - mb) / div;
      }
      if (b.requires_grad) {
        auto& g = b.grad_buffer();
        for (std::size_t k = 0; k < d; ++k) g[i * d + k] += gi * (ar[k] - ma) / div;
      }
    }
  });
}

double mmd_bandwidth(std::span<const double> x, std::span<const double> y) {
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::vector<double> dist;
  dist.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) dist.push_back(std::abs(pooled[i] - pooled[j]));
  if (dist.empty()) return 1.0;
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median > 0.0 ? median : 1.0;
}

double mmd_squared(std::span<const double> x, std::span<const double> y, double bandwidth) {
  const std::size_t d = x.size();
  const double two_s2 = 2.0 * bandwidth * bandwidth;
  double kxx = 0.0, kyy = 0.0, kxy = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j) {
        kxx += rbf(x[i], x[j], two_s2);
        kyy += rbf(y[i], y[j], two_s2);
      }
      kxy += rbf(x[i], y[j], two_s2);
    }
  const double dd = static_cast<double>(d);
  return (kxx + kyy) / (dd * (dd - 1.0)) - 2.0 * kxy / (dd * dd);
}

namespace {
thread_local MmdBandwidthPin* g_active_pin = nullptr;
}  // namespace

MmdBandwidthPin::MmdBandwidthPin() : previous_(g_active_pin) { g_active_pin = this; }
MmdBandwidthPin::~MmdBandwidthPin() { g_active_pin = previous_; }

void MmdBandwidthPin::rewind() {
  cursor_ = 0;
  replaying_ = !values_.empty();
}

double pinned_bandwidth(std::span<const double> x, std::span<const double> y) {
  MmdBandwidthPin* pin = g_active_pin;
  if (pin == nullptr) return mmd_bandwidth(x, y);
  if (!pin->replaying_) {
    pin->values_.push_back(mmd_bandwidth(x, y));
    return pin->values_.back();
  }
  if (pin->cursor_ >= pin->values_.size()) throw Error("MmdBandwidthPin: replay ran past the recorded calls");
  return pin->values_[pin->cursor_++];
}

Tensor row_mmd_similarity(const Tensor& a, const Tensor& b) {
  require_matrix("row_mmd_similarity", a);
  require_same("row_mmd_similarity", a, b);
  const std::size_t L = a.rows(), d = a.cols();
  if (d < 2) shape_fail("row_mmd_similarity", a, "needs at least 2 features per row");
  const auto x = a.values(), z = b.values();
  Buffer y(L);
  std::vector<double> sigma(L), m2(L);
  for (std::size_t i = 0; i < L; ++i) {
    const std::span<const double> xr(x.data() + i * d, d), zr(z.data() + i * d, d);
    sigma[i] = pinned_bandwidth(xr, zr);
    m2[i] = mmd_squared(xr, zr, sigma[i]);
    y[i] = std::exp(-std::max(m2[i], 0.0));
  }
  return Tensor::make_result({L}, std::move(y), "row_mmd_similarity", {a, b}, [L, d, sigma, m2](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    const double dd = static_cast<double>(d);
    const double c_same = 2.0 / (dd * (dd - 1.0));
    const double c_cross = 2.0 / (dd * dd);
    for (std::size_t i = 0; i < L; ++i) {
      if (m2[i] <= 0.0) continue;  // clamped: flat
      const double dscore = -self.values[i] * self.grad[i];
      const double s2 = sigma[i] * sigma[i];
      const double two_s2 = 2.0 * s2;
      const double* xr = a.values.data() + i * d;
      const double* yr = b.values.data() + i * d;
      // d k(u,v)/du = -k(u,v) (u - v) / sigma^2
      if (a.requires_grad) {
        auto& g = a.grad_buffer();
        for (std::size_t p = 0; p < d; ++p) {
          double same = 0.0, cross = 0.0;
          for (std::size_t q = 0; q < d; ++q) {
            if (q != p) same += -rbf(xr[p], xr[q], two_s2) * (xr[p] - xr[q]) / s2;
            cross += -rbf(xr[p], yr[q], two_s2) * (xr[p] - yr[q]) / s2;
          }
          g[i * d + p] += dscore * (c_same * same - c_cross * cross);
        }
      }
      if (b.requires_grad) {
        auto& g = b.grad_buffer();
        for (std::size_t p = 0; p < d; ++p) {
          double same = 0.0, cross = 0.0;
          for (std::size_t q = 0; q < d; ++q) {
            if (q != p) same += -rbf(yr[p], yr[q], two_s2) * (yr[p] - yr[q]) / s2;
            cross += -rbf(yr[p], xr[q], two_s2) * (yr[p] - xr[q]) / s2;
          }
          g[i * d + p] += dscore * (c_same * same - c_cross * cross);
        }
      }
    }
  });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets) {
  if (logits.rank() != 1) shape_fail("bce_with_logits", logits, "is not a vector");
  if (targets.size() != logits.numel())
    shape_fail("bce_with_logits", logits, fmt::format("does not match {} targets", targets.size()));
  const auto x = logits.values();
  const double k = static_cast<double>(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    total += std::max(x[i], 0.0) - x[i] * targets[i] + std::log1p(std::exp(-std::abs(x[i])));
  std::vector<double> t(targets.begin(), targets.end());
  return Tensor::make_result({}, Buffer{total / k}, "bce_with_logits", {logits}, [t, k](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    auto& g = a.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = a.values[i];
      const double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      g[i] += self.grad[0] * (s - t[i]) / k;
    }
  });
}

}  // namespace mitp::ops
