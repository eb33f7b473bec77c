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

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mitp/numerics/adam.hpp"
#include "mitp/numerics/error.hpp"
#include "mitp/numerics/grad_check.hpp"
#include "mitp/numerics/memory.hpp"
#include "mitp/numerics/ops.hpp"
#include "mitp/numerics/parameter.hpp"
#include "mitp/numerics/rng.hpp"
#include "oracles.hpp"

using namespace mitp;

namespace {

Tensor random_matrix(std::size_t m, std::size_t n, Rng& rng, bool grad = false) {
  std::vector<double> v(m * n);
  for (auto& x : v) x = rng.normal();
  return Tensor::from({m, n}, v, grad);
}

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST(Tensor, ShapeAndValuesAgree) {
  const Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_DOUBLE_EQ(t.at(1, 2), 6.0);
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
}

TEST(Tensor, NonTrackingTensorNeverAccumulates) {
  Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  Tensor c = Tensor::from({3}, {4, 5, 6});
  ops::sum(ops::mul(x, c)).backward();
  EXPECT_TRUE(x.has_grad());
  EXPECT_FALSE(c.has_grad());
  EXPECT_EQ(x.grad().size(), x.numel());
}

TEST(Ops, SoftmaxOfConstantIsUniform) {
  const Tensor y = ops::softmax(Tensor::from({4}, {0, 0, 0, 0}), 0);
  for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Ops, ReluAtKink) {
  const Tensor y = ops::relu(Tensor::from({3}, {-1.5, 0.0, 2.0}));
  EXPECT_EQ(vec(y), (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Ops, MatmulMatchesTripleLoop) {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
  const auto want = oracle::matmul(vec(a), vec(b), 2, 3, 2);
  EXPECT_EQ(vec(ops::matmul(a, b)), want);
  EXPECT_EQ(want, (std::vector<double>{58, 64, 139, 154}));
}

TEST(Ops, MatmulRandomShapes) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(6), k = 1 + rng.below(6), n = 1 + rng.below(6);
    const Tensor a = random_matrix(m, k, rng), b = random_matrix(k, n, rng);
    const auto got = vec(ops::matmul(a, b));
    const auto want = oracle::matmul(vec(a), vec(b), m, k, n);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Ops, ShapeErrorsNameOpAndShapes) {
  const Tensor a = Tensor::zeros({2, 3}), b = Tensor::zeros({2, 3});
  try {
    ops::matmul(a, b);
    FAIL();
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("matmul"), std::string::npos);
    EXPECT_NE(what.find("[2x3]"), std::string::npos) << what;
  }
  EXPECT_THROW(ops::add(a, Tensor::zeros({3, 2})), ShapeError);
  EXPECT_THROW(ops::scale_rows(a, Tensor::zeros({3})), ShapeError);
  EXPECT_THROW(ops::softmax(Tensor::zeros({0}), 0), ShapeError);
}

TEST(Ops, SoftmaxRowsSumToOne) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.below(5), n = 1 + rng.below(7);
    const Tensor x = random_matrix(m, n, rng);
    for (std::size_t axis : {0u, 1u}) {
      const Tensor y = ops::softmax(ops::scale(x, 5.0), axis);
      const std::size_t outer = axis == 1 ? m : n, inner = axis == 1 ? n : m;
      for (std::size_t o = 0; o < outer; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < inner; ++i) {
          const double v = axis == 1 ? y.at(o, i) : y.at(i, o);
          EXPECT_GT(v, 0.0);
          EXPECT_LT(v, inner == 1 ? 1.0 + 1e-15 : 1.0);
          s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
    }
  }
}

TEST(Ops, LayerNormMatchesOracle) {
  Rng rng(3);
  const Tensor x = random_matrix(4, 6, rng);
  const Tensor g = random_matrix(1, 6, rng), b = random_matrix(1, 6, rng);
  const Tensor gv = ops::reshape(g, {6}), bv = ops::reshape(b, {6});
  const auto got = vec(ops::layer_norm(x, gv, bv));
  const auto want = oracle::layer_norm(vec(x), vec(g), vec(b), 4, 6, 1e-5);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Ops, ConcatAndSliceRoundTrip) {
  Rng rng(2);
  const Tensor a = random_matrix(2, 3, rng), b = random_matrix(4, 3, rng);
  const Tensor c = ops::concat_rows(a, b);
  EXPECT_EQ(c.shape(), (Shape{6, 3}));
  EXPECT_EQ(vec(ops::slice_rows(c, 0, 2)), vec(a));
  EXPECT_EQ(vec(ops::slice_rows(c, 2, 6)), vec(b));
}

TEST(Ops, ScaleRowsBroadcastsOverFeatures) {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor s = Tensor::from({2}, {10, -1});
  EXPECT_EQ(vec(ops::scale_rows(a, s)), (std::vector<double>{10, 20, -3, -4}));
}

TEST(Ops, MeanAndVarianceReductions) {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 6, 8});
  EXPECT_EQ(vec(ops::mean_axis(a, 1)), (std::vector<double>{2, 6}));
  EXPECT_EQ(vec(ops::mean_axis(a, 0)), (std::vector<double>{2.5, 4, 5.5}));
  EXPECT_EQ(vec(ops::variance_axis(a, 1, 1)), (std::vector<double>{1, 4}));
  EXPECT_DOUBLE_EQ(ops::mean(a).item(), 4.0);
}

TEST(Backward, SumGivesOnes) {
  Tensor x = Tensor::from({3}, {0.3, -2, 7}, true);
  ops::sum(x).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, ReluSubgradient) {
  Tensor x = Tensor::from({2}, {-1, 2}, true);
  ops::sum(ops::relu(x)).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{0, 1}));
}

TEST(Backward, NonScalarAndSecondCallAreErrors) {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tensor y = ops::scale(x, 2.0);
  EXPECT_THROW(y.backward(), Error);
  Tensor loss = ops::sum(y);
  loss.backward();
  EXPECT_THROW(loss.backward(), Error);
}

TEST(Backward, GradientsAccumulateAdditively) {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  ops::sum(x).backward();
  ops::sum(ops::scale(x, 3.0)).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{4, 4}));
}

TEST(Backward, NoGradScopeRecordsNothing) {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  NoGradScope scope;
  const Tensor y = ops::sum(ops::mul(x, x));
  EXPECT_FALSE(y.requires_grad());
}

TEST(GradCheck, QuadraticNorm) {
  std::vector<Tensor> leaves{Tensor::from({2}, {1, 2}, true)};
  const auto report = grad_check([&] { return ops::sum(ops::mul(leaves[0], leaves[0])); }, leaves);
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_abs_error, 1e-6);
  EXPECT_NEAR(report.worst_analytic, report.worst_numeric, 1e-6);
}

TEST(GradCheck, SoftmaxLogAtUniformPoint) {
  std::vector<Tensor> leaves{Tensor::from({4}, {0, 0, 0, 0}, true)};
  const auto report =
      grad_check([&] { return ops::pick(ops::log(ops::softmax(leaves[0], 0)), 1); }, leaves);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(GradCheck, NonFiniteValueIsHardError) {
  std::vector<Tensor> leaves{Tensor::from({2}, {1000, 2}, true)};
  EXPECT_THROW(grad_check([&] { return ops::sum(ops::exp(ops::exp(leaves[0]))); }, leaves), NumericError);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A custom op whose backward is deliberately off by a factor of two.
  std::vector<Tensor> leaves{Tensor::from({3}, {0.5, -1.0, 2.0}, true)};
  auto bad_square = [](const Tensor& a) {
    Buffer y(a.numel());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * a[i];
    return Tensor::make_result(a.shape(), std::move(y), "bad_square", {a}, [](detail::Node& self) {
      auto& in = *self.inputs[0];
      auto& g = in.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * 4.0 * in.values[i];
    });
  };
  const auto report = grad_check([&] { return ops::sum(bad_square(leaves[0])); }, leaves);
  EXPECT_FALSE(report.passed);
  EXPECT_NEAR(report.max_rel_error, 0.5, 1e-6);
}

TEST(Adam, FirstStepMatchesHandRecurrence) {
  Parameter p = Parameter::make("w", Tensor::from({1}, {0.0}, true), false);
  p.tensor.zero_grad();
  Parameter* list[] = {&p};
  // g = 1: m = 0.1, v = 0.001, m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
  p.tensor.node()->grad_buffer()[0] = 1.0;
  AdamState state;
  adam_step(list, state);
  EXPECT_NEAR(p.tensor[0], -2e-4 / (1.0 + 1e-8), 1e-18);
  EXPECT_EQ(state.step_count, 1u);
  EXPECT_FALSE(p.tensor.has_grad());
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  Parameter p = Parameter::make("w", Tensor::from({3}, {1, 2, 3}, true), false);
  Parameter* list[] = {&p};
  AdamState state;
  for (int i = 0; i < 3; ++i) {
    p.tensor.zero_grad();
    adam_step(list, state);
  }
  EXPECT_EQ(vec(p.tensor), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(state.step_count, 3u);
  for (double m : state.moments.at("w").first) EXPECT_EQ(m, 0.0);
  for (double v : state.moments.at("w").second) EXPECT_EQ(v, 0.0);
}

TEST(Adam, FrozenParameterUntouched) {
  Parameter p = Parameter::make("frozen", Tensor::from({2}, {1, 2}), true);
  p.tensor.node()->grad_buffer()[0] = 5.0;
  Parameter* list[] = {&p};
  AdamState state;
  adam_step(list, state);
  EXPECT_EQ(vec(p.tensor), (std::vector<double>{1, 2}));
}

TEST(Adam, MissingGradientNamesParameter) {
  Parameter p = Parameter::make("lonely", Tensor::from({1}, {1.0}, true), false);
  Parameter* list[] = {&p};
  AdamState state;
  try {
    adam_step(list, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(Adam, MomentShapesAndStepCount) {
  Rng rng(1);
  Parameter a = Parameter::gaussian("a", {2, 3}, rng, 1.0, false);
  Parameter b = Parameter::gaussian("b", {4}, rng, 1.0, false);
  Parameter* list[] = {&a, &b};
  AdamState state;
  for (int i = 1; i <= 4; ++i) {
    ops::sum(ops::add(ops::sum(ops::mul(a.tensor, a.tensor)), ops::sum(b.tensor))).backward();
    adam_step(list, state);
    EXPECT_EQ(state.step_count, static_cast<std::uint64_t>(i));
  }
  EXPECT_EQ(state.moments.at("a").first.size(), 6u);
  EXPECT_EQ(state.moments.at("b").second.size(), 4u);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
}

TEST(Rng, DocumentedCounterFormula) {
  Rng r(7);
  for (std::uint64_t n = 0; n < 5; ++n) {
    EXPECT_EQ(r.next_u64(), oracle::splitmix64(7 + (n + 1) * 0x9E3779B97F4A7C15ull));
  }
}

TEST(Rng, GaussianMoments) {
  Rng r(9);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, ForkDoesNotAdvanceParent) {
  Rng a(3);
  const Rng child = a.fork(1);
  EXPECT_EQ(a.counter(), 0u);
  EXPECT_NE(child.seed(), a.seed());
  EXPECT_EQ(a.fork(1).seed(), child.seed());
}

TEST(Memory, SingleTensorAccounting) {
  memory::Region region;
  {
    const Tensor t = Tensor::zeros({10, 10});
    EXPECT_GE(region.peak_bytes(), 800u);
  }
  EXPECT_GE(region.peak_bytes(), 800u);
  EXPECT_LT(region.peak_bytes(), 800u + 256u);
}

TEST(Memory, HighWaterNotSum) {
  memory::Region region;
  { const Tensor a = Tensor::zeros({100}); }
  { const Tensor b = Tensor::zeros({100}); }
  EXPECT_GE(region.peak_bytes(), 800u);
  EXPECT_LT(region.peak_bytes(), 1600u);
}

TEST(Memory, EmptyRegionReportsZero) {
  const Tensor keep = Tensor::zeros({50});
  memory::Region region;
  EXPECT_EQ(region.peak_bytes(), 0u);
}
