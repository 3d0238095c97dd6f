/*
 * Copyright 2026 The Disent Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "disent/autograd.hpp"
#include "disent/errors.hpp"
#include "disent/optim.hpp"
#include "support/gradcheck.hpp"

namespace disent {
namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, scale);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

TEST(Tensor, ShapeMustMatchValueCount) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ContractViolation);
  EXPECT_THROW(Tensor({2, 0}), ContractViolation);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
}

TEST(Grad, QuadraticSum) {
  Var p = parameter(Tensor::vector({1, 2}));
  auto g = grad(sum(mul(p, p)), std::vector<Var>{p});
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0][0], 2.0);
  EXPECT_DOUBLE_EQ(g[0][1], 4.0);
}

TEST(Grad, InactiveReluHasZeroGradient) {
  Var x = parameter(Tensor::scalar(-3.0));
  auto g = grad(relu(x), std::vector<Var>{x});
  EXPECT_EQ(g[0].item(), 0.0);
}

TEST(Grad, NonScalarLossIsRejected) {
  Var p = parameter(Tensor::vector({1, 2}));
  EXPECT_THROW(grad(mul(p, p), std::vector<Var>{p}), ContractViolation);
}

TEST(Grad, ParameterOutsideGraphGetsZero) {
  Var p = parameter(Tensor::vector({1, 2}));
  Var unused = parameter(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  auto g = grad(sum(p), std::vector<Var>{p, unused});
  EXPECT_EQ(g[1], Tensor({2, 2}));
}

TEST(Grad, ReusedNodeAccumulates) {
  Var p = parameter(Tensor::scalar(3.0));
  Var q = mul(p, p);
  auto g = grad(add(q, q), std::vector<Var>{p});
  EXPECT_DOUBLE_EQ(g[0].item(), 12.0);
}

TEST(Grad, EveryPrimitiveMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Var a = parameter(random_tensor({3, 4}, rng));
    Var b = parameter(random_tensor({4, 5}, rng));
    Var bias = parameter(random_tensor({5}, rng));
    Var w = parameter(random_tensor({3, 5}, rng));
    auto build = [&] {
      Var h = relu(add(matmul(a, b), bias));
      Var n = l2_normalize(add(h, w));
      Var s = sigmoid(mul(n, w));
      Var l = log(add_scalar(s, 0.5));
      Var hinge = max_with_zero(add_scalar(dot(n, w), 0.3));
      return add(mean(l), sum(hinge));
    };
    std::vector<Var> params{a, b, bias, w};
    auto check = testing::check_gradients(build, params);
    EXPECT_LT(check.max_relative_error, 1e-4) << "trial " << trial;
  }
}

TEST(Grad, NormalizationGradientIsOrthogonalToInput) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Var x = parameter(random_tensor({6}, rng));
    const Var w = constant(random_tensor({6}, rng));
    auto loss = [&] { return dot(l2_normalize(x), w); };
    const auto g = grad(loss(), std::vector<Var>{x})[0];
    double along = 0;
    for (std::size_t i = 0; i < 6; ++i) along += g[i] * x.value()[i];
    EXPECT_LT(std::abs(along), 1e-12);

    // Directional finite difference along x itself.
    const double h = 1e-6;
    const Tensor saved = x.value();
    for (std::size_t i = 0; i < 6; ++i) x.mutable_value()[i] = saved[i] * (1 + h);
    const double up = loss().value().item();
    for (std::size_t i = 0; i < 6; ++i) x.mutable_value()[i] = saved[i] * (1 - h);
    const double down = loss().value().item();
    x.mutable_value() = saved;
    EXPECT_LT(std::abs(up - down) / (2 * h), 1e-6);
  }
}

TEST(Grad, GuardedNormalizationOfZeroVector) {
  Var x = parameter(Tensor::vector({0, 0, 0}));
  Var y = l2_normalize(x);
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
  auto g = grad(sum(y), std::vector<Var>{x});
  for (double v : g[0].values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Grad, BroadcastRowVector) {
  Var m = parameter(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var v = parameter(Tensor::vector({1, 10, 100}));
  Var out = mul(m, v);
  EXPECT_EQ(out.value(), Tensor::matrix(2, 3, {1, 20, 300, 4, 50, 600}));
  auto g = grad(sum(out), std::vector<Var>{m, v});
  EXPECT_EQ(g[1], Tensor::vector({5, 7, 9}));
  EXPECT_THROW(add(v, m), ContractViolation);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Var p = parameter(Tensor::vector({0.5, -1.5}));
  Adam adam({p});
  for (int i = 0; i < 10; ++i) adam.step(std::vector<Tensor>{Tensor({2})});
  EXPECT_EQ(p.value(), Tensor::vector({0.5, -1.5}));
  EXPECT_EQ(adam.step_count(), 10);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Var p = parameter(Tensor::scalar(0.0));
  Adam adam({p}, AdamOptions{0.005});
  adam.step(std::vector<Tensor>{Tensor::scalar(1.0)});
  EXPECT_NEAR(p.value().item(), -0.005, 1e-9);
}

TEST(Adam, ConvergesOnScalarQuadratic) {
  Var p = parameter(Tensor::scalar(0.0));
  Adam adam({p}, AdamOptions{0.1});
  for (int i = 0; i < 100; ++i) {
    Var d = add_scalar(p, -3.0);
    adam.step(grad(mul(d, d), std::vector<Var>{p}));
  }
  EXPECT_LT(std::abs(p.value().item() - 3.0), 0.05);
}

TEST(Adam, ShapeMismatchIsRejected) {
  Var p = parameter(Tensor::vector({1, 2}));
  Adam adam({p});
  EXPECT_THROW(adam.step(std::vector<Tensor>{Tensor({3})}), ContractViolation);
  EXPECT_THROW(adam.step(std::vector<Tensor>{}), ContractViolation);
}

TEST(Plateau, TenStaleEpochsReduceByFive) {
  PlateauSchedule schedule;
  EXPECT_TRUE(schedule.update(1.0).improved);
  PlateauDecision d{};
  for (int i = 0; i < 10; ++i) d = schedule.update(1.0);  // equal is not an improvement
  EXPECT_DOUBLE_EQ(d.learning_rate, 0.001);
  EXPECT_FALSE(d.stop);
}

TEST(Plateau, ImprovementKeepsRate) {
  PlateauSchedule schedule;
  for (int i = 0; i < 50; ++i) {
    auto d = schedule.update(10.0 - 0.1 * i);
    EXPECT_DOUBLE_EQ(d.learning_rate, 0.005);
    EXPECT_FALSE(d.stop);
  }
}

TEST(Plateau, SixthPlateauStops) {
  PlateauSchedule schedule;
  schedule.update(1.0);
  PlateauDecision d{};
  for (int plateau = 1; plateau <= 6; ++plateau) {
    for (int i = 0; i < 10; ++i) {
      d = schedule.update(2.0);
      if (i < 9) EXPECT_FALSE(d.stop);
    }
    if (plateau <= 5) {
      EXPECT_FALSE(d.stop) << plateau;
      EXPECT_DOUBLE_EQ(d.learning_rate, 0.005 / std::pow(5.0, plateau));
    }
  }
  EXPECT_TRUE(d.stop);
  EXPECT_DOUBLE_EQ(d.learning_rate, 0.005 / std::pow(5.0, 5));
  EXPECT_EQ(schedule.reductions(), 5);
}

TEST(Plateau, NanLossIsDivergence) {
  PlateauSchedule schedule;
  EXPECT_THROW(schedule.update(std::nan("")), DivergedError);
}

TEST(Plateau, RateIsFunctionOfEventSequence) {
  // Random improve / stale sequences: the rate only depends on how many full
  // stale runs of length patience occurred, capped at max reductions.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    PlateauSchedule a, b;
    double level = 100;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0, reductions = 0;
    for (int epoch = 0; epoch < 200 && !a.stopped(); ++epoch) {
      const bool improve = std::bernoulli_distribution(0.15)(rng);
      if (improve) level -= 1;
      const double loss = improve ? level : level + 1;
      auto da = a.update(loss);
      auto db = b.update(loss);
      EXPECT_EQ(da.learning_rate, db.learning_rate);
      if (loss < best) {
        best = loss;
        stale = 0;
      } else if (++stale == 10) {
        stale = 0;
        if (reductions < 5) ++reductions;
      }
      EXPECT_DOUBLE_EQ(da.learning_rate, 0.005 / std::pow(5.0, reductions));
      EXPECT_LE(a.reductions(), 5);
    }
  }
}

}  // namespace
}  // namespace disent
