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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "disent/autograd.hpp"

namespace disent {

struct AdamOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment accumulators mirror the parameter shapes.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions options = {});

  // Applies one update; `grads[i]` belongs to `params()[i]`.
  void step(std::span<const Tensor> grads);

  double learning_rate() const { return options_.learning_rate; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  std::int64_t step_count() const { return step_; }
  const std::vector<Var>& params() const { return params_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  std::vector<Var> params_;
  AdamOptions options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t step_ = 0;
};

struct PlateauOptions {
  double initial_lr = 0.005;
  double factor = 5.0;
  int patience = 10;
  int max_reductions = 5;
};

struct PlateauDecision {
  double learning_rate;
  bool stop;
  bool improved;
};

// Reduce-on-plateau with early stopping, checked once per epoch.
//
// A loss strictly below the best seen so far is an improvement. After
// `patience` consecutive non-improving epochs the rate is divided by `factor`;
// once `max_reductions` reductions are spent the next plateau stops training
// and leaves the rate unchanged.
class PlateauSchedule {
 public:
  explicit PlateauSchedule(PlateauOptions options = {});

  // Throws DivergedError on a non-finite loss (epoch -1; the trainer rethrows with context).
  PlateauDecision update(double validation_loss);

  double learning_rate() const { return lr_; }
  double best_loss() const { return best_; }
  int epochs_since_improvement() const { return stale_epochs_; }
  int reductions() const { return reductions_; }
  bool stopped() const { return stopped_; }

 private:
  PlateauOptions options_;
  double lr_;
  double best_;
  int stale_epochs_ = 0;
  int reductions_ = 0;
  bool stopped_ = false;
};

}  // namespace disent
