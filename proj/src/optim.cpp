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

#include "disent/optim.hpp"

#include <cmath>
#include <limits>

#include "disent/errors.hpp"

namespace disent {

Adam::Adam(std::vector<Var> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void Adam::step(std::span<const Tensor> grads) {
  if (grads.size() != params_.size()) {
    throw ContractViolation("adam: " + std::to_string(grads.size()) + " gradients for " +
                            std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!grads[i].same_shape(params_[i].value())) {
      throw ContractViolation("adam: gradient shape " + shape_string(grads[i].shape()) + " does not match parameter " +
                              shape_string(params_[i].shape()));
    }
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& value = params_[i].mutable_value();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    const Tensor& g = grads[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      value[j] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

PlateauSchedule::PlateauSchedule(PlateauOptions options)
    : options_(options), lr_(options.initial_lr), best_(std::numeric_limits<double>::infinity()) {
  if (options_.factor <= 1.0 || options_.patience < 1 || options_.max_reductions < 0) {
    throw ConfigError("plateau schedule needs factor > 1, patience >= 1, max_reductions >= 0");
  }
}

PlateauDecision PlateauSchedule::update(double validation_loss) {
  if (!std::isfinite(validation_loss)) throw DivergedError("validation loss is not finite", -1);
  if (stopped_) return {lr_, true, false};
  if (validation_loss < best_) {
    best_ = validation_loss;
    stale_epochs_ = 0;
    return {lr_, false, true};
  }
  if (++stale_epochs_ < options_.patience) return {lr_, false, false};
  stale_epochs_ = 0;
  if (reductions_ < options_.max_reductions) {
    ++reductions_;
    lr_ = options_.initial_lr / std::pow(options_.factor, reductions_);
    return {lr_, false, false};
  }
  stopped_ = true;
  return {lr_, true, false};
}

}  // namespace disent
