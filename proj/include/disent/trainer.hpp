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
#include <filesystem>
#include <vector>

#include "disent/data.hpp"
#include "disent/model.hpp"
#include "disent/sampling.hpp"
#include "disent/variant.hpp"

namespace disent {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double valid_loss = 0;
  double learning_rate = 0;
};

struct TrainResult {
  Model model;  // parameters of the best-validation epoch
  int epochs = 0;
  int best_epoch = -1;  // -1 when no epoch ran
  double train_seconds = 0;
  std::vector<EpochRecord> curve;
};

// Network for a variant: `base` supplies the input and hidden widths; the head
// and output normalization follow the variant flags.
Model build_model(const VariantConfig& variant, const LabelSpace& space, NetConfig base);

// Family loss of one batch, as a differentiable scalar.
Var batch_loss(const Model& model, const VariantConfig& variant, const Dataset& dataset, const Batch& batch);

// Mean family loss on `valid`. Triplet families use one tag triplet (plus one
// track triplet with track regularization) per item, drawn from `seed`, so the
// value is comparable across epochs.
double validation_loss(const Model& model, const VariantConfig& variant, const TripletSampler& valid_sampler,
                       std::uint64_t seed);

// Adam under the reduce-on-plateau schedule with early stopping, up to
// variant.max_epochs epochs. Returns the best-validation parameters. Throws
// DivergedError (with the epoch) when a loss turns NaN.
TrainResult train(const VariantConfig& variant, const LabelSpace& space, const Dataset& train_set,
                  const Dataset& valid_set, NetConfig base = {});

// CSV with header "epoch,train_loss,valid_loss,lr".
void write_loss_curve(const std::filesystem::path& path, const std::vector<EpochRecord>& curve);

}  // namespace disent
