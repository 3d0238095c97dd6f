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

#include "disent/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "disent/errors.hpp"
#include "disent/log.hpp"
#include "disent/losses.hpp"
#include "disent/optim.hpp"
#include "disent/random.hpp"

namespace disent {

namespace {

// Seed streams derived from the variant seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kValidStream = 1;
constexpr std::uint64_t kEpochStreamBase = 1000;

struct TripletInputs {
  Tensor anchor, positive, negative;
};

TripletInputs gather(const Dataset& dataset, const std::vector<Triplet>& triplets) {
  std::vector<std::size_t> a, p, n;
  for (const auto& t : triplets) {
    a.push_back(t.anchor);
    p.push_back(t.positive);
    n.push_back(t.negative);
  }
  return {dataset.features(a), dataset.features(p), dataset.features(n)};
}

Tensor notion_masks(const Model& model, const std::vector<Triplet>& triplets) {
  Tensor masks({triplets.size(), model.embedding_dim()});
  for (std::size_t r = 0; r < triplets.size(); ++r) {
    const auto& m = model.mask(triplets[r].notion).value();
    std::copy(m.values().begin(), m.values().end(), masks.row(r).begin());
  }
  return masks;
}

}  // namespace

Model build_model(const VariantConfig& variant, const LabelSpace& space, NetConfig base) {
  validate(variant);
  base.head = head_for(variant);
  base.normalize_output = variant.normalization;
  return Model(space, std::move(base));
}

Var batch_loss(const Model& model, const VariantConfig& variant, const Dataset& dataset, const Batch& batch) {
  if (auto score_variant = score_variant_for(variant)) {
    if (batch.samples.empty()) throw ContractViolation("sample batch is empty");
    Var x = constant(dataset.features(batch.samples));
    Var y = constant(dataset.labels(batch.samples));
    return bce_loss(model.scores(x, *score_variant), y);
  }

  if (batch.tag_triplets.empty()) throw ContractViolation("triplet batch is empty");
  const auto tag = gather(dataset, batch.tag_triplets);
  Var ea = model.forward(constant(tag.anchor));
  Var ep = model.forward(constant(tag.positive));
  Var en = model.forward(constant(tag.negative));
  if (variant.track_reg) {
    const auto track = gather(dataset, batch.track_triplets);
    return track_regularized_batch_loss(ea, ep, en, constant(notion_masks(model, batch.tag_triplets)),
                                        model.forward(constant(track.anchor)), model.forward(constant(track.positive)),
                                        model.forward(constant(track.negative)), variant.margin,
                                        variant.track_weight);
  }
  if (variant.disentanglement) {
    Var masks = constant(notion_masks(model, batch.tag_triplets));
    return mean(triplet_loss_rows(ea, ep, en, variant.margin, &masks));
  }
  return mean(triplet_loss_rows(ea, ep, en, variant.margin));
}

double validation_loss(const Model& model, const VariantConfig& variant, const TripletSampler& valid_sampler,
                       std::uint64_t seed) {
  const Dataset& valid = valid_sampler.dataset();
  if (valid.empty()) throw DatasetError("validation split is empty");
  const BatchMode mode = score_variant_for(variant) ? BatchMode::kSample : BatchMode::kTriplet;
  // One pass over the whole split; sample mode order does not affect the mean.
  BatchIterator batches(valid_sampler, valid.size(), mode, seed, variant.track_reg);
  auto batch = batches.next();
  return batch_loss(model, variant, valid, *batch).value().item();
}

TrainResult train(const VariantConfig& variant, const LabelSpace& space, const Dataset& train_set,
                  const Dataset& valid_set, NetConfig base) {
  Model model = build_model(variant, space, std::move(base));
  model.init_params(derive_seed(variant.seed, kInitStream));
  if (train_set.empty()) throw DatasetError("training split is empty");
  if (variant.max_epochs == 0) return {std::move(model), 0, -1, 0.0, {}};
  if (valid_set.empty()) throw DatasetError("validation split is empty");

  const TripletSampler train_sampler(train_set, space);
  const TripletSampler valid_sampler(valid_set, space);
  const BatchMode mode = score_variant_for(variant) ? BatchMode::kSample : BatchMode::kTriplet;
  const auto params = model.parameters();
  Adam adam(params, AdamOptions{variant.learning_rate});
  PlateauSchedule schedule(PlateauOptions{variant.learning_rate});

  TrainResult result{model.clone(), 0, -1, 0.0, {}};
  std::vector<Tensor> best = model.snapshot();
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < variant.max_epochs; ++epoch) {
    BatchIterator batches(train_sampler, variant.batch_size, mode,
                          derive_seed(variant.seed, kEpochStreamBase + static_cast<std::uint64_t>(epoch)),
                          variant.track_reg);
    double loss_sum = 0;
    std::size_t batch_count = 0;
    while (auto batch = batches.next()) {
      Var loss = batch_loss(model, variant, train_set, *batch);
      const double value = loss.value().item();
      if (std::isnan(value)) throw DivergedError("training loss is NaN at epoch " + std::to_string(epoch), epoch);
      adam.step(grad(loss, params));
      loss_sum += value;
      ++batch_count;
    }

    const double valid = validation_loss(model, variant, valid_sampler, derive_seed(variant.seed, kValidStream));
    PlateauDecision decision;
    try {
      decision = schedule.update(valid);
    } catch (const DivergedError&) {
      throw DivergedError("validation loss is not finite at epoch " + std::to_string(epoch), epoch);
    }
    result.curve.push_back({epoch, loss_sum / static_cast<double>(batch_count), valid, adam.learning_rate()});
    result.epochs = epoch + 1;
    if (decision.improved) {
      best = model.snapshot();
      result.best_epoch = epoch;
    }
    adam.set_learning_rate(decision.learning_rate);
    if (decision.stop) break;
  }
  result.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  model.restore(best);
  result.model = std::move(model);
  log_info(variant.name + ": " + std::to_string(result.epochs) + " epochs, best " +
           std::to_string(result.best_epoch) + ", " + std::to_string(result.train_seconds) + " s");
  return result;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<EpochRecord>& curve) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write loss curve " + path.string());
  out << "epoch,train_loss,valid_loss,lr\n";
  char buf[128];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", r.epoch, r.train_loss, r.valid_loss, r.learning_rate);
    out << buf;
  }
}

}  // namespace disent
