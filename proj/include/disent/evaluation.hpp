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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "disent/data.hpp"
#include "disent/model.hpp"
#include "disent/sampling.hpp"
#include "disent/variant.hpp"

namespace disent {

// ---- similarity-based retrieval ----

// Fraction of the query's tags present in the union of the first k retrieved
// label sets. nullopt for a query without tags.
std::optional<double> recall_at_k(std::span<const std::uint8_t> query,
                                  std::span<const std::span<const std::uint8_t>> ranked, std::size_t k);

// Multi-label recall@K averaged over every item of `dataset` used as a query
// against all other items, ranked by cosine similarity of the rows of
// `embeddings` (ties broken by item index). Queries without tags are skipped.
std::map<std::size_t, double> retrieval_recall(const Tensor& embeddings, const Dataset& dataset,
                                               std::span<const std::size_t> ks);

// ---- auto-tagging ----

// Per-tag mean of the given embeddings over items carrying the tag, [T, d].
// Tags without positives get a zero row (logged).
Tensor build_prototypes(const Tensor& embeddings, const Dataset& dataset);
// Prototypes of the model's exposed embeddings over `train`.
Tensor build_prototypes(const Model& model, const Dataset& train);

struct AucResult {
  double macro = 0;                         // mean over evaluable tags
  std::vector<std::optional<double>> per_tag;  // nullopt for skipped tags
};

// ROC AUC per tag through the Mann-Whitney rank statistic with midranks
// (ties count one half); tags lacking a positive or a negative are skipped.
AucResult auc_tags(const Tensor& scores, const Tensor& labels);

// Single-column AUC helper: scores and 0/1 labels of equal length.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> labels);

// ---- triplet prediction ----

enum class Space { kFull, kSub };

// Fraction of triplets with cos(anchor, positive) > cos(anchor, negative).
// kSub restricts each tag triplet to its notion's block of coordinates (the
// block layout of `space`); track triplets always use the full space.
double triplet_accuracy(const Tensor& embeddings, std::span<const Triplet> triplets, const LabelSpace& space,
                        Space mode);

// Model-level form; kSub on a model whose variant is not disentangled throws ConfigError.
double triplet_accuracy(const Model& model, const VariantConfig& variant, const Dataset& dataset,
                        std::span<const Triplet> triplets, Space mode);

// ---- training time ----

// Each timing divided by the smallest. Throws ContractViolation on an empty
// map or non-positive timing.
std::map<std::string, double> training_time_ratio(const std::map<std::string, double>& seconds);

// ---- whole-model report ----

struct EvalOptions {
  std::vector<std::size_t> ks = {1, 2, 4, 8};
  std::size_t triplets_per_notion = 2000;
  std::uint64_t seed = 1;
};

struct EvalReport {
  VariantConfig variant;
  std::map<std::size_t, double> recall_at;
  double auc = 0;
  // Keys "<notion>/full", "<notion>/sub", "overall/full", "overall/sub", "track/full".
  std::map<std::string, double> triplet_accuracy;
  int epochs = 0;
  // Wall-clock fields; excluded from determinism comparisons.
  double train_seconds = 0;
  double training_time_ratio = 0;
  std::string error;  // non-empty when the variant failed
};

// Evaluation triplets drawn from `test`: triplets_per_notion tag triplets per
// notion (uniform over that notion's sampleable tags) followed by the same
// number of track triplets when tracks allow it.
std::vector<Triplet> evaluation_triplets(const TripletSampler& sampler, const LabelSpace& space,
                                         std::size_t per_notion, std::uint64_t seed);

// Per-tag scores used for AUC: class scores for proxy/classification models,
// cosine to training prototypes for triplet models (in the tag's notion block
// when disentangled).
Tensor tagging_scores(const Model& model, const VariantConfig& variant, const Dataset& train, const Dataset& test);

EvalReport evaluate_model(const Model& model, const VariantConfig& variant, const Dataset& train,
                          const Dataset& test, const EvalOptions& options);

}  // namespace disent
