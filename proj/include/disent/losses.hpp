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

#include <span>
#include <string>
#include <vector>

#include "disent/autograd.hpp"

namespace disent {

inline constexpr double kDefaultMargin = 0.1;
inline constexpr double kDefaultTrackWeight = 1.0;
inline constexpr double kProbabilityFloor = 1e-12;

// ---- single-instance losses on plain vectors ----

// max(0, cos(a, n) - cos(a, p) + margin). Throws DegenerateInput on a zero vector.
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin = kDefaultMargin);

// Triplet loss on (e ∘ mask) vectors. Throws DegenerateInput when a masked
// vector is all zero.
double masked_triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                           std::span<const double> negative, std::span<const double> mask,
                           double margin = kDefaultMargin);

// Sum over tags of binary cross entropy; scores are clamped to
// [1e-12, 1 - 1e-12] before the log.
double proxy_bce_loss(std::span<const double> scores, std::span<const double> labels);
double classification_bce_loss(std::span<const double> scores, std::span<const double> labels);

// ---- differentiable batch forms ----

// Per-row triplet losses for [B, d] embeddings; `masks` is an optional [B, d]
// constant applied to all three inputs. Zero rows use the guarded norm.
Var triplet_loss_rows(const Var& anchor, const Var& positive, const Var& negative, double margin,
                      const Var* masks = nullptr);

// Mean over rows of the per-row tag sum of BCE, from per-tag probabilities
// ([B, T]) and constant multi-hot labels ([B, T]). The logs are floored at
// 1e-12, which matches clamping the probabilities.
Var bce_loss(const Var& scores, const Var& labels);

// mean masked tag-triplet loss + weight * mean full-space track-triplet loss.
// Each argument triple is [B, d]; tag_masks is [B, d].
Var track_regularized_batch_loss(const Var& tag_anchor, const Var& tag_positive, const Var& tag_negative,
                                 const Var& tag_masks, const Var& track_anchor, const Var& track_positive,
                                 const Var& track_negative, double margin = kDefaultMargin,
                                 double weight = kDefaultTrackWeight);

// Scalar form over precomputed per-triplet losses. Throws DatasetError when
// either collection is empty.
double track_regularized_batch_loss(std::span<const double> tag_losses, std::span<const double> track_losses,
                                    double weight = kDefaultTrackWeight);

}  // namespace disent
