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

#include "disent/losses.hpp"

#include <algorithm>
#include <cmath>

#include "disent/errors.hpp"

namespace disent {

namespace {

Var as_row(std::span<const double> v) { return constant(Tensor::matrix(1, v.size(), {v.begin(), v.end()})); }

void require_nonzero(std::span<const double> v, const char* what) {
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    throw DegenerateInput(std::string(what) + " vector is all zero; cosine similarity is undefined");
  }
}

void require_same_length(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  if (a.size() != b.size() || a.size() != c.size()) throw ContractViolation("triplet vectors differ in length");
}

std::vector<double> hadamard(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double bce_sum(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ContractViolation("scores and labels differ in length");
  double total = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    total -= labels[i] * std::log(s) + (1.0 - labels[i]) * std::log(1.0 - s);
  }
  return total;
}

}  // namespace

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
  require_same_length(anchor, positive, negative);
  require_nonzero(anchor, "anchor");
  require_nonzero(positive, "positive");
  require_nonzero(negative, "negative");
  if (margin < 0) throw ContractViolation("triplet margin must be non-negative");
  return triplet_loss_rows(as_row(anchor), as_row(positive), as_row(negative), margin).value()[0];
}

double masked_triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                           std::span<const double> negative, std::span<const double> mask, double margin) {
  require_same_length(anchor, positive, negative);
  if (mask.size() != anchor.size()) throw ContractViolation("mask length differs from embedding length");
  const auto a = hadamard(anchor, mask);
  const auto p = hadamard(positive, mask);
  const auto n = hadamard(negative, mask);
  require_nonzero(a, "masked anchor");
  require_nonzero(p, "masked positive");
  require_nonzero(n, "masked negative");
  return triplet_loss(a, p, n, margin);
}

double proxy_bce_loss(std::span<const double> scores, std::span<const double> labels) {
  return bce_sum(scores, labels);
}

double classification_bce_loss(std::span<const double> scores, std::span<const double> labels) {
  return bce_sum(scores, labels);
}

Var triplet_loss_rows(const Var& anchor, const Var& positive, const Var& negative, double margin,
                      const Var* masks) {
  Var a = anchor, p = positive, n = negative;
  if (masks) {
    a = mul(a, *masks);
    p = mul(p, *masks);
    n = mul(n, *masks);
  }
  Var an = l2_normalize(a);
  return max_with_zero(add_scalar(sub(dot(an, l2_normalize(n)), dot(an, l2_normalize(p))), margin));
}

Var bce_loss(const Var& scores, const Var& labels) {
  if (!scores.value().same_shape(labels.value())) throw ContractViolation("bce: scores and labels differ in shape");
  Var positive = mul(labels, log(scores));
  Var negative = mul(add_scalar(scale(labels, -1.0), 1.0), log(add_scalar(scale(scores, -1.0), 1.0)));
  const double rows = static_cast<double>(scores.value().rows());
  return scale(sum(add(positive, negative)), -1.0 / rows);
}

Var track_regularized_batch_loss(const Var& tag_anchor, const Var& tag_positive, const Var& tag_negative,
                                 const Var& tag_masks, const Var& track_anchor, const Var& track_positive,
                                 const Var& track_negative, double margin, double weight) {
  Var tag_term = mean(triplet_loss_rows(tag_anchor, tag_positive, tag_negative, margin, &tag_masks));
  Var track_term = mean(triplet_loss_rows(track_anchor, track_positive, track_negative, margin));
  return add(tag_term, scale(track_term, weight));
}

double track_regularized_batch_loss(std::span<const double> tag_losses, std::span<const double> track_losses,
                                    double weight) {
  if (tag_losses.empty() || track_losses.empty()) {
    throw DatasetError("track-regularized loss needs at least one tag triplet and one track triplet");
  }
  double tag_sum = 0, track_sum = 0;
  for (double v : tag_losses) tag_sum += v;
  for (double v : track_losses) track_sum += v;
  return tag_sum / static_cast<double>(tag_losses.size()) +
         weight * track_sum / static_cast<double>(track_losses.size());
}

}  // namespace disent
