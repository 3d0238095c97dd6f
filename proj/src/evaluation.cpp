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

#include "disent/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "disent/errors.hpp"
#include "disent/log.hpp"
#include "disent/random.hpp"

namespace disent {

namespace {

// Rows scaled to unit length (guarded), so dot products are cosines.
Tensor unit_rows(const Tensor& x) {
  Tensor out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sq = 0;
    for (double v : row) sq += v * v;
    const double norm = std::max(std::sqrt(sq), kNormFloor);
    for (double& v : row) v /= norm;
  }
  return out;
}

double cosine_span(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::max(std::sqrt(aa), kNormFloor) * std::max(std::sqrt(bb), kNormFloor));
}

// Exposed embeddings (normalized when the model normalizes its output).
Tensor exposed_embeddings(const Model& model, const Dataset& dataset) {
  Tensor raw = model.embed_batch(dataset.all_features());
  return model.config().normalize_output ? unit_rows(raw) : raw;
}

}  // namespace

std::optional<double> recall_at_k(std::span<const std::uint8_t> query,
                                  std::span<const std::span<const std::uint8_t>> ranked, std::size_t k) {
  std::size_t wanted = 0, found = 0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t t = 0; t < query.size(); ++t) {
    if (!query[t]) continue;
    ++wanted;
    for (std::size_t i = 0; i < depth; ++i) {
      if (ranked[i][t]) {
        ++found;
        break;
      }
    }
  }
  if (wanted == 0) return std::nullopt;
  return static_cast<double>(found) / static_cast<double>(wanted);
}

std::map<std::size_t, double> retrieval_recall(const Tensor& embeddings, const Dataset& dataset,
                                               std::span<const std::size_t> ks) {
  const std::size_t n = dataset.size();
  if (embeddings.rows() != n) throw ContractViolation("retrieval: one embedding row per item required");
  std::map<std::size_t, double> totals;
  for (auto k : ks) {
    if (k == 0) throw ConfigError("recall@K needs K >= 1");
    totals[k] = 0;
  }
  if (n < 2 || ks.empty()) return totals;
  const std::size_t depth = std::min(*std::max_element(ks.begin(), ks.end()), n - 1);

  const Tensor unit = unit_rows(embeddings);
  std::vector<double> sims(n);
  std::vector<std::size_t> candidates;
  std::vector<std::span<const std::uint8_t>> ranked;
  std::size_t counted = 0, skipped = 0;
  for (std::size_t q = 0; q < n; ++q) {
    auto query_row = unit.row(q);
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      auto row = unit.row(j);
      double s = 0;
      for (std::size_t c = 0; c < row.size(); ++c) s += query_row[c] * row[c];
      sims[j] = s;
      candidates.push_back(j);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(depth), candidates.end(),
                      [&sims](std::size_t a, std::size_t b) { return sims[a] != sims[b] ? sims[a] > sims[b] : a < b; });
    ranked.clear();
    for (std::size_t i = 0; i < depth; ++i) ranked.emplace_back(dataset[candidates[i]].labels);
    bool used = false;
    for (auto k : ks) {
      auto r = recall_at_k(dataset[q].labels, ranked, k);
      if (!r) break;
      totals[k] += *r;
      used = true;
    }
    used ? ++counted : ++skipped;
  }
  if (skipped) log_warning(std::to_string(skipped) + " retrieval queries without tags were skipped");
  for (auto& [k, total] : totals) total = counted ? total / static_cast<double>(counted) : 0.0;
  return totals;
}

Tensor build_prototypes(const Tensor& embeddings, const Dataset& dataset) {
  if (embeddings.rows() != dataset.size()) throw ContractViolation("prototypes: one embedding row per item required");
  const std::size_t tags = dataset.tag_count();
  const std::size_t d = embeddings.cols();
  Tensor out({tags, d});
  std::vector<std::size_t> counts(tags, 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto row = embeddings.row(i);
    for (std::size_t t = 0; t < tags; ++t) {
      if (!dataset.has_tag(i, t)) continue;
      ++counts[t];
      auto proto = out.row(t);
      for (std::size_t c = 0; c < d; ++c) proto[c] += row[c];
    }
  }
  for (std::size_t t = 0; t < tags; ++t) {
    if (counts[t] == 0) {
      log_warning("tag " + std::to_string(t) + " has no training positive; its prototype is zero");
      continue;
    }
    for (double& v : out.row(t)) v /= static_cast<double>(counts[t]);
  }
  return out;
}

Tensor build_prototypes(const Model& model, const Dataset& train) {
  return build_prototypes(exposed_embeddings(model, train), train);
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ContractViolation("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based) of tied runs.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = mid;
    i = j;
  }
  double positives = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 0.5) {
      positives += 1;
      rank_sum += rank[i];
    }
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  return (rank_sum - positives * (positives + 1) / 2) / (positives * negatives);
}

AucResult auc_tags(const Tensor& scores, const Tensor& labels) {
  if (!scores.same_shape(labels) || scores.rank() != 2) throw ContractViolation("auc: score and label matrices differ");
  AucResult result;
  const std::size_t n = scores.rows();
  std::vector<double> column_scores(n), column_labels(n);
  double total = 0;
  std::size_t evaluable = 0;
  for (std::size_t t = 0; t < scores.cols(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      column_scores[i] = scores.at(i, t);
      column_labels[i] = labels.at(i, t);
    }
    auto auc = roc_auc(column_scores, column_labels);
    if (auc) {
      total += *auc;
      ++evaluable;
    } else {
      log_info("tag " + std::to_string(t) + " skipped in AUC: needs a positive and a negative test item");
    }
    result.per_tag.push_back(auc);
  }
  result.macro = evaluable ? total / static_cast<double>(evaluable) : 0.0;
  return result;
}

double triplet_accuracy(const Tensor& embeddings, std::span<const Triplet> triplets, const LabelSpace& space,
                        Space mode) {
  if (triplets.empty()) return 0.0;
  if (embeddings.cols() != space.embedding_dim()) throw ContractViolation("triplet accuracy: embedding width mismatch");
  std::size_t correct = 0;
  for (const auto& t : triplets) {
    auto a = embeddings.row(t.anchor);
    auto p = embeddings.row(t.positive);
    auto n = embeddings.row(t.negative);
    if (mode == Space::kSub && t.kind == TripletKind::kTag) {
      const std::size_t begin = space.block_begin(t.notion);
      const std::size_t width = space.subspace_dim();
      a = a.subspan(begin, width);
      p = p.subspan(begin, width);
      n = n.subspan(begin, width);
    }
    if (cosine_span(a, p) > cosine_span(a, n)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

double triplet_accuracy(const Model& model, const VariantConfig& variant, const Dataset& dataset,
                        std::span<const Triplet> triplets, Space mode) {
  if (mode == Space::kSub && !variant.disentanglement) {
    throw ConfigError("sub-space triplet accuracy needs a disentangled model");
  }
  return triplet_accuracy(model.embed_batch(dataset.all_features()), triplets, model.space(), mode);
}

std::map<std::string, double> training_time_ratio(const std::map<std::string, double>& seconds) {
  if (seconds.empty()) throw ContractViolation("training time ratio of an empty set");
  double fastest = seconds.begin()->second;
  for (const auto& [name, s] : seconds) {
    if (!(s > 0)) throw ContractViolation("training time of '" + name + "' must be positive");
    fastest = std::min(fastest, s);
  }
  std::map<std::string, double> out;
  for (const auto& [name, s] : seconds) out[name] = s == fastest ? 1.0 : s / fastest;
  return out;
}

std::vector<Triplet> evaluation_triplets(const TripletSampler& sampler, const LabelSpace& space,
                                         std::size_t per_notion, std::uint64_t seed) {
  std::vector<Triplet> out;
  for (std::size_t s = 0; s < space.notion_count(); ++s) {
    if (!sampler.can_sample_tags(s)) {
      log_warning("no evaluation triplets for notion '" + space.notions()[s].name + "'");
      continue;
    }
    std::mt19937_64 rng(derive_seed(seed, s));
    for (std::size_t i = 0; i < per_notion; ++i) out.push_back(sampler.sample_tag_triplet(s, rng));
  }
  if (sampler.can_sample_tracks()) {
    std::mt19937_64 rng(derive_seed(seed, space.notion_count()));
    for (std::size_t i = 0; i < per_notion; ++i) out.push_back(sampler.sample_track_triplet(rng));
  }
  return out;
}

Tensor tagging_scores(const Model& model, const VariantConfig& variant, const Dataset& train, const Dataset& test) {
  if (auto score_variant = score_variant_for(variant)) {
    return model.class_scores_batch(test.all_features(), *score_variant);
  }
  const LabelSpace& space = model.space();
  const Tensor prototypes = build_prototypes(model, train);
  const Tensor embeddings = exposed_embeddings(model, test);
  Tensor out({test.size(), space.tag_count()});
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto e = embeddings.row(i);
    for (std::size_t t = 0; t < space.tag_count(); ++t) {
      auto proto = prototypes.row(t);
      if (variant.disentanglement) {
        const std::size_t begin = space.block_begin(space.notion_of_tag(t));
        out.at(i, t) = cosine_span(e.subspan(begin, space.subspace_dim()), proto.subspan(begin, space.subspace_dim()));
      } else {
        out.at(i, t) = cosine_span(e, proto);
      }
    }
  }
  return out;
}

EvalReport evaluate_model(const Model& model, const VariantConfig& variant, const Dataset& train,
                          const Dataset& test, const EvalOptions& options) {
  EvalReport report;
  report.variant = variant;
  const LabelSpace& space = model.space();
  const Tensor embeddings = model.embed_batch(test.all_features());

  report.recall_at = retrieval_recall(embeddings, test, options.ks);
  std::vector<std::size_t> all(test.size());
  std::iota(all.begin(), all.end(), 0);
  report.auc = auc_tags(tagging_scores(model, variant, train, test), test.labels(all)).macro;

  TripletSampler sampler(test, space);
  const auto triplets = evaluation_triplets(sampler, space, options.triplets_per_notion, options.seed);
  std::vector<Space> modes = {Space::kFull};
  if (variant.disentanglement) modes.push_back(Space::kSub);
  for (Space mode : modes) {
    const std::string suffix = mode == Space::kFull ? "/full" : "/sub";
    double overall = 0;
    std::size_t notions = 0;
    for (std::size_t s = 0; s < space.notion_count(); ++s) {
      std::vector<Triplet> subset;
      for (const auto& t : triplets) {
        if (t.kind == TripletKind::kTag && t.notion == s) subset.push_back(t);
      }
      if (subset.empty()) continue;
      const double acc = triplet_accuracy(embeddings, subset, space, mode);
      report.triplet_accuracy[space.notions()[s].name + suffix] = acc;
      overall += acc;
      ++notions;
    }
    if (notions) report.triplet_accuracy["overall" + suffix] = overall / static_cast<double>(notions);
  }
  std::vector<Triplet> track;
  for (const auto& t : triplets) {
    if (t.kind == TripletKind::kTrack) track.push_back(t);
  }
  if (!track.empty()) report.triplet_accuracy["track/full"] = triplet_accuracy(embeddings, track, space, Space::kFull);
  return report;
}

}  // namespace disent
