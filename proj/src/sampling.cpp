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

#include "disent/sampling.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "disent/errors.hpp"
#include "disent/log.hpp"

namespace disent {

namespace {

std::size_t uniform_index(std::size_t n, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

TripletSampler::TripletSampler(const Dataset& dataset, const LabelSpace& space)
    : dataset_(&dataset), space_(&space) {
  if (dataset.tag_count() != space.tag_count()) throw ContractViolation("dataset and label space disagree on tags");
  positives_.resize(space.tag_count());
  negatives_.resize(space.tag_count());
  sampleable_by_notion_.resize(space.notion_count());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t t = 0; t < space.tag_count(); ++t) (dataset.has_tag(i, t) ? positives_ : negatives_)[t].push_back(i);
  }
  for (std::size_t t = 0; t < space.tag_count(); ++t) {
    if (positives_[t].size() >= 2 && !negatives_[t].empty()) {
      sampleable_.push_back(t);
      sampleable_by_notion_[space.notion_of_tag(t)].push_back(t);
    } else if (!dataset.empty()) {
      log_info("tag '" + space.tags()[t] + "' excluded from triplet sampling (" +
                  std::to_string(positives_[t].size()) + " positives, " + std::to_string(negatives_[t].size()) +
                  " negatives)");
    }
  }

  std::map<std::string, std::size_t> track_index;
  track_of_item_.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto [it, inserted] = track_index.try_emplace(dataset[i].track_id, track_members_.size());
    if (inserted) track_members_.emplace_back();
    track_members_[it->second].push_back(i);
    track_of_item_[i] = it->second;
  }
  for (std::size_t k = 0; k < track_members_.size(); ++k) {
    if (track_members_[k].size() >= 2) multi_tracks_.push_back(k);
  }
}

Triplet TripletSampler::sample_tag_triplet(std::mt19937_64& rng) const {
  if (sampleable_.empty()) throw DatasetError("no tag has two positives and a negative; cannot sample tag triplets");
  return triplet_for_tag(sampleable_[uniform_index(sampleable_.size(), rng)], rng);
}

Triplet TripletSampler::sample_tag_triplet(std::size_t notion, std::mt19937_64& rng) const {
  const auto& tags = sampleable_by_notion_.at(notion);
  if (tags.empty()) {
    throw DatasetError("notion '" + space_->notions()[notion].name + "' has no sampleable tag");
  }
  return triplet_for_tag(tags[uniform_index(tags.size(), rng)], rng);
}

Triplet TripletSampler::triplet_for_tag(std::size_t tag, std::mt19937_64& rng) const {
  const auto& pos = positives_[tag];
  const std::size_t a = uniform_index(pos.size(), rng);
  std::size_t p = uniform_index(pos.size() - 1, rng);
  if (p >= a) ++p;
  const auto& neg = negatives_[tag];
  return {pos[a], pos[p], neg[uniform_index(neg.size(), rng)], tag, space_->notion_of_tag(tag), TripletKind::kTag};
}

Triplet TripletSampler::sample_track_triplet(std::mt19937_64& rng) const {
  if (!can_sample_tracks()) {
    throw DatasetError("track triplets need a track with two items and at least one other track");
  }
  const std::size_t track = multi_tracks_[uniform_index(multi_tracks_.size(), rng)];
  const auto& members = track_members_[track];
  const std::size_t a = uniform_index(members.size(), rng);
  std::size_t p = uniform_index(members.size() - 1, rng);
  if (p >= a) ++p;
  // Uniform over items outside the track: draw from the complement by skipping.
  const std::size_t outside = dataset_->size() - members.size();
  std::size_t k = uniform_index(outside, rng);
  std::size_t negative = 0;
  for (std::size_t i = 0; i < dataset_->size(); ++i) {
    if (track_of_item_[i] == track) continue;
    if (k-- == 0) {
      negative = i;
      break;
    }
  }
  return {members[a], members[p], negative, Triplet::kNone, Triplet::kNone, TripletKind::kTrack};
}

bool TripletSampler::is_valid(const Triplet& t) const {
  const std::size_t n = dataset_->size();
  if (t.anchor >= n || t.positive >= n || t.negative >= n || t.anchor == t.positive) return false;
  if (t.kind == TripletKind::kTrack) {
    const auto& items = dataset_->items();
    return items[t.anchor].track_id == items[t.positive].track_id &&
           items[t.anchor].track_id != items[t.negative].track_id;
  }
  if (t.tag >= space_->tag_count() || t.notion != space_->notion_of_tag(t.tag)) return false;
  return dataset_->has_tag(t.anchor, t.tag) && dataset_->has_tag(t.positive, t.tag) &&
         !dataset_->has_tag(t.negative, t.tag);
}

BatchIterator::BatchIterator(const TripletSampler& sampler, std::size_t batch_size, BatchMode mode,
                             std::uint64_t epoch_seed, bool track_regularization)
    : sampler_(&sampler), batch_size_(batch_size), mode_(mode), track_(track_regularization), rng_(epoch_seed) {
  if (batch_size_ == 0) throw ConfigError("batch size must be at least 1");
  if (sampler.dataset().empty()) throw DatasetError("cannot iterate over an empty dataset");
  if (mode_ == BatchMode::kSample) {
    order_.resize(sampler.dataset().size());
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
  }
}

std::optional<Batch> BatchIterator::next() {
  const std::size_t total = sampler_->dataset().size();
  if (cursor_ >= total) return std::nullopt;
  const std::size_t count = std::min(batch_size_, total - cursor_);
  Batch batch;
  if (mode_ == BatchMode::kSample) {
    batch.samples.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                         order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + count));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      batch.tag_triplets.push_back(sampler_->sample_tag_triplet(rng_));
      if (track_) batch.track_triplets.push_back(sampler_->sample_track_triplet(rng_));
    }
  }
  cursor_ += count;
  return batch;
}

}  // namespace disent
