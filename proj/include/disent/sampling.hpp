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

#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "disent/data.hpp"
#include "disent/labelspace.hpp"

namespace disent {

enum class TripletKind { kTag, kTrack };

// Item indices into the sampler's dataset.
struct Triplet {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
  std::size_t tag = kNone;     // shared positive tag (tag triplets)
  std::size_t notion = kNone;  // notion of `tag` (tag triplets)
  TripletKind kind = TripletKind::kTag;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Two-stage triplet sampler: a tag uniformly among sampleable tags, then
// anchor and positive uniformly among its positives and the negative
// uniformly among items lacking it. A tag needs >= 2 positives and >= 1
// negative to be sampleable; the others are excluded with a warning.
class TripletSampler {
 public:
  TripletSampler(const Dataset& dataset, const LabelSpace& space);

  Triplet sample_tag_triplet(std::mt19937_64& rng) const;
  // Same, restricted to the sampleable tags of one notion.
  Triplet sample_tag_triplet(std::size_t notion, std::mt19937_64& rng) const;
  // Anchor and positive from one track (uniform over tracks with >= 2 items),
  // negative uniform over items of other tracks.
  Triplet sample_track_triplet(std::mt19937_64& rng) const;

  const Dataset& dataset() const { return *dataset_; }
  const std::vector<std::size_t>& sampleable_tags() const { return sampleable_; }
  bool can_sample_tags() const { return !sampleable_.empty(); }
  bool can_sample_tags(std::size_t notion) const { return !sampleable_by_notion_.at(notion).empty(); }
  bool can_sample_tracks() const { return !multi_tracks_.empty() && track_members_.size() >= 2; }

  // Re-checks the defining predicate of a triplet against the dataset.
  bool is_valid(const Triplet& t) const;

 private:
  Triplet triplet_for_tag(std::size_t tag, std::mt19937_64& rng) const;

  const Dataset* dataset_;
  const LabelSpace* space_;
  std::vector<std::vector<std::size_t>> positives_;  // per tag
  std::vector<std::vector<std::size_t>> negatives_;  // per tag
  std::vector<std::size_t> sampleable_;
  std::vector<std::vector<std::size_t>> sampleable_by_notion_;
  std::vector<std::vector<std::size_t>> track_members_;
  std::vector<std::size_t> track_of_item_;
  std::vector<std::size_t> multi_tracks_;  // tracks with >= 2 items
};

enum class BatchMode { kSample, kTriplet };

struct Batch {
  std::vector<std::size_t> samples;     // sample mode
  std::vector<Triplet> tag_triplets;    // triplet mode
  std::vector<Triplet> track_triplets;  // triplet mode with track regularization
};

// One epoch of batches. Sample mode visits every item exactly once in a
// shuffled order; triplet mode draws as many tag triplets as there are items
// (plus as many track triplets when track regularization is on).
class BatchIterator {
 public:
  BatchIterator(const TripletSampler& sampler, std::size_t batch_size, BatchMode mode, std::uint64_t epoch_seed,
                bool track_regularization = false);

  std::optional<Batch> next();

 private:
  const TripletSampler* sampler_;
  std::size_t batch_size_;
  BatchMode mode_;
  bool track_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace disent
