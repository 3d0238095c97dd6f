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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "disent/labelspace.hpp"
#include "disent/tensor.hpp"

namespace disent {

struct Item {
  std::string id;
  std::string track_id;
  std::vector<double> features;
  std::vector<std::uint8_t> labels;  // multi-hot over the label space's global tag order

  friend bool operator==(const Item&, const Item&) = default;
};

// Immutable collection of items with a fixed feature width and tag count.
class Dataset {
 public:
  // Throws DatasetError if an item's width or label length is off.
  Dataset(std::size_t feature_dim, std::size_t tag_count, std::vector<Item> items);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t tag_count() const { return tag_count_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<Item>& items() const { return items_; }
  const Item& operator[](std::size_t i) const { return items_[i]; }
  bool has_tag(std::size_t item, std::size_t tag) const { return items_[item].labels[tag] != 0; }

  // Stacked features / labels of the given items, [n, feature_dim] / [n, T].
  Tensor features(std::span<const std::size_t> indices) const;
  Tensor labels(std::span<const std::size_t> indices) const;
  Tensor all_features() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t feature_dim_;
  std::size_t tag_count_;
  std::vector<Item> items_;
};

struct SyntheticSpec {
  std::size_t feature_dim = 64;
  std::size_t tracks = 600;
  std::size_t excerpts_per_track = 4;
  std::size_t min_tags_per_notion = 1;
  std::size_t max_tags_per_notion = 2;
  double centroid_scale = 1.0;  // std-dev of centroid coordinates
  double sigma_within = 1.0;    // track-level noise
  double sigma_excerpt = 1.0;   // excerpt-level noise
  std::uint64_t seed = 7;
};

// Synthetic multi-notion multi-label data. Each tag owns a random centroid in
// its notion's block of feature coordinates; a track draws between
// min_tags_per_notion and max_tags_per_notion tags per notion, its base feature
// is the sum of the chosen centroids plus N(0, sigma_within), and each excerpt
// adds N(0, sigma_excerpt). Deterministic in the seed.
Dataset generate_synthetic(const LabelSpace& space, const SyntheticSpec& spec);

// Centroids used by generate_synthetic for the same (space, spec); [T, feature_dim].
std::vector<std::vector<double>> synthetic_centroids(const LabelSpace& space, const SyntheticSpec& spec);

// Fraction of true tags recovered by decoding each item's notion block with
// the nearest sum of a legal tag subset's centroids.
double decoder_recovery(const LabelSpace& space, const SyntheticSpec& spec, const Dataset& dataset);

struct Splits {
  Dataset train;
  Dataset valid;
  Dataset test;
};

using SplitFractions = std::array<double, 3>;
inline constexpr SplitFractions kDefaultFractions = {0.8, 0.05, 0.15};

// Partitions the dataset. Group counts (tracks when by_track, else items) are
// cut at round(n * cumulative fraction); a split that would be empty takes one
// group from the largest split. Throws DatasetError with fewer groups than splits.
Splits split(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed, bool by_track = true);

// generate_synthetic + split, regenerating with a derived seed until every tag
// has a positive training item (at most max_attempts tries).
Splits generate_splits(const LabelSpace& space, const SyntheticSpec& spec, SplitFractions fractions = kDefaultFractions,
                       int max_attempts = 20);

// Tab-separated dataset file; see README for the layout.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset, const LabelSpace& space);
Dataset load_dataset(const std::filesystem::path& path, const LabelSpace& space);

}  // namespace disent
