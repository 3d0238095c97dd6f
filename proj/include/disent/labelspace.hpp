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
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace disent {

struct Notion {
  std::string name;
  std::vector<std::string> tags;
};

// Binary selector over the embedding dimensions owned by one notion.
struct Mask {
  std::string notion;
  std::vector<double> values;  // entries in {0, 1}, length = embedding dim
};

// Similarity notions, their tags and the embedding width they partition.
//
// Tags are globally ordered by concatenating the per-notion lists in
// declaration order; that index is the position in every multi-hot vector and
// score vector. Notion i owns the contiguous embedding block
// [i*d/G, (i+1)*d/G) for G notions. Immutable after construction.
class LabelSpace {
 public:
  // Throws ConfigError on duplicate or empty names, a notion without tags,
  // or an embedding dim not divisible by the notion count.
  LabelSpace(std::vector<Notion> notions, std::size_t embedding_dim);

  const std::vector<Notion>& notions() const { return notions_; }
  std::size_t notion_count() const { return notions_.size(); }
  std::size_t embedding_dim() const { return embedding_dim_; }
  std::size_t subspace_dim() const { return embedding_dim_ / notions_.size(); }
  std::size_t tag_count() const { return tags_.size(); }
  const std::vector<std::string>& tags() const { return tags_; }

  std::size_t tag_index(const std::string& tag) const;
  std::size_t notion_index(const std::string& notion) const;
  // Index of the notion owning global tag `tag`.
  std::size_t notion_of_tag(std::size_t tag) const { return tag_notion_[tag]; }
  const std::string& notion_of(const std::string& tag) const;
  // Global indices of the tags of notion `notion`.
  const std::vector<std::size_t>& tags_of(std::size_t notion) const { return notion_tags_[notion]; }

  // First embedding coordinate of notion `notion`'s block.
  std::size_t block_begin(std::size_t notion) const { return notion * subspace_dim(); }

  std::vector<Mask> build_masks() const;
  std::vector<std::uint8_t> multi_hot(const std::set<std::string>& tags) const;
  std::set<std::string> decode(std::span<const std::uint8_t> multi_hot) const;

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) {
    return a.embedding_dim_ == b.embedding_dim_ && a.tags_ == b.tags_ && a.tag_notion_ == b.tag_notion_;
  }

 private:
  std::vector<Notion> notions_;
  std::size_t embedding_dim_;
  std::vector<std::string> tags_;
  std::vector<std::size_t> tag_notion_;
  std::vector<std::vector<std::size_t>> notion_tags_;
  std::map<std::string, std::size_t> tag_lookup_;
  std::map<std::string, std::size_t> notion_lookup_;
};

// Four-notion space with the given embedding width and default tag counts
// (8 genre, 6 mood, 4 instrument, 4 era tags).
LabelSpace default_label_space(std::size_t embedding_dim);

}  // namespace disent
