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

#include "disent/labelspace.hpp"

#include "disent/errors.hpp"

namespace disent {

LabelSpace::LabelSpace(std::vector<Notion> notions, std::size_t embedding_dim)
    : notions_(std::move(notions)), embedding_dim_(embedding_dim) {
  if (notions_.empty()) throw ConfigError("label space needs at least one notion");
  if (embedding_dim_ == 0 || embedding_dim_ % notions_.size() != 0) {
    throw ConfigError("embedding dim " + std::to_string(embedding_dim_) + " is not divisible by " +
                      std::to_string(notions_.size()) + " notions");
  }
  notion_tags_.resize(notions_.size());
  for (std::size_t n = 0; n < notions_.size(); ++n) {
    const auto& notion = notions_[n];
    if (notion.name.empty()) throw ConfigError("notion with empty name");
    if (!notion_lookup_.emplace(notion.name, n).second) throw ConfigError("duplicate notion '" + notion.name + "'");
    if (notion.tags.empty()) throw ConfigError("notion '" + notion.name + "' has no tags");
    for (const auto& tag : notion.tags) {
      if (tag.empty()) throw ConfigError("empty tag name in notion '" + notion.name + "'");
      if (!tag_lookup_.emplace(tag, tags_.size()).second) throw ConfigError("duplicate tag '" + tag + "'");
      notion_tags_[n].push_back(tags_.size());
      tags_.push_back(tag);
      tag_notion_.push_back(n);
    }
  }
}

std::size_t LabelSpace::tag_index(const std::string& tag) const {
  auto it = tag_lookup_.find(tag);
  if (it == tag_lookup_.end()) throw ConfigError("unknown tag '" + tag + "'");
  return it->second;
}

std::size_t LabelSpace::notion_index(const std::string& notion) const {
  auto it = notion_lookup_.find(notion);
  if (it == notion_lookup_.end()) throw ConfigError("unknown notion '" + notion + "'");
  return it->second;
}

const std::string& LabelSpace::notion_of(const std::string& tag) const {
  return notions_[tag_notion_[tag_index(tag)]].name;
}

std::vector<Mask> LabelSpace::build_masks() const {
  std::vector<Mask> masks;
  const std::size_t width = subspace_dim();
  for (std::size_t n = 0; n < notions_.size(); ++n) {
    Mask mask{notions_[n].name, std::vector<double>(embedding_dim_, 0.0)};
    for (std::size_t i = 0; i < width; ++i) mask.values[n * width + i] = 1.0;
    masks.push_back(std::move(mask));
  }
  return masks;
}

std::vector<std::uint8_t> LabelSpace::multi_hot(const std::set<std::string>& tags) const {
  std::vector<std::uint8_t> out(tags_.size(), 0);
  for (const auto& tag : tags) out[tag_index(tag)] = 1;
  return out;
}

std::set<std::string> LabelSpace::decode(std::span<const std::uint8_t> multi_hot) const {
  if (multi_hot.size() != tags_.size()) {
    throw ContractViolation("multi-hot vector of length " + std::to_string(multi_hot.size()) + " for " +
                            std::to_string(tags_.size()) + " tags");
  }
  std::set<std::string> out;
  for (std::size_t i = 0; i < multi_hot.size(); ++i) {
    if (multi_hot[i]) out.insert(tags_[i]);
  }
  return out;
}

LabelSpace default_label_space(std::size_t embedding_dim) {
  return LabelSpace(
      {
          {"genre", {"rock", "pop", "electronic", "jazz", "hip-hop", "folk", "metal", "classical"}},
          {"mood", {"happy", "sad", "chill", "energetic", "dark", "romantic"}},
          {"instrument", {"guitar", "piano", "female-vocal", "instrumental"}},
          {"era", {"60s", "70s", "80s", "90s"}},
      },
      embedding_dim);
}

}  // namespace disent
