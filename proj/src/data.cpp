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

#include "disent/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "disent/errors.hpp"
#include "disent/random.hpp"

namespace disent {

Dataset::Dataset(std::size_t feature_dim, std::size_t tag_count, std::vector<Item> items)
    : feature_dim_(feature_dim), tag_count_(tag_count), items_(std::move(items)) {
  for (const auto& item : items_) {
    if (item.features.size() != feature_dim_) {
      throw DatasetError("item '" + item.id + "' has " + std::to_string(item.features.size()) +
                         " features, expected " + std::to_string(feature_dim_));
    }
    if (item.labels.size() != tag_count_) {
      throw DatasetError("item '" + item.id + "' has " + std::to_string(item.labels.size()) + " labels, expected " +
                         std::to_string(tag_count_));
    }
  }
}

Tensor Dataset::features(std::span<const std::size_t> indices) const {
  Tensor out({indices.size(), feature_dim_});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy(items_[indices[r]].features.begin(), items_[indices[r]].features.end(), out.row(r).begin());
  }
  return out;
}

Tensor Dataset::labels(std::span<const std::size_t> indices) const {
  Tensor out({indices.size(), tag_count_});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& labels = items_[indices[r]].labels;
    for (std::size_t t = 0; t < tag_count_; ++t) out.at(r, t) = labels[t];
  }
  return out;
}

Tensor Dataset::all_features() const {
  std::vector<std::size_t> all(items_.size());
  std::iota(all.begin(), all.end(), 0);
  return features(all);
}

// ---------------------------------------------------------------------------
// Synthetic generation

namespace {

void validate(const LabelSpace& space, const SyntheticSpec& spec) {
  if (spec.feature_dim < space.notion_count()) throw ConfigError("feature_dim must be at least the notion count");
  if (spec.tracks == 0 || spec.excerpts_per_track == 0) throw ConfigError("track and excerpt counts must be positive");
  if (spec.min_tags_per_notion == 0 || spec.max_tags_per_notion < spec.min_tags_per_notion) {
    throw ConfigError("tags-per-notion range must satisfy 1 <= min <= max");
  }
  for (const auto& notion : space.notions()) {
    if (spec.max_tags_per_notion > notion.tags.size()) {
      throw ConfigError("tags-per-notion maximum " + std::to_string(spec.max_tags_per_notion) + " exceeds the " +
                        std::to_string(notion.tags.size()) + " tags of notion '" + notion.name + "'");
    }
  }
  if (spec.sigma_within < 0 || spec.sigma_excerpt < 0 || spec.centroid_scale < 0) {
    throw ConfigError("noise and centroid scales must be non-negative");
  }
}

std::size_t block_width(const LabelSpace& space, const SyntheticSpec& spec) {
  return spec.feature_dim / space.notion_count();
}

std::vector<std::vector<double>> draw_centroids(const LabelSpace& space, const SyntheticSpec& spec,
                                                std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, spec.centroid_scale);
  const std::size_t width = block_width(space, spec);
  std::vector<std::vector<double>> centroids(space.tag_count(), std::vector<double>(spec.feature_dim, 0.0));
  for (std::size_t t = 0; t < space.tag_count(); ++t) {
    const std::size_t begin = space.notion_of_tag(t) * width;
    for (std::size_t i = 0; i < width; ++i) centroids[t][begin + i] = normal(rng);
  }
  return centroids;
}

std::string track_name(std::size_t track) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "track%05zu", track);
  return buf;
}

// All subsets of `tags` with size in [lo, hi], in lexicographic index order.
void enumerate_subsets(const std::vector<std::size_t>& tags, std::size_t lo, std::size_t hi,
                       std::vector<std::vector<std::size_t>>& out) {
  const std::size_t n = tags.size();
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << n); ++bits) {
    const auto count = static_cast<std::size_t>(std::popcount(bits));
    if (count < lo || count > hi) continue;
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < n; ++i) {
      if (bits & (std::uint64_t{1} << i)) subset.push_back(tags[i]);
    }
    out.push_back(std::move(subset));
  }
}

}  // namespace

std::vector<std::vector<double>> synthetic_centroids(const LabelSpace& space, const SyntheticSpec& spec) {
  validate(space, spec);
  std::mt19937_64 rng(spec.seed);
  return draw_centroids(space, spec, rng);
}

Dataset generate_synthetic(const LabelSpace& space, const SyntheticSpec& spec) {
  validate(space, spec);
  std::mt19937_64 rng(spec.seed);
  const auto centroids = draw_centroids(space, spec, rng);
  std::normal_distribution<double> within(0.0, spec.sigma_within);
  std::normal_distribution<double> excerpt(0.0, spec.sigma_excerpt);

  std::vector<Item> items;
  items.reserve(spec.tracks * spec.excerpts_per_track);
  for (std::size_t track = 0; track < spec.tracks; ++track) {
    std::vector<std::uint8_t> labels(space.tag_count(), 0);
    std::vector<double> base(spec.feature_dim, 0.0);
    for (std::size_t n = 0; n < space.notion_count(); ++n) {
      std::vector<std::size_t> pool = space.tags_of(n);
      std::uniform_int_distribution<std::size_t> how_many(spec.min_tags_per_notion, spec.max_tags_per_notion);
      const std::size_t k = how_many(rng);
      // Partial Fisher-Yates: the first k entries become the chosen tags.
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        labels[pool[i]] = 1;
        for (std::size_t f = 0; f < spec.feature_dim; ++f) base[f] += centroids[pool[i]][f];
      }
    }
    for (double& f : base) f += spec.sigma_within > 0 ? within(rng) : 0.0;
    const std::string track_id = track_name(track);
    for (std::size_t e = 0; e < spec.excerpts_per_track; ++e) {
      Item item{track_id + "-" + std::to_string(e), track_id, base, labels};
      for (double& f : item.features) f += spec.sigma_excerpt > 0 ? excerpt(rng) : 0.0;
      items.push_back(std::move(item));
    }
  }
  return Dataset(spec.feature_dim, space.tag_count(), std::move(items));
}

double decoder_recovery(const LabelSpace& space, const SyntheticSpec& spec, const Dataset& dataset) {
  const auto centroids = synthetic_centroids(space, spec);
  const std::size_t width = block_width(space, spec);
  std::vector<std::vector<std::vector<std::size_t>>> subsets(space.notion_count());
  for (std::size_t n = 0; n < space.notion_count(); ++n) {
    enumerate_subsets(space.tags_of(n), spec.min_tags_per_notion, spec.max_tags_per_notion, subsets[n]);
  }
  std::size_t truth = 0, recovered = 0;
  for (const auto& item : dataset.items()) {
    for (std::size_t n = 0; n < space.notion_count(); ++n) {
      const std::size_t begin = n * width;
      double best = std::numeric_limits<double>::infinity();
      const std::vector<std::size_t>* chosen = nullptr;
      for (const auto& subset : subsets[n]) {
        double dist = 0;
        for (std::size_t i = begin; i < begin + width; ++i) {
          double predicted = 0;
          for (std::size_t t : subset) predicted += centroids[t][i];
          dist += (item.features[i] - predicted) * (item.features[i] - predicted);
        }
        if (dist < best) {
          best = dist;
          chosen = &subset;
        }
      }
      for (std::size_t t : space.tags_of(n)) {
        if (!item.labels[t]) continue;
        ++truth;
        if (chosen && std::find(chosen->begin(), chosen->end(), t) != chosen->end()) ++recovered;
      }
    }
  }
  return truth == 0 ? 0.0 : static_cast<double>(recovered) / static_cast<double>(truth);
}

// ---------------------------------------------------------------------------
// Splitting

Splits split(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed, bool by_track) {
  double total = 0;
  for (double f : fractions) {
    if (!(f > 0)) throw ConfigError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

  // Groups of item indices that must land in the same split, in first-seen order.
  std::vector<std::vector<std::size_t>> groups;
  if (by_track) {
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      auto [it, inserted] = group_of.try_emplace(dataset[i].track_id, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < dataset.size(); ++i) groups.push_back({i});
  }
  const std::size_t n = groups.size();
  if (n < fractions.size()) {
    throw DatasetError("cannot split " + std::to_string(n) + (by_track ? " tracks" : " items") + " three ways");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::array<std::size_t, 3> counts{};
  double cumulative = 0;
  std::size_t previous = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    cumulative += fractions[s];
    const auto boundary = s == 2 ? n : static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(n)));
    counts[s] = std::max(boundary, previous) - previous;
    previous = std::max(boundary, previous);
  }
  for (auto& c : counts) {
    if (c == 0) {
      ++c;
      --*std::max_element(counts.begin(), counts.end());
    }
  }

  std::array<std::vector<Item>, 3> parts;
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<std::size_t> members;
    for (std::size_t g = 0; g < counts[s]; ++g) {
      const auto& group = groups[order[cursor++]];
      members.insert(members.end(), group.begin(), group.end());
    }
    std::sort(members.begin(), members.end());
    for (std::size_t i : members) parts[s].push_back(dataset[i]);
  }
  return {Dataset(dataset.feature_dim(), dataset.tag_count(), std::move(parts[0])),
          Dataset(dataset.feature_dim(), dataset.tag_count(), std::move(parts[1])),
          Dataset(dataset.feature_dim(), dataset.tag_count(), std::move(parts[2]))};
}

Splits generate_splits(const LabelSpace& space, const SyntheticSpec& spec, SplitFractions fractions,
                       int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    SyntheticSpec attempt_spec = spec;
    if (attempt > 0) attempt_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(attempt));
    Splits splits = split(generate_synthetic(space, attempt_spec), fractions, derive_seed(attempt_spec.seed, 100));
    bool covered = true;
    for (std::size_t t = 0; t < space.tag_count() && covered; ++t) {
      covered = std::any_of(splits.train.items().begin(), splits.train.items().end(),
                            [t](const Item& item) { return item.labels[t] != 0; });
    }
    if (covered) return splits;
  }
  throw DatasetError("could not generate a training split covering every tag in " + std::to_string(max_attempts) +
                     " attempts");
}

// ---------------------------------------------------------------------------
// File format

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string current;
  std::istringstream stream(text);
  while (std::getline(stream, current, sep)) out.push_back(current);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& dataset, const LabelSpace& space) {
  if (dataset.tag_count() != space.tag_count()) throw ContractViolation("dataset and label space disagree on tags");
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file " + path.string());
  out << "#feature_dim=" << dataset.feature_dim() << '\n' << "#tags=";
  for (std::size_t t = 0; t < space.tag_count(); ++t) out << (t ? "," : "") << space.tags()[t];
  out << '\n';
  for (const auto& item : dataset.items()) {
    out << item.id << '\t' << item.track_id << '\t';
    for (std::size_t f = 0; f < item.features.size(); ++f) out << (f ? "," : "") << format_double(item.features[f]);
    out << '\t';
    bool first = true;
    for (std::size_t t = 0; t < item.labels.size(); ++t) {
      if (!item.labels[t]) continue;
      out << (first ? "" : ";") << space.tags()[t];
      first = false;
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing dataset file " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, const LabelSpace& space) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path.string());
  const std::string where = path.string() + ":";
  std::string line;

  if (!std::getline(in, line) || line.rfind("#feature_dim=", 0) != 0) {
    throw ParseError(where + "1: expected '#feature_dim=<n>'");
  }
  std::size_t feature_dim = 0;
  {
    const std::string value = line.substr(13);
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), feature_dim);
    if (ec != std::errc() || ptr != value.data() + value.size() || feature_dim == 0) {
      throw ParseError(where + "1: bad feature width '" + value + "'");
    }
  }
  if (!std::getline(in, line) || line.rfind("#tags=", 0) != 0) throw ParseError(where + "2: expected '#tags=...'");
  if (split_on(line.substr(6), ',') != space.tags()) {
    throw ParseError(where + "2: tag header does not match the label space tag order");
  }

  std::vector<Item> items;
  std::vector<std::string> problems;
  std::set<std::string> seen_ids;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string at = where + std::to_string(line_no) + ": ";
    const auto fields = split_on(line, '\t');
    if (fields.size() != 4) {
      problems.push_back(at + "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
      continue;
    }
    Item item{fields[0], fields[1], {}, std::vector<std::uint8_t>(space.tag_count(), 0)};
    if (item.id.empty() || item.track_id.empty()) problems.push_back(at + "empty id or track id");
    if (!seen_ids.insert(item.id).second) problems.push_back(at + "duplicate id '" + item.id + "'");

    const auto values = split_on(fields[2], ',');
    if (values.size() != feature_dim) {
      problems.push_back(at + "feature count " + std::to_string(values.size()) + " does not match width " +
                         std::to_string(feature_dim));
    } else {
      for (const auto& v : values) {
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) {
          problems.push_back(at + "bad feature value '" + v + "'");
          break;
        }
        item.features.push_back(x);
      }
    }

    if (fields[3].empty()) problems.push_back(at + "empty tag field");
    for (const auto& tag : split_on(fields[3], ';')) {
      if (fields[3].empty()) break;
      try {
        item.labels[space.tag_index(tag)] = 1;
      } catch (const ConfigError&) {
        problems.push_back(at + "unknown tag '" + tag + "'");
      }
    }
    items.push_back(std::move(item));
  }

  if (!problems.empty()) {
    std::string message = "invalid dataset file:";
    for (const auto& p : problems) message += "\n  " + p;
    throw ParseError(message);
  }
  if (items.empty()) throw DatasetError(where + " dataset has no rows");
  return Dataset(feature_dim, space.tag_count(), std::move(items));
}

}  // namespace disent
