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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "disent/autograd.hpp"
#include "disent/labelspace.hpp"

namespace disent {

enum class HeadKind {
  kDense,     // one layer of width d, optionally masked per notion
  kSubDense,  // one layer of width d/G per notion, concatenated in notion order
};

// How per-tag scores are computed from an embedding.
enum class ScoreVariant {
  kProxy,                      // sigmoid(f/|f| . p)
  kProxyDisentangled,          // sigmoid((f∘m)/|f∘m| . (p∘m))
  kClassificationPlain,        // sigmoid(f . c)
  kClassificationNormalized,   // sigmoid(f/|f| . c)
  kClassificationDisentangled  // sigmoid(h_s/|h_s| . c restricted to block s)
};

const char* to_string(HeadKind kind);
const char* to_string(ScoreVariant variant);

struct NetConfig {
  std::size_t input_dim = 64;
  std::vector<std::size_t> hidden = {128, 128};
  HeadKind head = HeadKind::kDense;
  bool normalize_output = true;
};

struct Linear {
  Var weight;  // [in, out]
  Var bias;    // [out]
};

struct Embedding {
  std::vector<double> values;
  // Set when the pre-normalization output was zero; values are then all zero.
  bool degenerate = false;
};

// Feed-forward embedding network plus the per-tag centroid bank.
//
// The backbone is a stack of relu(x W + b) layers producing f_{n-1}(x). The
// head is relu(f_{n-1} W_h + b_h), either as a single dense layer of width d
// or as one sub-dense layer per notion. The centroid bank holds one length-d
// column per tag (no bias); it serves as proxies or classifier weights.
class Model {
 public:
  Model(LabelSpace space, NetConfig config);
  // Copies would alias the parameter nodes; use clone() for an independent copy.
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  Model clone() const;

  const LabelSpace& space() const { return space_; }
  const NetConfig& config() const { return config_; }
  std::size_t embedding_dim() const { return space_.embedding_dim(); }

  // Deterministic uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization of
  // every weight, bias and centroid.
  void init_params(std::uint64_t seed);

  // Trainable tensors in a fixed order: backbone layers, head layers, bank.
  std::vector<Var> parameters() const;
  std::vector<Tensor> snapshot() const;
  void restore(std::span<const Tensor> values);

  const std::vector<Linear>& backbone_layers() const { return backbone_; }
  const std::vector<Linear>& head_layers() const { return head_; }
  // [d, T]; column t is the proxy / centroid of global tag t.
  const Var& centroids() const { return centroids_; }

  // ---- graph builders; `x` is [B, input_dim] ----
  Var backbone(const Var& x) const;
  // Output of notion `notion`'s sub-dense layer, [B, d/G]. Sub-dense head only.
  Var sub_head(const Var& hidden, std::size_t notion) const;
  // Full pre-normalization embedding f(x), [B, d].
  Var forward(const Var& x) const;
  // Pre-sigmoid per-tag scores, [B, T].
  Var logits(const Var& x, ScoreVariant variant) const;
  Var scores(const Var& x, ScoreVariant variant) const { return sigmoid(logits(x, variant)); }
  // Constant [d] mask of notion `notion`.
  const Var& mask(std::size_t notion) const { return masks_[notion]; }

  // ---- tensor-level evaluation helpers ----
  Embedding embed(std::span<const double> x) const;
  // Rows are pre-normalization embeddings.
  Tensor embed_batch(const Tensor& x) const;
  // f(x) ∘ m_s, pre-normalization.
  std::vector<double> masked_embed(std::span<const double> x, const std::string& notion) const;
  std::vector<double> class_scores(std::span<const double> x, ScoreVariant variant) const;
  Tensor class_scores_batch(const Tensor& x, ScoreVariant variant) const;

  // Throws ConfigError when `variant` cannot be evaluated on this head.
  void check_variant(ScoreVariant variant) const;

 private:
  LabelSpace space_;
  NetConfig config_;
  std::vector<Linear> backbone_;
  std::vector<Linear> head_;  // one layer (dense) or G layers (sub-dense)
  Var centroids_;
  std::vector<Var> masks_;           // [d] per notion
  std::vector<Var> centroid_masks_;  // [d, T] per notion: block rows x notion tag columns
  std::vector<Var> placements_;      // [d/G, d] per notion: block identity
  std::vector<Var> tag_selectors_;   // [T, T_s] per notion
  std::vector<Var> tag_scatters_;    // [T_s, T] per notion
};

// Flat binary parameter file: magic, version, architecture metadata (JSON),
// tensor shapes, then row-major little-endian float64 values.
void save_model(const std::filesystem::path& path, const Model& model, const std::string& extra_json = "{}");

struct LoadedModel {
  Model model;
  std::string extra_json;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace disent
