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

#include "disent/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"

#include "disent/errors.hpp"

namespace disent {

namespace {

Linear make_linear(std::size_t in, std::size_t out) {
  return {parameter(Tensor({in, out})), parameter(Tensor({out}))};
}

Tensor rows_to_matrix(std::span<const double> x) { return Tensor::matrix(1, x.size(), {x.begin(), x.end()}); }

}  // namespace

const char* to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::kDense:
      return "dense";
    case HeadKind::kSubDense:
      return "sub-dense";
  }
  return "?";
}

const char* to_string(ScoreVariant variant) {
  switch (variant) {
    case ScoreVariant::kProxy:
      return "proxy";
    case ScoreVariant::kProxyDisentangled:
      return "proxy-disentangled";
    case ScoreVariant::kClassificationPlain:
      return "classification-plain";
    case ScoreVariant::kClassificationNormalized:
      return "classification-normalized";
    case ScoreVariant::kClassificationDisentangled:
      return "classification-disentangled";
  }
  return "?";
}

Model::Model(LabelSpace space, NetConfig config) : space_(std::move(space)), config_(std::move(config)) {
  if (config_.input_dim == 0) throw ConfigError("network input width must be positive");
  std::size_t width = config_.input_dim;
  for (std::size_t h : config_.hidden) {
    if (h == 0) throw ConfigError("hidden layer width must be positive");
    backbone_.push_back(make_linear(width, h));
    width = h;
  }
  const std::size_t d = space_.embedding_dim();
  const std::size_t groups = space_.notion_count();
  const std::size_t sub = space_.subspace_dim();
  const std::size_t tags = space_.tag_count();
  if (config_.head == HeadKind::kDense) {
    head_.push_back(make_linear(width, d));
  } else {
    for (std::size_t s = 0; s < groups; ++s) head_.push_back(make_linear(width, sub));
  }
  centroids_ = parameter(Tensor({d, tags}));

  auto masks = space_.build_masks();
  for (std::size_t s = 0; s < groups; ++s) {
    masks_.push_back(constant(Tensor::vector(masks[s].values)));

    const auto& notion_tags = space_.tags_of(s);
    Tensor centroid_mask({d, tags});
    for (std::size_t r = space_.block_begin(s); r < space_.block_begin(s) + sub; ++r) {
      for (std::size_t t : notion_tags) centroid_mask.at(r, t) = 1.0;
    }
    centroid_masks_.push_back(constant(std::move(centroid_mask)));

    Tensor placement({sub, d});
    for (std::size_t i = 0; i < sub; ++i) placement.at(i, space_.block_begin(s) + i) = 1.0;
    placements_.push_back(constant(std::move(placement)));

    Tensor select({tags, notion_tags.size()});
    Tensor scatter({notion_tags.size(), tags});
    for (std::size_t j = 0; j < notion_tags.size(); ++j) {
      select.at(notion_tags[j], j) = 1.0;
      scatter.at(j, notion_tags[j]) = 1.0;
    }
    tag_selectors_.push_back(constant(std::move(select)));
    tag_scatters_.push_back(constant(std::move(scatter)));
  }
}

Model Model::clone() const {
  Model copy(space_, config_);
  copy.restore(snapshot());
  return copy;
}

void Model::init_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Var& v, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& x : v.mutable_value().values()) x = dist(rng);
  };
  for (auto* layers : {&backbone_, &head_}) {
    for (auto& layer : *layers) {
      const std::size_t fan_in = layer.weight.value().rows();
      fill(layer.weight, fan_in);
      fill(layer.bias, fan_in);
    }
  }
  fill(centroids_, space_.embedding_dim());
}

std::vector<Var> Model::parameters() const {
  std::vector<Var> out;
  for (const auto* layers : {&backbone_, &head_}) {
    for (const auto& layer : *layers) {
      out.push_back(layer.weight);
      out.push_back(layer.bias);
    }
  }
  out.push_back(centroids_);
  return out;
}

std::vector<Tensor> Model::snapshot() const {
  std::vector<Tensor> out;
  for (const auto& p : parameters()) out.push_back(p.value());
  return out;
}

void Model::restore(std::span<const Tensor> values) {
  auto params = parameters();
  if (values.size() != params.size()) throw ContractViolation("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!values[i].same_shape(params[i].value())) throw ContractViolation("restore: parameter shape mismatch");
    params[i].mutable_value() = values[i];
  }
}

Var Model::backbone(const Var& x) const {
  if (x.value().rank() != 2 || x.value().cols() != config_.input_dim) {
    throw ContractViolation("input of shape " + shape_string(x.shape()) + " for a network of input width " +
                            std::to_string(config_.input_dim));
  }
  Var h = x;
  for (const auto& layer : backbone_) h = relu(add(matmul(h, layer.weight), layer.bias));
  return h;
}

Var Model::sub_head(const Var& hidden, std::size_t notion) const {
  if (config_.head != HeadKind::kSubDense) throw ConfigError("sub_head() needs a sub-dense head");
  const auto& layer = head_.at(notion);
  return relu(add(matmul(hidden, layer.weight), layer.bias));
}

Var Model::forward(const Var& x) const {
  Var h = backbone(x);
  if (config_.head == HeadKind::kDense) {
    return relu(add(matmul(h, head_[0].weight), head_[0].bias));
  }
  Var out;
  for (std::size_t s = 0; s < head_.size(); ++s) {
    Var placed = matmul(sub_head(h, s), placements_[s]);
    out = out.valid() ? add(out, placed) : placed;
  }
  return out;
}

void Model::check_variant(ScoreVariant variant) const {
  if (variant == ScoreVariant::kClassificationDisentangled && config_.head != HeadKind::kSubDense) {
    throw ConfigError("classification-disentangled scores need a sub-dense head");
  }
}

Var Model::logits(const Var& x, ScoreVariant variant) const {
  check_variant(variant);
  switch (variant) {
    case ScoreVariant::kClassificationPlain:
      return matmul(forward(x), centroids_);
    case ScoreVariant::kProxy:
    case ScoreVariant::kClassificationNormalized:
      return matmul(l2_normalize(forward(x)), centroids_);
    case ScoreVariant::kProxyDisentangled: {
      Var e = forward(x);
      Var out;
      for (std::size_t s = 0; s < masks_.size(); ++s) {
        Var part = matmul(l2_normalize(mul(e, masks_[s])), mul(centroids_, centroid_masks_[s]));
        out = out.valid() ? add(out, part) : part;
      }
      return out;
    }
    case ScoreVariant::kClassificationDisentangled: {
      Var h = backbone(x);
      Var out;
      for (std::size_t s = 0; s < head_.size(); ++s) {
        // Centroid coordinates of block s for the tags of notion s: [d/G, T_s].
        Var block_centroids = matmul(matmul(placements_[s], centroids_), tag_selectors_[s]);
        Var part = matmul(matmul(l2_normalize(sub_head(h, s)), block_centroids), tag_scatters_[s]);
        out = out.valid() ? add(out, part) : part;
      }
      return out;
    }
  }
  throw ContractViolation("unknown score variant");
}

Embedding Model::embed(std::span<const double> x) const {
  Tensor raw = embed_batch(rows_to_matrix(x));
  Embedding out{{raw.values().begin(), raw.values().end()}, false};
  if (!config_.normalize_output) return out;
  double sq = 0;
  for (double v : out.values) sq += v * v;
  const double norm = std::sqrt(sq);
  out.degenerate = norm <= kNormFloor;
  for (double& v : out.values) v /= std::max(norm, kNormFloor);
  return out;
}

Tensor Model::embed_batch(const Tensor& x) const { return forward(constant(x)).value(); }

std::vector<double> Model::masked_embed(std::span<const double> x, const std::string& notion) const {
  const std::size_t s = space_.notion_index(notion);
  Tensor raw = embed_batch(rows_to_matrix(x));
  std::vector<double> out(raw.values().begin(), raw.values().end());
  const auto& m = masks_[s].value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
  return out;
}

std::vector<double> Model::class_scores(std::span<const double> x, ScoreVariant variant) const {
  Tensor out = class_scores_batch(rows_to_matrix(x), variant);
  return {out.values().begin(), out.values().end()};
}

Tensor Model::class_scores_batch(const Tensor& x, ScoreVariant variant) const {
  return scores(constant(x), variant).value();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'D', 'S', 'N', 'T', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  value = to_little_endian(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ParseError(path.string() + ": truncated model file");
  return to_little_endian(value);
}

nlohmann::json architecture_json(const Model& model) {
  nlohmann::json notions = nlohmann::json::array();
  for (const auto& n : model.space().notions()) notions.push_back({{"name", n.name}, {"tags", n.tags}});
  return {
      {"input_dim", model.config().input_dim},
      {"hidden", model.config().hidden},
      {"head", to_string(model.config().head)},
      {"normalize_output", model.config().normalize_output},
      {"embedding_dim", model.embedding_dim()},
      {"notions", notions},
  };
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model, const std::string& extra_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  nlohmann::json meta = {{"architecture", architecture_json(model)}, {"extra", nlohmann::json::parse(extra_json)}};
  const std::string meta_text = meta.dump();
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
  out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
  const auto params = model.parameters();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.value().rank()));
    for (auto extent : p.shape()) write_pod<std::uint64_t>(out, extent);
  }
  for (const auto& p : params) {
    for (double v : p.value().values()) write_pod<double>(out, v);
  }
  if (!out) throw Error("failed writing model file " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not a model file");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) throw ParseError(path.string() + ": unsupported model version " + std::to_string(version));
  const auto meta_size = read_pod<std::uint32_t>(in, path);
  std::string meta_text(meta_size, '\0');
  if (!in.read(meta_text.data(), meta_size)) throw ParseError(path.string() + ": truncated metadata");

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad metadata: " + e.what());
  }
  const auto& arch = meta.at("architecture");
  std::vector<Notion> notions;
  for (const auto& n : arch.at("notions")) {
    notions.push_back({n.at("name").get<std::string>(), n.at("tags").get<std::vector<std::string>>()});
  }
  NetConfig config;
  config.input_dim = arch.at("input_dim").get<std::size_t>();
  config.hidden = arch.at("hidden").get<std::vector<std::size_t>>();
  config.head = arch.at("head").get<std::string>() == "sub-dense" ? HeadKind::kSubDense : HeadKind::kDense;
  config.normalize_output = arch.at("normalize_output").get<bool>();
  Model model(LabelSpace(std::move(notions), arch.at("embedding_dim").get<std::size_t>()), config);

  const auto count = read_pod<std::uint32_t>(in, path);
  auto params = model.parameters();
  if (count != params.size()) throw ParseError(path.string() + ": parameter count does not match architecture");
  for (const auto& p : params) {
    const auto rank = read_pod<std::uint32_t>(in, path);
    std::vector<std::size_t> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(read_pod<std::uint64_t>(in, path));
    if (shape != p.shape()) throw ParseError(path.string() + ": parameter shape does not match architecture");
  }
  for (auto& p : params) {
    for (double& v : p.mutable_value().values()) v = read_pod<double>(in, path);
  }
  return {std::move(model), meta.at("extra").dump()};
}

}  // namespace disent
