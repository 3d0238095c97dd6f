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

#include "disent/variant.hpp"

#include "disent/errors.hpp"

namespace disent {

const char* to_string(Family family) {
  switch (family) {
    case Family::kTriplet:
      return "triplet";
    case Family::kProxy:
      return "proxy";
    case Family::kClassification:
      return "classification";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  if (name == "triplet") return Family::kTriplet;
  if (name == "proxy") return Family::kProxy;
  if (name == "classification") return Family::kClassification;
  throw ConfigError("unknown learning family '" + name + "'");
}

void validate(const VariantConfig& v) {
  const std::string who = "variant '" + (v.name.empty() ? canonical_name(v) : v.name) + "': ";
  if (v.track_reg && (v.family != Family::kTriplet || !v.disentanglement)) {
    throw ConfigError(who + "track regularization needs the disentangled triplet family");
  }
  if (v.family != Family::kClassification && !v.normalization) {
    throw ConfigError(who + std::string(to_string(v.family)) + " models always normalize the embedding");
  }
  if (v.family == Family::kClassification && v.disentanglement && !v.normalization) {
    throw ConfigError(who + "disentangled classification requires normalization");
  }
  if (!(v.margin >= 0)) throw ConfigError(who + "margin must be non-negative");
  if (!(v.learning_rate > 0)) throw ConfigError(who + "learning rate must be positive");
  if (!(v.track_weight >= 0)) throw ConfigError(who + "track weight must be non-negative");
  if (v.batch_size == 0) throw ConfigError(who + "batch size must be at least 1");
  if (v.max_epochs < 0) throw ConfigError(who + "max epochs must be non-negative");
}

std::string canonical_name(const VariantConfig& v) {
  std::string name = to_string(v.family);
  if (v.family == Family::kClassification && v.normalization) name += "-norm";
  if (v.disentanglement) name += "-dis";
  if (v.track_reg) name += "-track";
  return name;
}

HeadKind head_for(const VariantConfig& v) {
  return v.family == Family::kClassification && v.disentanglement ? HeadKind::kSubDense : HeadKind::kDense;
}

std::optional<ScoreVariant> score_variant_for(const VariantConfig& v) {
  switch (v.family) {
    case Family::kTriplet:
      return std::nullopt;
    case Family::kProxy:
      return v.disentanglement ? ScoreVariant::kProxyDisentangled : ScoreVariant::kProxy;
    case Family::kClassification:
      if (v.disentanglement) return ScoreVariant::kClassificationDisentangled;
      return v.normalization ? ScoreVariant::kClassificationNormalized : ScoreVariant::kClassificationPlain;
  }
  return std::nullopt;
}

std::vector<VariantConfig> standard_variants() {
  auto make = [](Family family, bool norm, bool dis, bool track) {
    VariantConfig v;
    v.family = family;
    v.normalization = norm;
    v.disentanglement = dis;
    v.track_reg = track;
    v.name = canonical_name(v);
    return v;
  };
  return {
      make(Family::kTriplet, true, false, false),        make(Family::kTriplet, true, true, false),
      make(Family::kTriplet, true, true, true),          make(Family::kProxy, true, false, false),
      make(Family::kProxy, true, true, false),           make(Family::kClassification, false, false, false),
      make(Family::kClassification, true, false, false), make(Family::kClassification, true, true, false),
  };
}

}  // namespace disent
