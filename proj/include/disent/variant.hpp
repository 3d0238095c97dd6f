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
#include <optional>
#include <string>
#include <vector>

#include "disent/model.hpp"

namespace disent {

enum class Family { kTriplet, kProxy, kClassification };

const char* to_string(Family family);
Family family_from_string(const std::string& name);

// One row of the benchmark: learning family, structural flags and the
// optimization hyperparameters.
struct VariantConfig {
  std::string name;
  Family family = Family::kClassification;
  bool normalization = true;
  bool disentanglement = false;
  bool track_reg = false;
  double margin = 0.1;
  double learning_rate = 0.005;
  double track_weight = 1.0;
  std::size_t batch_size = 64;
  int max_epochs = 300;
  std::uint64_t seed = 1;
};

// Throws ConfigError unless the flags are one of the eight legal combinations:
// triplet (normalized; plain, disentangled, disentangled + track), proxy
// (normalized; plain or disentangled), classification (plain, normalized,
// normalized + disentangled).
void validate(const VariantConfig& variant);

// Canonical short name, e.g. "triplet-dis-track" or "classification-norm".
std::string canonical_name(const VariantConfig& variant);

HeadKind head_for(const VariantConfig& variant);
// Score formula of proxy/classification variants; nullopt for triplet ones.
std::optional<ScoreVariant> score_variant_for(const VariantConfig& variant);

// The eight variants in table order.
std::vector<VariantConfig> standard_variants();

}  // namespace disent
