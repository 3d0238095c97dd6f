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
#include <optional>
#include <string>
#include <vector>

#include "disent/data.hpp"
#include "disent/evaluation.hpp"
#include "disent/labelspace.hpp"
#include "disent/model.hpp"
#include "disent/trainer.hpp"
#include "disent/variant.hpp"
#include "json.hpp"

namespace disent {

struct DatasetPaths {
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
};

// Everything a run needs; parsed from a JSON file (schema in README).
struct ExperimentConfig {
  LabelSpace space = default_label_space(128);
  SyntheticSpec synthetic;
  SplitFractions fractions = kDefaultFractions;
  std::optional<DatasetPaths> dataset;  // when set, files replace the synthetic data
  NetConfig network;                    // input_dim follows the data
  std::vector<VariantConfig> variants = standard_variants();
  std::vector<std::size_t> ks = {1, 2, 4, 8};
  std::size_t triplets_per_notion = 2000;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
};

// Throws ConfigError on schema violations. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const VariantConfig& variant);

// Replaces the training seed of every variant; evaluation draws from the same seed.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

struct PreparedData {
  Splits splits;
  std::size_t feature_dim = 0;
};

// Synthetic splits (or the configured files) for `config`.
PreparedData prepare_data(const ExperimentConfig& config);

// ---- variant runs ----

struct VariantRun {
  EvalReport report;
  std::vector<EpochRecord> curve;
};

struct BenchmarkResult {
  std::vector<VariantRun> runs;  // config order; failed variants carry report.error
};

// Trains and evaluates every configured variant, then fills the training time
// ratios. `parallel` runs variants on separate threads, which distorts timings.
BenchmarkResult run_benchmark(const ExperimentConfig& config, const PreparedData& data, bool parallel = false);

// Report JSON: deterministic fields per variant, wall-clock fields under a
// separate top-level "wall_clock" object.
nlohmann::json report_json(const ExperimentConfig& config, const BenchmarkResult& result);
nlohmann::json eval_report_json(const EvalReport& report);
// Aligned plain-text tables: retrieval/tagging, per-notion triplet accuracy,
// track triplet accuracy.
std::string render_tables(const LabelSpace& space, const BenchmarkResult& result);

// ---- subcommands; each writes into config.output_dir ----

// train.tsv, valid.tsv, test.tsv and manifest.json.
void cmd_generate(const ExperimentConfig& config);
// model_<variant>.bin and loss_<variant>.csv per selected variant (all when empty).
void cmd_train(const ExperimentConfig& config, const std::vector<std::string>& variant_names);
// eval_<variant>.json per model file, evaluated on the test split.
void cmd_evaluate(const ExperimentConfig& config, const std::vector<std::filesystem::path>& model_paths);
// report.json and report.txt.
BenchmarkResult cmd_benchmark(const ExperimentConfig& config, bool parallel);
// TSV: id, track_id, then the full embedding or one notion's block.
void cmd_export_embeddings(const std::filesystem::path& model_path, const std::filesystem::path& dataset_path,
                           const std::string& space, const std::filesystem::path& out_path);

}  // namespace disent
