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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "disent/errors.hpp"
#include "disent/experiment.hpp"

namespace disent {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("disent_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

json tiny_config(const fs::path& out) {
  return {{"label_space", {{"embedding_dim", 8}}},
          {"synthetic", {{"feature_dim", 16}, {"tracks", 40}, {"excerpts_per_track", 3}}},
          {"network", {{"hidden", {16}}}},
          {"training", {{"max_epochs", 2}}},
          {"evaluation", {{"triplets_per_notion", 50}}},
          {"output_dir", out.string()}};
}

TEST(Config, Defaults) {
  const auto config = parse_config(json::object());
  EXPECT_EQ(config.variants.size(), 8u);
  EXPECT_EQ(config.ks, (std::vector<std::size_t>{1, 2, 4, 8}));
  EXPECT_EQ(config.triplets_per_notion, 2000u);
  EXPECT_EQ(config.space.notion_count(), 4u);
  EXPECT_EQ(config.space.embedding_dim(), 128u);
  for (const auto& v : config.variants) {
    EXPECT_EQ(v.max_epochs, 300);
    EXPECT_EQ(v.learning_rate, 0.005);
    EXPECT_EQ(v.margin, 0.1);
  }
}

TEST(Config, OverridesAndRoundTrip) {
  json doc = tiny_config("x");
  doc["variants"] = {"proxy", {{"name", "classification"}, {"max_epochs", 7}},
                     {{"family", "triplet"}, {"disentanglement", true}, {"track_reg", true}}};
  doc["seed"] = 9;
  const auto config = parse_config(doc);
  ASSERT_EQ(config.variants.size(), 3u);
  EXPECT_EQ(config.variants[0].max_epochs, 2);
  EXPECT_EQ(config.variants[1].max_epochs, 7);
  EXPECT_FALSE(config.variants[1].normalization);
  EXPECT_EQ(config.variants[2].name, "triplet-dis-track");
  for (const auto& v : config.variants) EXPECT_EQ(v.seed, 9u);
  const auto again = parse_config(to_json(config));
  EXPECT_EQ(to_json(again), to_json(config));
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config({{"nope", 1}}), ConfigError);
  EXPECT_THROW(parse_config({{"variants", json::array()}}), ConfigError);
  EXPECT_THROW(parse_config({{"variants", {"proxy-track"}}}), ConfigError);
  EXPECT_THROW(parse_config({{"variants", {{{"family", "proxy"}, {"track_reg", true}}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"evaluation", {{"ks", {4, 2}}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"evaluation", {{"ks", {0, 2}}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"label_space", {{"embedding_dim", 10}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"synthetic", {{"tracks", -3}}}}), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Generate, FilesMatchManifestAndRerunIsByteIdentical) {
  const auto dir = fresh_dir("generate");
  auto config = parse_config(tiny_config(dir));
  cmd_generate(config);
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  std::size_t total = 0;
  for (const char* name : {"train", "valid", "test"}) {
    const auto data = load_dataset(dir / (std::string(name) + ".tsv"), config.space);
    EXPECT_EQ(manifest["counts"][name].get<std::size_t>(), data.size()) << name;
    total += data.size();
  }
  EXPECT_EQ(total, 40u * 3u);
  EXPECT_NEAR(manifest["counts"]["train"].get<double>(), 0.8 * 120, 3);

  const std::string first = slurp(dir / "train.tsv") + slurp(dir / "test.tsv") + slurp(dir / "manifest.json");
  cmd_generate(config);
  EXPECT_EQ(slurp(dir / "train.tsv") + slurp(dir / "test.tsv") + slurp(dir / "manifest.json"), first);
  fs::remove_all(dir);
}

TEST(Benchmark, SingleVariantHasUnitRatio) {
  auto doc = tiny_config(fresh_dir("single"));
  doc["variants"] = {"proxy"};
  const auto config = parse_config(doc);
  const auto result = run_benchmark(config, prepare_data(config));
  ASSERT_EQ(result.runs.size(), 1u);
  EXPECT_EQ(result.runs[0].report.training_time_ratio, 1.0);
}

TEST(Benchmark, ReportHasEveryVariantAndColumn) {
  const auto dir = fresh_dir("full");
  const auto config = parse_config(tiny_config(dir));
  const auto result = cmd_benchmark(config, false);
  ASSERT_EQ(result.runs.size(), 8u);
  const json report = json::parse(slurp(dir / "report.json"));
  ASSERT_EQ(report["variants"].size(), 8u);
  double min_ratio = 1e9;
  for (const auto& run : result.runs) {
    const auto& r = run.report;
    EXPECT_TRUE(r.error.empty()) << r.variant.name << ": " << r.error;
    EXPECT_EQ(r.recall_at.size(), 4u);
    double previous = 0;
    for (const auto& [k, v] : r.recall_at) {
      EXPECT_GE(v, previous);
      previous = v;
    }
    EXPECT_GT(r.auc, 0.0);
    EXPECT_TRUE(r.triplet_accuracy.count("overall/full"));
    EXPECT_TRUE(r.triplet_accuracy.count("track/full"));
    EXPECT_EQ(r.triplet_accuracy.count("overall/sub") == 1, r.variant.disentanglement);
    EXPECT_GE(r.training_time_ratio, 1.0);
    min_ratio = std::min(min_ratio, r.training_time_ratio);
    EXPECT_TRUE(report["wall_clock"].contains(r.variant.name));
  }
  EXPECT_EQ(min_ratio, 1.0);
  const std::string text = slurp(dir / "report.txt");
  for (const auto& run : result.runs) EXPECT_NE(text.find(run.report.variant.name), std::string::npos);
  EXPECT_NE(text.find("sub-space"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Benchmark, FailedVariantIsRecordedAndOthersContinue) {
  auto doc = tiny_config(fresh_dir("fail"));
  doc["variants"] = {"proxy", {{"name", "classification"}, {"learning_rate", 1e300}}, "triplet"};
  const auto config = parse_config(doc);
  const auto result = run_benchmark(config, prepare_data(config));
  ASSERT_EQ(result.runs.size(), 3u);
  EXPECT_TRUE(result.runs[0].report.error.empty());
  EXPECT_FALSE(result.runs[1].report.error.empty());
  EXPECT_TRUE(result.runs[2].report.error.empty());
  EXPECT_NE(render_tables(config.space, result).find("failed"), std::string::npos);
}

TEST(Benchmark, ReportsAreReproducibleModuloWallClock) {
  const auto dir = fresh_dir("determinism");
  const auto config = parse_config(tiny_config(dir));
  auto run = [&] {
    cmd_benchmark(config, false);
    json report = json::parse(slurp(dir / "report.json"));
    report.erase("wall_clock");
    return report.dump();
  };
  const std::string first = run();
  EXPECT_EQ(run(), first);
  fs::remove_all(dir);
}

TEST(Export, ColumnsAndRoundTrip) {
  const auto dir = fresh_dir("export");
  auto doc = tiny_config(dir);
  doc["variants"] = {"classification-norm-dis"};
  const auto config = parse_config(doc);
  cmd_generate(config);
  cmd_train(config, {});
  const auto model_path = dir / "model_classification-norm-dis.bin";
  ASSERT_TRUE(fs::exists(model_path));
  ASSERT_TRUE(fs::exists(dir / "loss_classification-norm-dis.csv"));
  const auto loaded = load_model(model_path);
  const auto test = load_dataset(dir / "test.tsv", config.space);

  for (const std::string space : {"full", "mood"}) {
    const auto out = dir / ("emb_" + space + ".tsv");
    cmd_export_embeddings(model_path, dir / "test.tsv", space, out);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    const std::size_t begin = space == "full" ? 0 : config.space.block_begin(config.space.notion_index("mood"));
    const std::size_t width = space == "full" ? 8 : 2;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ss, field, '\t')) fields.push_back(field);
      ASSERT_EQ(fields.size(), 2 + width);
      EXPECT_EQ(fields[0], test[row].id);
      const auto e = loaded.model.embed(test[row].features);
      for (std::size_t c = 0; c < width; ++c) EXPECT_LT(std::abs(std::stod(fields[2 + c]) - e.values[begin + c]), 1e-12);
      ++row;
    }
    EXPECT_EQ(row, test.size());
  }
  EXPECT_THROW(cmd_export_embeddings(model_path, dir / "test.tsv", "tempo", dir / "x.tsv"), ConfigError);

  cmd_evaluate(config, {model_path});
  const json eval = json::parse(slurp(dir / "eval_classification-norm-dis.json"));
  EXPECT_EQ(eval["variant"]["name"], "classification-norm-dis");
  EXPECT_TRUE(eval["triplet_accuracy"].contains("overall/sub"));
  EXPECT_THROW(cmd_train(config, {"proxy"}), ConfigError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace disent
