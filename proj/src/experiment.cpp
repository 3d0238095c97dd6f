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

#include "disent/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>

#include "disent/errors.hpp"
#include "disent/log.hpp"
#include "disent/random.hpp"

namespace disent {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
void read_positive(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number() || v.get<double>() <= 0) throw ConfigError(where + "." + key + ": must be a positive number");
  out = v.get<T>();
}

LabelSpace parse_space(const json& doc) {
  check_keys(doc, {"embedding_dim", "notions"}, "label_space");
  std::size_t dim = 128;
  read_positive(doc, "embedding_dim", dim, "label_space");
  if (!doc.contains("notions")) return default_label_space(dim);
  std::vector<Notion> notions;
  for (const auto& n : doc.at("notions")) {
    check_keys(n, {"name", "tags"}, "label_space.notions[]");
    Notion notion;
    read(n, "name", notion.name, "label_space.notions[]");
    read(n, "tags", notion.tags, "label_space.notions[]");
    notions.push_back(std::move(notion));
  }
  return LabelSpace(std::move(notions), dim);
}

json space_json(const LabelSpace& space) {
  json notions = json::array();
  for (const auto& n : space.notions()) notions.push_back({{"name", n.name}, {"tags", n.tags}});
  return {{"embedding_dim", space.embedding_dim()}, {"notions", notions}};
}

SyntheticSpec parse_synthetic(const json& doc) {
  const std::string where = "synthetic";
  check_keys(doc,
             {"feature_dim", "tracks", "excerpts_per_track", "min_tags_per_notion", "max_tags_per_notion",
              "centroid_scale", "sigma_within", "sigma_excerpt", "seed"},
             where);
  SyntheticSpec s;
  read_positive(doc, "feature_dim", s.feature_dim, where);
  read_positive(doc, "tracks", s.tracks, where);
  read_positive(doc, "excerpts_per_track", s.excerpts_per_track, where);
  read_positive(doc, "min_tags_per_notion", s.min_tags_per_notion, where);
  read_positive(doc, "max_tags_per_notion", s.max_tags_per_notion, where);
  read(doc, "centroid_scale", s.centroid_scale, where);
  read(doc, "sigma_within", s.sigma_within, where);
  read(doc, "sigma_excerpt", s.sigma_excerpt, where);
  read(doc, "seed", s.seed, where);
  return s;
}

json synthetic_json(const SyntheticSpec& s) {
  return {{"feature_dim", s.feature_dim},
          {"tracks", s.tracks},
          {"excerpts_per_track", s.excerpts_per_track},
          {"min_tags_per_notion", s.min_tags_per_notion},
          {"max_tags_per_notion", s.max_tags_per_notion},
          {"centroid_scale", s.centroid_scale},
          {"sigma_within", s.sigma_within},
          {"sigma_excerpt", s.sigma_excerpt},
          {"seed", s.seed}};
}

const std::set<std::string> kTrainingKeys = {"margin", "learning_rate", "track_weight", "batch_size", "max_epochs"};

void read_training(const json& doc, VariantConfig& v, const std::string& where) {
  read(doc, "margin", v.margin, where);
  read(doc, "learning_rate", v.learning_rate, where);
  read(doc, "track_weight", v.track_weight, where);
  read(doc, "batch_size", v.batch_size, where);
  read(doc, "max_epochs", v.max_epochs, where);
}

json variant_json(const VariantConfig& v) {
  return {{"name", v.name},
          {"family", to_string(v.family)},
          {"normalization", v.normalization},
          {"disentanglement", v.disentanglement},
          {"track_reg", v.track_reg},
          {"margin", v.margin},
          {"learning_rate", v.learning_rate},
          {"track_weight", v.track_weight},
          {"batch_size", v.batch_size},
          {"max_epochs", v.max_epochs},
          {"seed", v.seed}};
}

VariantConfig standard_variant(const std::string& name) {
  for (auto v : standard_variants()) {
    if (v.name == name) return v;
  }
  throw ConfigError("unknown variant '" + name + "'");
}

VariantConfig parse_variant(const json& doc, const VariantConfig& defaults) {
  if (doc.is_string()) {
    VariantConfig v = standard_variant(doc.get<std::string>());
    v.margin = defaults.margin;
    v.learning_rate = defaults.learning_rate;
    v.track_weight = defaults.track_weight;
    v.batch_size = defaults.batch_size;
    v.max_epochs = defaults.max_epochs;
    v.seed = defaults.seed;
    return parse_variant(variant_json(v), v);
  }
  std::set<std::string> allowed = kTrainingKeys;
  allowed.insert({"name", "family", "normalization", "disentanglement", "track_reg", "seed"});
  check_keys(doc, allowed, "variants[]");
  VariantConfig v = defaults;
  if (doc.contains("name") && !doc.contains("family")) {
    const auto base = standard_variant(doc.at("name").get<std::string>());
    v.family = base.family;
    v.normalization = base.normalization;
    v.disentanglement = base.disentanglement;
    v.track_reg = base.track_reg;
  }
  if (doc.contains("family")) {
    std::string family;
    read(doc, "family", family, "variants[]");
    v.family = family_from_string(family);
  }
  read(doc, "normalization", v.normalization, "variants[]");
  read(doc, "disentanglement", v.disentanglement, "variants[]");
  read(doc, "track_reg", v.track_reg, "variants[]");
  read_training(doc, v, "variants[]");
  read(doc, "seed", v.seed, "variants[]");
  v.name = canonical_name(v);
  read(doc, "name", v.name, "variants[]");
  validate(v);
  return v;
}

VariantConfig variant_from_json(const json& doc) { return parse_variant(doc, VariantConfig{}); }

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

NetConfig network_for(const ExperimentConfig& config, std::size_t feature_dim) {
  NetConfig net = config.network;
  net.input_dim = feature_dim;
  return net;
}

EvalOptions eval_options(const ExperimentConfig& config) {
  EvalOptions options;
  options.ks = config.ks;
  options.triplets_per_notion = config.triplets_per_notion;
  options.seed = derive_seed(config.seed, 200);
  return options;
}

VariantRun run_variant(const ExperimentConfig& config, const PreparedData& data, const VariantConfig& variant) {
  VariantRun run;
  run.report.variant = variant;
  try {
    auto trained = train(variant, config.space, data.splits.train, data.splits.valid,
                         network_for(config, data.feature_dim));
    run.report = evaluate_model(trained.model, variant, data.splits.train, data.splits.test, eval_options(config));
    run.report.epochs = trained.epochs;
    run.report.train_seconds = trained.train_seconds;
    run.curve = std::move(trained.curve);
  } catch (const std::exception& e) {
    run.report.error = e.what();
    log_warning("variant '" + variant.name + "' failed: " + e.what());
  }
  return run;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc,
             {"label_space", "synthetic", "split", "dataset", "network", "training", "variants", "evaluation",
              "output_dir", "seed"},
             "config");
  ExperimentConfig config;
  if (doc.contains("label_space")) config.space = parse_space(doc.at("label_space"));
  if (doc.contains("synthetic")) config.synthetic = parse_synthetic(doc.at("synthetic"));
  if (doc.contains("split")) {
    std::vector<double> f;
    read(doc, "split", f, "config");
    if (f.size() != 3) throw ConfigError("config.split: expected three fractions");
    config.fractions = {f[0], f[1], f[2]};
  }
  if (doc.contains("dataset")) {
    const auto& d = doc.at("dataset");
    check_keys(d, {"train", "valid", "test"}, "dataset");
    DatasetPaths paths;
    std::string train, valid, test;
    read(d, "train", train, "dataset");
    read(d, "valid", valid, "dataset");
    read(d, "test", test, "dataset");
    if (train.empty() || valid.empty() || test.empty()) throw ConfigError("dataset: train, valid and test paths required");
    config.dataset = DatasetPaths{train, valid, test};
  }
  if (doc.contains("network")) {
    check_keys(doc.at("network"), {"hidden"}, "network");
    read(doc.at("network"), "hidden", config.network.hidden, "network");
    for (auto h : config.network.hidden) {
      if (h == 0) throw ConfigError("network.hidden: widths must be positive");
    }
  }
  read(doc, "seed", config.seed, "config");

  VariantConfig defaults;
  defaults.seed = config.seed;
  if (doc.contains("training")) {
    check_keys(doc.at("training"), kTrainingKeys, "training");
    read_training(doc.at("training"), defaults, "training");
  }
  if (doc.contains("variants")) {
    config.variants.clear();
    for (const auto& v : doc.at("variants")) config.variants.push_back(parse_variant(v, defaults));
  } else {
    for (auto& v : config.variants) v = parse_variant(json(v.name), defaults);
  }
  if (config.variants.empty()) throw ConfigError("config.variants: at least one variant required");

  if (doc.contains("evaluation")) {
    const auto& e = doc.at("evaluation");
    check_keys(e, {"ks", "triplets_per_notion"}, "evaluation");
    read(e, "ks", config.ks, "evaluation");
    read(e, "triplets_per_notion", config.triplets_per_notion, "evaluation");
  }
  if (config.ks.empty()) throw ConfigError("evaluation.ks: at least one K required");
  for (std::size_t i = 0; i < config.ks.size(); ++i) {
    if (config.ks[i] == 0 || (i > 0 && config.ks[i] <= config.ks[i - 1])) {
      throw ConfigError("evaluation.ks: K values must be positive and ascending");
    }
  }
  std::string out = config.output_dir.string();
  read(doc, "output_dir", out, "config");
  config.output_dir = out;
  return config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& config) {
  json variants = json::array();
  for (const auto& v : config.variants) variants.push_back(variant_json(v));
  json doc = {{"label_space", space_json(config.space)},
              {"synthetic", synthetic_json(config.synthetic)},
              {"split", {config.fractions[0], config.fractions[1], config.fractions[2]}},
              {"network", {{"hidden", config.network.hidden}}},
              {"variants", variants},
              {"evaluation", {{"ks", config.ks}, {"triplets_per_notion", config.triplets_per_notion}}},
              {"output_dir", config.output_dir.string()},
              {"seed", config.seed}};
  if (config.dataset) {
    doc["dataset"] = {{"train", config.dataset->train.string()},
                      {"valid", config.dataset->valid.string()},
                      {"test", config.dataset->test.string()}};
  }
  return doc;
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  for (auto& v : config.variants) v.seed = seed;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  if (config.dataset) {
    Splits splits{load_dataset(config.dataset->train, config.space), load_dataset(config.dataset->valid, config.space),
                  load_dataset(config.dataset->test, config.space)};
    if (splits.valid.feature_dim() != splits.train.feature_dim() ||
        splits.test.feature_dim() != splits.train.feature_dim()) {
      throw DatasetError("dataset files disagree on the feature width");
    }
    const std::size_t dim = splits.train.feature_dim();
    return {std::move(splits), dim};
  }
  return {generate_splits(config.space, config.synthetic, config.fractions), config.synthetic.feature_dim};
}

BenchmarkResult run_benchmark(const ExperimentConfig& config, const PreparedData& data, bool parallel) {
  BenchmarkResult result;
  if (parallel) {
    std::vector<std::future<VariantRun>> futures;
    for (const auto& v : config.variants) {
      futures.push_back(std::async(std::launch::async, [&config, &data, v] { return run_variant(config, data, v); }));
    }
    for (auto& f : futures) result.runs.push_back(f.get());
  } else {
    for (const auto& v : config.variants) result.runs.push_back(run_variant(config, data, v));
  }

  std::map<std::string, double> seconds;
  for (const auto& run : result.runs) {
    if (run.report.error.empty() && run.report.train_seconds > 0) {
      seconds[run.report.variant.name] = run.report.train_seconds;
    }
  }
  if (!seconds.empty()) {
    const auto ratios = training_time_ratio(seconds);
    for (auto& run : result.runs) {
      auto it = ratios.find(run.report.variant.name);
      if (it != ratios.end()) run.report.training_time_ratio = it->second;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_generate(const ExperimentConfig& config) {
  if (config.dataset) throw ConfigError("generate needs a synthetic spec, not dataset files");
  ensure_dir(config.output_dir);
  const auto data = prepare_data(config);
  const fs::path dir = config.output_dir;
  write_dataset(dir / "train.tsv", data.splits.train, config.space);
  write_dataset(dir / "valid.tsv", data.splits.valid, config.space);
  write_dataset(dir / "test.tsv", data.splits.test, config.space);
  const Dataset full = generate_synthetic(config.space, config.synthetic);
  json manifest = {
      {"seed", config.synthetic.seed},
      {"synthetic", synthetic_json(config.synthetic)},
      {"label_space", space_json(config.space)},
      {"split", {config.fractions[0], config.fractions[1], config.fractions[2]}},
      {"files", {{"train", "train.tsv"}, {"valid", "valid.tsv"}, {"test", "test.tsv"}}},
      {"counts",
       {{"train", data.splits.train.size()}, {"valid", data.splits.valid.size()}, {"test", data.splits.test.size()}}},
      {"decoder_recovery", decoder_recovery(config.space, config.synthetic, full)}};
  write_json(dir / "manifest.json", manifest);
  log_info("wrote " + std::to_string(data.splits.train.size() + data.splits.valid.size() + data.splits.test.size()) +
           " items to " + dir.string());
}

void cmd_train(const ExperimentConfig& config, const std::vector<std::string>& variant_names) {
  std::vector<VariantConfig> selected;
  for (const auto& v : config.variants) {
    if (variant_names.empty() || std::find(variant_names.begin(), variant_names.end(), v.name) != variant_names.end()) {
      selected.push_back(v);
    }
  }
  for (const auto& name : variant_names) {
    if (std::none_of(selected.begin(), selected.end(), [&](const VariantConfig& v) { return v.name == name; })) {
      throw ConfigError("variant '" + name + "' is not in the config");
    }
  }
  ensure_dir(config.output_dir);
  const auto data = prepare_data(config);
  for (const auto& variant : selected) {
    auto trained =
        train(variant, config.space, data.splits.train, data.splits.valid, network_for(config, data.feature_dim));
    const json extra = {{"variant", variant_json(variant)}, {"epochs", trained.epochs},
                        {"best_epoch", trained.best_epoch}};
    save_model(config.output_dir / ("model_" + variant.name + ".bin"), trained.model, extra.dump());
    write_loss_curve(config.output_dir / ("loss_" + variant.name + ".csv"), trained.curve);
  }
}

void cmd_evaluate(const ExperimentConfig& config, const std::vector<fs::path>& model_paths) {
  if (model_paths.empty()) throw ConfigError("evaluate needs at least one model file");
  ensure_dir(config.output_dir);
  const auto data = prepare_data(config);
  for (const auto& path : model_paths) {
    auto loaded = load_model(path);
    const json extra = json::parse(loaded.extra_json);
    if (!extra.contains("variant")) throw ConfigError(path.string() + " does not record its variant");
    const VariantConfig variant = variant_from_json(extra.at("variant"));
    if (!(loaded.model.space() == config.space)) {
      throw ConfigError(path.string() + " was trained on a different label space");
    }
    auto report = evaluate_model(loaded.model, variant, data.splits.train, data.splits.test, eval_options(config));
    report.epochs = extra.value("epochs", 0);
    write_json(config.output_dir / ("eval_" + variant.name + ".json"), eval_report_json(report));
  }
}

BenchmarkResult cmd_benchmark(const ExperimentConfig& config, bool parallel) {
  if (parallel) log_warning("--parallel runs variants concurrently; the training time ratios are distorted");
  ensure_dir(config.output_dir);
  const auto data = prepare_data(config);
  auto result = run_benchmark(config, data, parallel);
  write_json(config.output_dir / "report.json", report_json(config, result));
  std::ofstream text(config.output_dir / "report.txt");
  text << render_tables(config.space, result);
  if (!text) throw Error("cannot write " + (config.output_dir / "report.txt").string());
  return result;
}

void cmd_export_embeddings(const fs::path& model_path, const fs::path& dataset_path, const std::string& space,
                           const fs::path& out_path) {
  const auto loaded = load_model(model_path);
  const Model& model = loaded.model;
  std::size_t begin = 0, width = model.embedding_dim();
  if (space != "full") {
    const std::size_t notion = model.space().notion_index(space);
    begin = model.space().block_begin(notion);
    width = model.space().subspace_dim();
  }
  const Dataset data = load_dataset(dataset_path, model.space());
  if (data.feature_dim() != model.config().input_dim) {
    throw DatasetError("dataset feature width " + std::to_string(data.feature_dim()) + " does not match the model's " +
                       std::to_string(model.config().input_dim));
  }
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write " + out_path.string());
  out << "id\ttrack_id";
  for (std::size_t c = 0; c < width; ++c) out << "\te" << begin + c;
  out << "\n";
  char buf[32];
  for (const auto& item : data.items()) {
    const auto e = model.embed(item.features);
    out << item.id << "\t" << item.track_id;
    for (std::size_t c = 0; c < width; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.values[begin + c]);
      out << "\t" << buf;
    }
    out << "\n";
  }
  if (!out) throw Error("failed writing " + out_path.string());
}

json to_json(const VariantConfig& variant) { return variant_json(variant); }

}  // namespace disent
