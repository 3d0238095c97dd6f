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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "disent/errors.hpp"
#include "disent/experiment.hpp"
#include "disent/log.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", options.seed, "Global seed");
  cmd->add_option("--out", options.out, "Output directory");
}

disent::ExperimentConfig resolve(const CommonOptions& options, bool seed_is_data_seed = false) {
  disent::ExperimentConfig config = options.config.empty() ? disent::parse_config(nlohmann::json::object())
                                                           : disent::load_config(options.config);
  if (options.seed) {
    if (seed_is_data_seed) {
      config.synthetic.seed = *options.seed;
    } else {
      disent::apply_seed(config, *options.seed);
    }
  }
  if (!options.out.empty()) config.output_dir = options.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric learning, classification and disentangled embeddings on multi-label data"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  CommonOptions gen_opts, train_opts, eval_opts, bench_opts;
  auto* gen = app.add_subcommand("generate", "Write synthetic train/valid/test files and a manifest");
  add_common(gen, gen_opts);

  auto* train = app.add_subcommand("train", "Train variants and save model files and loss curves");
  add_common(train, train_opts);
  std::vector<std::string> variants;
  train->add_option("--variant", variants, "Variant name (repeatable; default all in the config)");

  auto* eval = app.add_subcommand("evaluate", "Evaluate saved models on the test split");
  add_common(eval, eval_opts);
  std::vector<std::string> models;
  eval->add_option("--model", models, "Model file (repeatable)")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("benchmark", "Train and evaluate every variant and write the report tables");
  add_common(bench, bench_opts);
  bool parallel = false;
  bench->add_flag("--parallel", parallel, "Train variants concurrently (distorts the time ratios)");

  auto* exp = app.add_subcommand("export-embeddings", "Write embeddings of a dataset file as TSV");
  std::string model_path, dataset_path, space = "full", out_path;
  exp->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  exp->add_option("--dataset", dataset_path, "Dataset file")->required()->check(CLI::ExistingFile);
  exp->add_option("--space", space, "'full' or a notion name");
  exp->add_option("--out", out_path, "Output TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  disent::set_log_level(quiet ? disent::LogLevel::kQuiet : verbose ? disent::LogLevel::kInfo : disent::LogLevel::kWarning);

  try {
    if (*gen) {
      disent::cmd_generate(resolve(gen_opts, true));
    } else if (*train) {
      disent::cmd_train(resolve(train_opts), variants);
    } else if (*eval) {
      std::vector<std::filesystem::path> paths(models.begin(), models.end());
      disent::cmd_evaluate(resolve(eval_opts), paths);
    } else if (*bench) {
      const auto config = resolve(bench_opts);
      const auto result = disent::cmd_benchmark(config, parallel);
      std::cout << disent::render_tables(config.space, result);
      for (const auto& run : result.runs) {
        if (!run.report.error.empty()) return kExitRuntime;
      }
    } else if (*exp) {
      disent::cmd_export_embeddings(model_path, dataset_path, space, out_path);
    }
  } catch (const disent::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
