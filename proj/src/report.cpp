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

#include <algorithm>
#include <cstdio>
#include <string>

#include "disent/experiment.hpp"

namespace disent {

using nlohmann::json;

namespace {

std::string format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

std::string pad(const std::string& text, std::size_t width) {
  return text.size() >= width ? text + " " : text + std::string(width - text.size(), ' ');
}

std::string cell(const std::map<std::string, double>& values, const std::string& key) {
  auto it = values.find(key);
  return it == values.end() ? "-" : format("%.3f", it->second);
}

const char* mark(bool on) { return on ? "x" : "-"; }

}  // namespace

json eval_report_json(const EvalReport& report) {
  json recall = json::object();
  for (const auto& [k, v] : report.recall_at) recall[std::to_string(k)] = v;
  json out = {{"variant", to_json(report.variant)},
              {"epochs", report.epochs},
              {"recall_at", recall},
              {"auc", report.auc},
              {"triplet_accuracy", report.triplet_accuracy}};
  if (!report.error.empty()) out["error"] = report.error;
  return out;
}

json report_json(const ExperimentConfig& config, const BenchmarkResult& result) {
  json variants = json::array();
  json wall_clock = json::object();
  for (const auto& run : result.runs) {
    variants.push_back(eval_report_json(run.report));
    wall_clock[run.report.variant.name] = {{"train_seconds", run.report.train_seconds},
                                           {"training_time_ratio", run.report.training_time_ratio}};
  }
  return {{"config", to_json(config)}, {"variants", variants}, {"wall_clock", wall_clock}};
}

std::string render_tables(const LabelSpace& space, const BenchmarkResult& result) {
  std::size_t name_width = 8;
  std::vector<std::size_t> ks;
  for (const auto& run : result.runs) {
    name_width = std::max(name_width, run.report.variant.name.size() + 2);
    for (const auto& [k, v] : run.report.recall_at) {
      if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    }
  }
  std::sort(ks.begin(), ks.end());

  std::string out = "Retrieval and auto-tagging\n";
  out += pad("Model", name_width) + "Norm Dis  Track Epochs Ratio  ";
  for (auto k : ks) out += pad("R@" + std::to_string(k), 7);
  out += "AUC\n";
  for (const auto& run : result.runs) {
    const auto& r = run.report;
    out += pad(r.variant.name, name_width) + pad(mark(r.variant.normalization), 5) +
           pad(mark(r.variant.disentanglement), 5) + pad(mark(r.variant.track_reg), 6);
    if (!r.error.empty()) {
      out += "failed: " + r.error + "\n";
      continue;
    }
    out += pad(std::to_string(r.epochs), 7) + pad(format("%.2f", r.training_time_ratio), 7);
    for (auto k : ks) {
      auto it = r.recall_at.find(k);
      out += pad(it == r.recall_at.end() ? "-" : format("%.3f", it->second), 7);
    }
    out += format("%.3f", r.auc) + "\n";
  }

  out += "\nTag-based triplet accuracy\n";
  out += pad("Space", 10) + pad("Model", name_width);
  for (const auto& n : space.notions()) out += pad(n.name, std::max<std::size_t>(n.name.size() + 1, 7));
  out += "overall\n";
  for (const char* mode : {"full", "sub"}) {
    for (const auto& run : result.runs) {
      const auto& r = run.report;
      if (!r.error.empty()) continue;
      if (std::string(mode) == "sub" && !r.variant.disentanglement) continue;
      out += pad(std::string(mode) == "full" ? "complete" : "sub-space", 10) + pad(r.variant.name, name_width);
      for (const auto& n : space.notions()) {
        out += pad(cell(r.triplet_accuracy, n.name + "/" + mode), std::max<std::size_t>(n.name.size() + 1, 7));
      }
      out += cell(r.triplet_accuracy, std::string("overall/") + mode) + "\n";
    }
  }

  out += "\nTrack-based triplet accuracy\n";
  out += pad("Model", name_width) + "track\n";
  for (const auto& run : result.runs) {
    if (!run.report.error.empty()) continue;
    out += pad(run.report.variant.name, name_width) + cell(run.report.triplet_accuracy, "track/full") + "\n";
  }
  return out;
}

}  // namespace disent
