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

// Acceptance suite: one PASS/FAIL line per criterion. The process exits 0
// once every criterion has been evaluated; --strict makes any FAIL fatal.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "disent/evaluation.hpp"
#include "disent/experiment.hpp"
#include "disent/log.hpp"
#include "support/loss_cases.hpp"
#include "support/oracles.hpp"

namespace {

using namespace disent;
using nlohmann::json;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

double sigmoid_of(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// 1. Identity suite

Outcome identity_suite() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  const LabelSpace space = default_label_space(32);
  double worst_dis = 0, worst_norm = 0;
  for (int instance = 0; instance < 100; ++instance) {
    Model dense(space, NetConfig{12, {16, 16}, HeadKind::kDense, true});
    Model sub(space, NetConfig{12, {16, 16}, HeadKind::kSubDense, true});
    dense.init_params(1000 + instance);
    sub.init_params(5000 + instance);

    // Parameter identification: sub-dense layer s takes the dense head columns of block s.
    auto src = dense.snapshot();
    auto dst = sub.snapshot();
    const std::size_t backbone = 2 * dense.backbone_layers().size();
    for (std::size_t i = 0; i < backbone; ++i) dst[i] = src[i];
    for (std::size_t s = 0; s < space.notion_count(); ++s) {
      for (std::size_t c = 0; c < space.subspace_dim(); ++c) {
        for (std::size_t r = 0; r < src[backbone].rows(); ++r) {
          dst[backbone + 2 * s].at(r, c) = src[backbone].at(r, space.block_begin(s) + c);
        }
        dst[backbone + 2 * s + 1][c] = src[backbone + 1][space.block_begin(s) + c];
      }
    }
    dst.back() = src.back();
    sub.restore(dst);

    const auto x = random_vec(12, rng);
    const auto proxy_dis = dense.class_scores(x, ScoreVariant::kProxyDisentangled);
    const auto cls_dis = sub.class_scores(x, ScoreVariant::kClassificationDisentangled);
    for (std::size_t t = 0; t < proxy_dis.size(); ++t) worst_dis = std::max(worst_dis, std::abs(proxy_dis[t] - cls_dis[t]));

    // Normalized classification with c = p against the proxy formula evaluated by hand.
    const auto cls_norm = dense.class_scores(x, ScoreVariant::kClassificationNormalized);
    const Tensor raw = dense.embed_batch(Tensor::matrix(1, 12, x));
    double norm = 0;
    for (double v : raw.values()) norm += v * v;
    norm = std::max(std::sqrt(norm), 1e-12);
    const Tensor& p = dense.centroids().value();
    for (std::size_t t = 0; t < space.tag_count(); ++t) {
      double logit = 0;
      for (std::size_t k = 0; k < space.embedding_dim(); ++k) logit += raw[k] / norm * p.at(k, t);
      worst_norm = std::max(worst_norm, std::abs(cls_norm[t] - sigmoid_of(logit)));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst_dis < 1e-9 && worst_norm < 1e-12 && elapsed < 10,
          "disentangled max|d|=" + fmt("%.2e", worst_dis) + " normalized max|d|=" + fmt("%.2e", worst_norm) +
              " time=" + fmt("%.2fs", elapsed)};
}

// ---------------------------------------------------------------------------
// 2. Gradient suite

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0;
  std::string worst_name;
  for (const auto& c : testing::loss_cases()) {
    const double err = testing::worst_gradient_error(c, 20);
    if (err >= worst) {
      worst = err;
      worst_name = c.name;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 60, std::to_string(testing::loss_cases().size()) +
                                            " losses x 20 instances, worst rel err=" + fmt("%.2e", worst) + " (" +
                                            worst_name + ") time=" + fmt("%.2fs", elapsed)};
}

// ---------------------------------------------------------------------------
// 3. Metric oracles

Outcome metric_oracles() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  int recall_bad = 0, auc_bad = 0, triplet_bad = 0, proto_bad = 0;
  const std::vector<std::size_t> ks = {1, 2, 4, 8};
  const LabelSpace space({{"A", {"a1", "a2"}}, {"B", {"b1", "b2"}}}, 6);
  for (int instance = 0; instance < 200; ++instance) {
    const std::size_t n = 8 + instance % 10, d = 6, tags = 4;
    testing::Matrix emb;
    testing::LabelRows labels;
    std::vector<Item> items;
    std::vector<double> flat;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> e(d);
      for (double& v : e) v = normal(rng);
      std::vector<std::uint8_t> y(tags);
      for (auto& v : y) v = coin(rng) ? 1 : 0;
      emb.push_back(e);
      labels.push_back(y);
      flat.insert(flat.end(), e.begin(), e.end());
      items.push_back({"i" + std::to_string(i), "t" + std::to_string(i), {0.0}, y});
    }
    const Tensor tensor = Tensor::matrix(n, d, flat);
    const Dataset data(1, tags, items);

    const auto recall = retrieval_recall(tensor, data, ks);
    for (auto k : ks) {
      if (std::abs(recall.at(k) - testing::recall_oracle(emb, labels, k)) > 1e-12) ++recall_bad;
    }

    // AUC on coarse scores so ties occur.
    Tensor scores({n, tags}), label_matrix({n, tags});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < tags; ++t) {
        scores.at(i, t) = std::round(emb[i][t] * 2) / 2;
        label_matrix.at(i, t) = labels[i][t];
      }
    }
    const auto auc = auc_tags(scores, label_matrix);
    for (std::size_t t = 0; t < tags; ++t) {
      std::vector<double> col;
      std::vector<std::uint8_t> y;
      for (std::size_t i = 0; i < n; ++i) {
        col.push_back(scores.at(i, t));
        y.push_back(labels[i][t]);
      }
      const bool evaluable = std::count(y.begin(), y.end(), 1) && std::count(y.begin(), y.end(), 0);
      if (evaluable != auc.per_tag[t].has_value()) ++auc_bad;
      else if (evaluable && std::abs(*auc.per_tag[t] - testing::auc_pair_oracle(col, y)) > 1e-9) ++auc_bad;
    }

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<Triplet> triplets;
    for (int i = 0; i < 30; ++i) {
      const std::size_t notion = static_cast<std::size_t>(i % 2);
      triplets.push_back({pick(rng), pick(rng), pick(rng), 2 * notion, notion, TripletKind::kTag});
    }
    for (Space mode : {Space::kFull, Space::kSub}) {
      std::size_t correct = 0;
      for (const auto& t : triplets) {
        auto view = [&](std::size_t idx) {
          if (mode == Space::kFull) return emb[idx];
          return std::vector<double>(emb[idx].begin() + 3 * t.notion, emb[idx].begin() + 3 * t.notion + 3);
        };
        if (testing::cosine_oracle(view(t.anchor), view(t.positive)) >
            testing::cosine_oracle(view(t.anchor), view(t.negative))) {
          ++correct;
        }
      }
      if (triplet_accuracy(tensor, triplets, space, mode) != static_cast<double>(correct) / triplets.size()) ++triplet_bad;
    }

    const auto protos = build_prototypes(tensor, data);
    const auto oracle = testing::prototype_oracle(emb, labels, tags);
    for (std::size_t t = 0; t < tags; ++t) {
      for (std::size_t c = 0; c < d; ++c) {
        if (std::abs(protos.at(t, c) - oracle[t][c]) > 1e-12) ++proto_bad;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {recall_bad + auc_bad + triplet_bad + proto_bad == 0 && elapsed < 60,
          "200 instances; mismatches recall=" + std::to_string(recall_bad) + " auc=" + std::to_string(auc_bad) +
              " triplet=" + std::to_string(triplet_bad) + " prototypes=" + std::to_string(proto_bad) +
              " time=" + fmt("%.2fs", elapsed)};
}

// ---------------------------------------------------------------------------
// 4 and 5. Benchmark on the default synthetic data, five training seeds

struct SeedRuns {
  std::map<std::string, std::vector<double>> r1, auc, ratio;
  std::map<std::string, std::map<std::string, std::vector<double>>> triplet;
  std::vector<std::string> failures;
  double seconds = 0;
};

SeedRuns run_seeds(int seeds) {
  SeedRuns out;
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = parse_config(json::object());
  const auto data = prepare_data(config);
  for (int seed = 1; seed <= seeds; ++seed) {
    apply_seed(config, static_cast<std::uint64_t>(seed));
    const auto result = run_benchmark(config, data);
    for (const auto& run : result.runs) {
      const auto& r = run.report;
      if (!r.error.empty()) {
        out.failures.push_back(r.variant.name + ": " + r.error);
        continue;
      }
      out.r1[r.variant.name].push_back(r.recall_at.at(1));
      out.auc[r.variant.name].push_back(r.auc);
      out.ratio[r.variant.name].push_back(r.training_time_ratio);
      for (const auto& [key, value] : r.triplet_accuracy) out.triplet[r.variant.name][key].push_back(value);
      std::fprintf(stderr, "  seed %d %-24s epochs %3d ratio %.2f R@1 %.3f AUC %.3f\n", seed, r.variant.name.c_str(),
                   r.epochs, r.training_time_ratio, r.recall_at.at(1), r.auc);
    }
  }
  out.seconds = seconds_since(start);
  return out;
}

double med(const std::map<std::string, std::vector<double>>& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() || it->second.empty() ? std::nan("") : median(it->second);
}

bool is_classification_like(const std::string& name) {
  return name.rfind("proxy", 0) == 0 || name.rfind("classification", 0) == 0;
}

Outcome benchmark_orderings(const SeedRuns& runs) {
  if (!runs.failures.empty()) return {false, "variant failures: " + runs.failures.front()};
  const double plain = med(runs.r1, "classification"), normed = med(runs.r1, "classification-norm");
  const bool a = plain <= 0.5 * normed;

  double best_cls_r1 = 0, best_cls_auc = 0, best_tri_r1 = 0, best_tri_auc = 0;
  for (const auto& [name, values] : runs.r1) {
    const double r1 = median(values), auc = med(runs.auc, name);
    if (is_classification_like(name)) {
      best_cls_r1 = std::max(best_cls_r1, r1);
      best_cls_auc = std::max(best_cls_auc, auc);
    } else {
      best_tri_r1 = std::max(best_tri_r1, r1);
      best_tri_auc = std::max(best_tri_auc, auc);
    }
  }
  const bool b = best_cls_r1 >= best_tri_r1 && best_cls_auc >= best_tri_auc;

  double fastest_cls = 1e300, fastest_other = 1e300, slowest = 0;
  std::string slowest_name;
  for (const auto& [name, values] : runs.ratio) {
    const double r = median(values);
    (name.rfind("classification", 0) == 0 ? fastest_cls : fastest_other) =
        std::min(name.rfind("classification", 0) == 0 ? fastest_cls : fastest_other, r);
    if (r > slowest) {
      slowest = r;
      slowest_name = name;
    }
  }
  const bool c = fastest_cls <= fastest_other && slowest_name == "triplet-dis-track";
  const bool in_budget = runs.seconds < 15 * 60;

  std::string detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " R@1 plain=" + fmt("%.3f", plain) +
                       " norm=" + fmt("%.3f", normed) + "; (b) " + (b ? "ok" : "FAIL") +
                       " R@1 cls/proxy=" + fmt("%.3f", best_cls_r1) + " triplet=" + fmt("%.3f", best_tri_r1) +
                       " AUC cls/proxy=" + fmt("%.3f", best_cls_auc) + " triplet=" + fmt("%.3f", best_tri_auc) +
                       "; (c) " + (c ? "ok" : "FAIL") + " fastest classification ratio=" + fmt("%.2f", fastest_cls) +
                       " fastest other=" + fmt("%.2f", fastest_other) + " slowest=" + slowest_name + " (" +
                       fmt("%.2f", slowest) + "); runtime " + fmt("%.0fs", runs.seconds) + (in_budget ? "" : " over budget");
  return {a && b && c && in_budget, detail};
}

Outcome subspace_pattern(const SeedRuns& runs) {
  auto it = runs.triplet.find("triplet-dis");
  if (it == runs.triplet.end()) return {false, "triplet-dis did not run"};
  const auto& acc = it->second;
  const LabelSpace space = default_label_space(128);
  int dominated = 0;
  std::string detail;
  for (const auto& n : space.notions()) {
    const double sub = med(acc, n.name + "/sub"), full = med(acc, n.name + "/full");
    if (sub >= full) ++dominated;
    detail += n.name + " sub=" + fmt("%.3f", sub) + " full=" + fmt("%.3f", full) + "; ";
  }
  return {dominated >= 3, std::to_string(dominated) + "/4 notions sub>=full: " + detail};
}

// ---------------------------------------------------------------------------
// 6. Masking invariants

Outcome masking_invariants() {
  std::mt19937_64 rng(17);
  int partition_bad = 0, identity_bad = 0;
  double worst = 0;
  for (int instance = 0; instance < 50; ++instance) {
    std::uniform_int_distribution<int> notion_count(1, 6), tag_count(1, 5), width(1, 6);
    const int g = notion_count(rng);
    std::vector<Notion> notions;
    for (int s = 0; s < g; ++s) {
      Notion n{"n" + std::to_string(s), {}};
      for (int t = tag_count(rng); t > 0; --t) n.tags.push_back(n.name + "t" + std::to_string(t));
      notions.push_back(n);
    }
    const std::size_t d = static_cast<std::size_t>(g * width(rng));
    const LabelSpace space(notions, d);
    const auto masks = space.build_masks();
    std::vector<double> total(d, 0.0);
    for (std::size_t s = 0; s < masks.size(); ++s) {
      std::size_t ones = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const double v = masks[s].values[k];
        total[k] += v;
        ones += v == 1.0;
        const bool inside = k >= space.block_begin(s) && k < space.block_begin(s) + space.subspace_dim();
        if ((v == 1.0) != inside) ++partition_bad;
      }
      if (ones != d / static_cast<std::size_t>(g)) ++partition_bad;
      for (std::size_t o = s + 1; o < masks.size(); ++o) {
        double dot = 0;
        for (std::size_t k = 0; k < d; ++k) dot += masks[s].values[k] * masks[o].values[k];
        if (dot != 0) ++partition_bad;
      }
    }
    for (double v : total) partition_bad += v != 1.0;

    Model model(space, NetConfig{5, {7}, HeadKind::kSubDense, true});
    model.init_params(static_cast<std::uint64_t>(instance));
    const auto x = random_vec(5, rng);
    const Var hidden = model.backbone(constant(Tensor::matrix(1, 5, x)));
    for (std::size_t s = 0; s < space.notion_count(); ++s) {
      const auto masked = model.masked_embed(x, space.notions()[s].name);
      const Var h = model.sub_head(hidden, s);
      for (std::size_t k = 0; k < d; ++k) {
        const bool inside = k >= space.block_begin(s) && k < space.block_begin(s) + space.subspace_dim();
        const double expected = inside ? h.value()[k - space.block_begin(s)] : 0.0;
        worst = std::max(worst, std::abs(masked[k] - expected));
      }
    }
    if (worst >= 1e-12) ++identity_bad;
  }
  return {partition_bad == 0 && identity_bad == 0,
          "50 random label spaces; partition violations=" + std::to_string(partition_bad) +
              " masked-vs-sub-dense max|d|=" + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 7. Determinism

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "disent_acceptance_determinism";
  fs::remove_all(dir);
  json doc = {{"synthetic", {{"tracks", 120}}},
              {"training", {{"max_epochs", 8}}},
              {"evaluation", {{"triplets_per_notion", 500}}},
              {"output_dir", dir.string()},
              {"seed", 3}};
  const auto config = parse_config(doc);
  std::vector<std::string> reports;
  for (int run = 0; run < 2; ++run) {
    cmd_benchmark(config, false);
    std::ifstream in(dir / "report.json");
    json report = json::parse(in);
    report.erase("wall_clock");
    reports.push_back(report.dump());
  }
  fs::remove_all(dir);
  return {reports[0] == reports[1], "8 variants, 2 runs, report.json without wall-clock fields " +
                                        std::string(reports[0] == reports[1] ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  bool strict = false;
  int seeds = 5;
  std::set<int> only;
  app.add_flag("--strict", strict, "Exit 1 when any criterion fails");
  app.add_option("--seeds", seeds, "Training seeds for the benchmark criteria")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "Run only these criteria (1-7)");
  CLI11_PARSE(app, argc, argv);
  disent::set_log_level(disent::LogLevel::kQuiet);

  auto wanted = [&](int id) { return only.empty() || only.count(id); };
  std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"identity suite", identity_suite}},
      {2, {"gradient suite", gradient_suite}},
      {3, {"metric oracles", metric_oracles}},
      {6, {"masking invariants", masking_invariants}},
      {7, {"determinism", determinism}},
  };
  std::map<int, std::pair<std::string, Outcome>> results;
  int failures = 0;
  auto record = [&](int id, const std::string& name, Outcome outcome) {
    std::printf("[%s] criterion %d: %s -- %s\n", outcome.pass ? "PASS" : "FAIL", id, name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
    failures += !outcome.pass;
  };
  auto guarded = [&](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  for (int id : {1, 2, 3}) {
    if (wanted(id)) record(id, criteria[id].first, guarded(criteria[id].second));
  }
  if (wanted(4) || wanted(5)) {
    SeedRuns runs;
    std::string error;
    try {
      runs = run_seeds(seeds);
    } catch (const std::exception& e) {
      error = e.what();
    }
    if (wanted(4)) {
      record(4, "benchmark orderings (median of " + std::to_string(seeds) + " seeds)",
             error.empty() ? benchmark_orderings(runs) : Outcome{false, "exception: " + error});
    }
    if (wanted(5)) {
      record(5, "sub-space triplet accuracy pattern",
             error.empty() ? subspace_pattern(runs) : Outcome{false, "exception: " + error});
    }
  }
  for (int id : {6, 7}) {
    if (wanted(id)) record(id, criteria[id].first, guarded(criteria[id].second));
  }
  std::printf("%d criteria failed\n", failures);
  return strict && failures ? 1 : 0;
}
