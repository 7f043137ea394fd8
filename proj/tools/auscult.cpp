// Copyright 2026 The auscult Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// auscult: command-line driver for the respiratory-sound experiments.
//
//   auscult prepare  --root DIR --out DIR
//   auscult features --preset task1-final
//   auscult train    --preset task2-final --fold 1
//   auscult grid     --axes frontend,patch_width
//   auscult distill  --teacher out/train_xxxx/fold0.ckpt
//   auscult report   out/train_xxxx/results.json

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "auscult/experiment/commands.hpp"

namespace {

using namespace auscult;
using namespace auscult::experiment;

struct Flags {
  std::string config, preset, frontend, split, model, aggregation, teacher, results;
  std::string root, cache, out, index;
  std::optional<int> task;
  std::optional<std::size_t> patch_width, experts, epochs, batch, eval_every;
  std::optional<double> overlap, lr, gamma;
  std::optional<std::uint64_t> seed;
  std::optional<bool> mixup, z_normalize;
  std::vector<int> folds;
  std::vector<std::size_t> widths, student_widths;
  std::vector<std::string> subtasks, axes;
  bool all_folds = false;
  bool student_mixup = false;
};

// defaults < preset < config file < flags
ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c;
  if (!f.preset.empty()) c = preset(f.preset);
  if (!f.config.empty()) {
    auto j = read_json_file(f.config);
    if (j.value("schema", "") == kResultsSchema) j = j.at("config");
    if (!f.preset.empty()) j.erase("preset");
    apply_json(c, j);
  }
  if (f.task) c.task = *f.task;
  if (!f.frontend.empty()) c.frontend = dsp::parse_frontend(f.frontend);
  if (f.z_normalize) c.z_normalize = *f.z_normalize;
  if (f.patch_width) c.patch_width = *f.patch_width;
  if (f.overlap) c.overlap = *f.overlap;
  if (f.mixup) c.mixup = *f.mixup;
  if (!f.split.empty()) c.split = f.split;
  if (!f.folds.empty()) c.folds = f.folds;
  if (f.all_folds) c.folds.clear();
  if (!f.model.empty()) c.model = models::parse_arch(f.model);
  if (f.experts) c.experts = *f.experts;
  if (!f.widths.empty()) c.widths = f.widths;
  if (!f.student_widths.empty()) c.student_widths = f.student_widths;
  if (f.lr) c.lr = *f.lr;
  if (f.epochs) c.epochs = *f.epochs;
  if (f.batch) c.batch = *f.batch;
  if (f.seed) c.seed = *f.seed;
  if (f.gamma) c.gamma = *f.gamma;
  if (!f.aggregation.empty()) c.aggregation = f.aggregation;
  if (f.eval_every) c.eval_every = *f.eval_every;
  if (!f.root.empty()) c.paths.dataset_root = f.root;
  if (!f.cache.empty()) c.paths.cache_dir = f.cache;
  if (!f.out.empty()) c.paths.out_dir = f.out;
  if (!f.index.empty()) c.paths.index = f.index;
  c.validate();
  return c;
}

void add_config_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config (or a results document to rerun)");
  cmd->add_option("--preset", f.preset, "task1-final or task2-final");
  cmd->add_option("--task", f.task, "1 (anomaly cycles) or 2 (disease)");
  cmd->add_option("--frontend", f.frontend, "logmel, gamma, mfcc or cqt");
  cmd->add_option("--z-normalize", f.z_normalize, "per-spectrogram z-normalisation");
  cmd->add_option("--patch-width", f.patch_width, "patch width W in frames");
  cmd->add_option("--overlap", f.overlap, "patch overlap in [0, 1)");
  cmd->add_option("--mixup", f.mixup, "mixup augmentation (true/false)");
  cmd->add_option("--split", f.split, "kfold5, official or ratio");
  cmd->add_option("--fold", f.folds, "1-based test fold (repeatable)");
  cmd->add_flag("--all-folds", f.all_folds, "run every fold");
  cmd->add_option("--model", f.model, "cdnn, cnn_moe or student");
  cmd->add_option("--experts", f.experts, "number of MoE experts K");
  cmd->add_option("--widths", f.widths, "trunk channel widths (6 values)")->delimiter(',');
  cmd->add_option("--student-widths", f.student_widths, "student widths (2 values)")->delimiter(',');
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch", f.batch, "mini-batch size");
  cmd->add_option("--seed", f.seed, "seed for splits, init, shuffling and mixup");
  cmd->add_option("--gamma", f.gamma, "distillation weight on the embedding loss");
  cmd->add_option("--aggregation", f.aggregation, "fold aggregation: pool or mean");
  cmd->add_option("--eval-every", f.eval_every, "held-out score every n epochs (0: never)");
  cmd->add_option("--root", f.root, "dataset root (default $ICBHI_ROOT)");
  cmd->add_option("--cache", f.cache, "feature cache directory");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--index", f.index, "index document (default <out>/index.json)");
}

int run(int argc, char** argv) {
  CLI::App app{"auscult: respiratory sound classification experiments"};
  app.require_subcommand(1);
  Flags f;
  auto* prepare = app.add_subcommand("prepare", "index the corpus and write split files");
  auto* features = app.add_subcommand("features", "compute and cache spectrograms");
  auto* train = app.add_subcommand("train", "train and evaluate over the configured folds");
  auto* grid = app.add_subcommand("grid", "factor grid over front-end, overlap, width, mixup");
  auto* distill = app.add_subcommand("distill", "distil a CNN-MoE teacher into the student");
  auto* report = app.add_subcommand("report", "render a results document");
  for (auto* c : {prepare, features, train, grid, distill}) add_config_flags(c, f);
  grid->add_option("--axes", f.axes, "frontend, overlap, patch_width, mixup")->delimiter(',')->required();
  distill->add_option("--teacher", f.teacher, "teacher checkpoint")->required();
  distill->add_flag("--student-mixup", f.student_mixup, "train the student on mixup batches (KL loss)");
  report->add_option("results", f.results, "results.json")->required();
  report->add_option("--subtask", f.subtasks, "1-1, 1-2, 2-1 or 2-2 (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*prepare) {
    const auto c = resolve(f);
    const auto summary = cmd_prepare(resolve_root(c.paths.dataset_root), c.paths.out_dir, c.seed, &std::cerr);
    std::cout << summary.dump(1) << '\n';
  } else if (*features) {
    std::cout << to_json(cmd_features(resolve(f), &std::cerr)).dump() << '\n';
  } else if (*train) {
    const auto doc = cmd_train(resolve(f), &std::cerr);
    std::cout << cmd_report(doc);
  } else if (*grid) {
    GridSpec g{{f.axes.begin(), f.axes.end()}, f.all_folds};
    auto base = resolve(f);
    const auto doc = cmd_grid(g, base, &std::cerr);
    std::cout << cmd_report(doc);
  } else if (*distill) {
    const auto doc = cmd_distill(resolve(f), f.teacher, &std::cerr, f.student_mixup);
    std::cout << cmd_report(doc);
  } else if (*report) {
    std::vector<Subtask> subs;
    for (const auto& s : f.subtasks) subs.push_back(parse_subtask(s));
    const auto doc = read_json_file(f.results);
    if (doc.contains("confusion")) {
      const auto task = confusion_from_json(doc["confusion"]).task();
      for (Subtask s : subs)
        if (task_of(s) != task) throw UsageError("subtask " + to_string(s) + " does not apply to this task");
    }
    std::cout << cmd_report(doc, subs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const MetricError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "training failure: " << e.what() << '\n';
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "training failure: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
}
