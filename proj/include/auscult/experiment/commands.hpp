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

#ifndef AUSCULT_EXPERIMENT_COMMANDS_HPP_
#define AUSCULT_EXPERIMENT_COMMANDS_HPP_

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auscult/experiment/config.hpp"
#include "auscult/experiment/pipeline.hpp"

namespace auscult::experiment {

inline constexpr const char* kResultsSchema = "auscult.results";
inline constexpr int kResultsVersion = 1;
inline constexpr double kFrameSeconds = static_cast<double>(dsp::kHop) / dsp::kTargetRate;

inline fs::path resolve_root(const std::string& root) {
  if (!root.empty()) return root;
  if (const char* env = std::getenv("ICBHI_ROOT"); env && *env) return env;
  throw UsageError("no dataset root: pass --root or set ICBHI_ROOT");
}

inline json results_header(const std::string& kind, const ExperimentConfig& cfg) {
  return {{"schema", kResultsSchema},
          {"version", kResultsVersion},
          {"kind", kind},
          {"config", to_json(cfg)},
          {"config_hash", config_hash(cfg)}};
}

inline DatasetIndex load_index(const ExperimentConfig& cfg, std::map<std::string, SplitPlan>* splits) {
  const auto path = cfg.paths.index_path();
  if (!fs::exists(path)) throw DataError("index not found at " + path.string() + "; run prepare");
  return index_from_json(read_json_file(path), splits);
}

// ------------------------------------------------------------------ prepare

// Scans the corpus, writes <out>/index.json and <out>/splits/<name>.json for
// kfold5, ratio and (when the list is in the root) official.
inline json cmd_prepare(const fs::path& root, const fs::path& out_dir, std::uint64_t seed,
                        std::ostream* log) {
  auto index = scan_dataset(root);
  if (index.recordings.empty()) throw DataError("no recordings found under " + root.string());
  std::map<std::string, SplitPlan> splits;
  splits["kfold5"] = make_splits(index, KFold{5, seed});
  splits["ratio"] = make_splits(index, RatioSplit{0.6, seed, true});
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_regular_file() && is_split_file(e.path()) && e.path().extension() == ".txt") {
      splits["official"] = make_splits(index, parse_official_split(data_detail::read_text(e.path())));
      break;
    }
  fs::create_directories(out_dir / "splits");
  io::write_text_atomic(out_dir / "index.json", index_to_json(index, splits).dump(1));
  for (const auto& [name, plan] : splits)
    io::write_text_atomic(out_dir / "splits" / (name + ".json"), split_to_json(plan).dump(1));

  const auto counts = index.cycle_class_counts();
  json summary = {{"recordings", index.recordings.size()},
                  {"cycles", index.cycle_count()},
                  {"patients", index.patients().size()},
                  {"cycle_classes",
                   {{"Crackle", counts[0]}, {"Wheeze", counts[1]}, {"Both", counts[2]}, {"Normal", counts[3]}}},
                  {"warnings", index.warnings.size()},
                  {"splits", json::array()}};
  for (const auto& [name, _] : splits) summary["splits"].push_back(name);
  if (log) {
    *log << index.recordings.size() << " recordings / " << index.cycle_count() << " cycles / "
         << index.patients().size() << " patients\n";
    *log << "cycle classes: Crackle " << counts[0] << ", Wheeze " << counts[1] << ", Both "
         << counts[2] << ", Normal " << counts[3] << '\n';
    for (const auto& w : index.warnings) *log << "warning: " << w << '\n';
  }
  return summary;
}

// ----------------------------------------------------------------- features

inline CacheStats cmd_features(const ExperimentConfig& cfg, std::ostream* log) {
  const auto index = load_index(cfg, nullptr);
  const auto ids = all_recordings(index);
  const auto instances = task_instances(index, cfg.task, ids);
  CacheStats stats;
  for_each_feature(index, instances, frontend_config(cfg), cfg.paths.cache_dir, stats, log, {});
  if (log)
    *log << "features: " << stats.reused << " reused, " << stats.computed << " computed, "
         << stats.corrupt << " corrupt\n";
  return stats;
}

// -------------------------------------------------------------------- train

inline json score_block(const std::vector<FoldOutcome>& folds, const ExperimentConfig& cfg) {
  std::vector<ConfusionMatrix> cms;
  for (const auto& f : folds) cms.push_back(f.cm);
  const auto pooled = pool(cms);
  json j = {{"aggregation", cfg.aggregation},
            {"confusion", confusion_json(pooled)},
            {"scores", scores_json(pooled)}};
  if (cfg.aggregation == "mean") {
    json mean = json::object();
    for (Subtask s : subtasks_of(cfg.metric_task())) {
      try {
        const auto m = mean_fold_scores(cms, s);
        mean[to_string(s)] = {{"sensitivity", m[0]}, {"specificity", m[1]}, {"icbhi", m[2]}};
      } catch (const MetricError&) {
        mean[to_string(s)] = nullptr;
      }
    }
    j["fold_mean_scores"] = mean;
  }
  return j;
}

inline json run_experiment(const ExperimentConfig& cfg, const DatasetIndex& index,
                           const std::map<std::string, SplitPlan>& splits, const fs::path& run_dir,
                           std::ostream* log) {
  cfg.validate();
  const auto plan = split_plan(splits, cfg.split);
  CacheStats stats;
  std::vector<FoldOutcome> folds;
  for (int subset : cfg.test_subsets())
    folds.push_back(run_fold(cfg, index, plan, subset, run_dir, stats, log));
  json doc = results_header("train", cfg);
  doc["task"] = cfg.task;
  doc["split"] = {{"scheme", cfg.split}, {"seed", plan.seed}};
  doc["seed"] = cfg.seed;
  doc["folds"] = json::array();
  for (const auto& f : folds) doc["folds"].push_back(to_json(f));
  doc.update(score_block(folds, cfg));
  doc["feature_cache"] = to_json(stats);
  return doc;
}

inline fs::path run_dir(const ExperimentConfig& cfg, const std::string& kind) {
  return fs::path(cfg.paths.out_dir) / (kind + "_" + config_hash(cfg));
}

// Writes <out>/train_<hash>/{results.json, <subset>.ckpt, <subset>_history.csv}.
inline json cmd_train(const ExperimentConfig& cfg, std::ostream* log) {
  std::map<std::string, SplitPlan> splits;
  const auto index = load_index(cfg, &splits);
  const auto dir = run_dir(cfg, "train");
  auto doc = run_experiment(cfg, index, splits, dir, log);
  io::write_text_atomic(dir / "results.json", doc.dump(1));
  if (log) *log << "results: " << (dir / "results.json").string() << '\n';
  return doc;
}

// --------------------------------------------------------------------- grid

inline const std::vector<std::string>& grid_axis_names() {
  static const std::vector<std::string> names = {"frontend", "overlap", "patch_width", "mixup"};
  return names;
}

struct GridSpec {
  std::set<std::string> axes;
  bool all_folds = false;

  void validate() const {
    if (axes.empty()) throw UsageError("grid needs at least one axis");
    for (const auto& a : axes)
      if (std::find(grid_axis_names().begin(), grid_axis_names().end(), a) == grid_axis_names().end())
        throw UsageError("unknown grid axis '" + a + "' (expected frontend, overlap, patch_width, mixup)");
  }
};

// Cartesian product in a fixed axis order, so rows come out sorted.
inline std::vector<ExperimentConfig> grid_points(const GridSpec& grid, const ExperimentConfig& base) {
  grid.validate();
  std::vector<ExperimentConfig> points = {base};
  auto expand = [&](auto values, auto set) {
    std::vector<ExperimentConfig> next;
    for (const auto& p : points)
      for (const auto& v : values) {
        auto q = p;
        set(q, v);
        next.push_back(q);
      }
    points = std::move(next);
  };
  if (grid.axes.count("frontend"))
    expand(std::vector{dsp::FrontEnd::LogMel, dsp::FrontEnd::Gamma, dsp::FrontEnd::MFCC, dsp::FrontEnd::CQT},
           [](ExperimentConfig& c, dsp::FrontEnd f) { c.frontend = f; });
  if (grid.axes.count("overlap"))
    expand(std::vector{0.0, 0.5}, [](ExperimentConfig& c, double o) { c.overlap = o; });
  if (grid.axes.count("patch_width"))
    expand(std::vector<std::size_t>{32, 64, 96, 128, 160},
           [](ExperimentConfig& c, std::size_t w) { c.patch_width = w; });
  if (grid.axes.count("mixup"))
    expand(std::vector{false, true}, [](ExperimentConfig& c, bool m) { c.mixup = m; });
  for (auto& p : points) {
    p.preset.clear();
    if (!grid.all_folds && base.folds.empty() && p.split == "kfold5") p.folds = {1};
  }
  return points;
}

inline std::string grid_table(const json& rows, Task task) {
  std::ostringstream os;
  os << "frontend\toverlap\tpatch_width\tpatch_seconds\tmixup";
  for (Subtask s : subtasks_of(task)) os << '\t' << to_string(s) << "_sens\t" << to_string(s) << "_spec\t" << to_string(s) << "_score";
  os << '\n';
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3f", r.at("patch_seconds").get<double>());
    os << r.at("frontend").get<std::string>() << '\t' << r.at("overlap").get<double>() << '\t'
       << r.at("patch_width").get<std::size_t>() << '\t' << buf << '\t'
       << (r.at("mixup").get<bool>() ? "on" : "off");
    for (Subtask s : subtasks_of(task)) {
      const auto& sc = r.at("scores").at(to_string(s));
      for (const char* k : {"sensitivity", "specificity", "icbhi"}) {
        if (sc.is_null()) {
          os << "\tundefined";
        } else {
          std::snprintf(buf, sizeof buf, "%.4f", sc.at(k).at("value").get<double>());
          os << '\t' << buf;
        }
      }
    }
    os << '\n';
  }
  return os.str();
}

// One results row per grid point; writes <out>/grid_<hash>/{grid.json, grid.tsv}
// plus a sub-directory per point.
inline json cmd_grid(const GridSpec& grid, const ExperimentConfig& base, std::ostream* log) {
  base.validate();
  std::map<std::string, SplitPlan> splits;
  const auto index = load_index(base, &splits);
  json doc = results_header("grid", base);
  doc["axes"] = grid.axes;
  doc["all_folds"] = grid.all_folds;
  const auto dir = fs::path(base.paths.out_dir) /
                   ("grid_" + crc_hex(io::crc32_of(settings_json(base).dump() + doc["axes"].dump() +
                                                   (grid.all_folds ? "all" : "fold1"))));
  json rows = json::array();
  for (const auto& p : grid_points(grid, base)) {
    if (log)
      *log << "grid point " << dsp::to_string(p.frontend) << " overlap " << p.overlap << " width "
           << p.patch_width << " mixup " << (p.mixup ? "on" : "off") << '\n';
    const auto res = run_experiment(p, index, splits, dir / config_hash(p), log);
    rows.push_back({{"frontend", std::string(dsp::to_string(p.frontend))},
                    {"overlap", p.overlap},
                    {"patch_width", p.patch_width},
                    {"patch_seconds", static_cast<double>(p.patch_width) * kFrameSeconds},
                    {"mixup", p.mixup},
                    {"config_hash", config_hash(p)},
                    {"folds", p.test_subsets().size()},
                    {"confusion", res["confusion"]},
                    {"scores", res["scores"]}});
  }
  doc["rows"] = rows;
  fs::create_directories(dir);
  io::write_text_atomic(dir / "grid.json", doc.dump(1));
  io::write_text_atomic(dir / "grid.tsv", grid_table(rows, base.metric_task()));
  if (log) *log << "results: " << (dir / "grid.json").string() << '\n';
  return doc;
}

// ------------------------------------------------------------------ distill

// Student trained against a Task-2 CNN-MoE teacher on the training side of the
// first selected subset, then both scored on its held-out side.
// The student trains on un-mixed patches with cross-entropy unless
// student_mixup is set, in which case it sees the configured mixup with KL.
inline json cmd_distill(const ExperimentConfig& cfg_in, const fs::path& teacher_path, std::ostream* log,
                        bool student_mixup = false) {
  auto cfg = cfg_in;
  cfg.model = models::Arch::Student;
  cfg.validate();
  if (cfg.task != 2) throw UsageError("distillation runs on Task 2 (disease detection)");
  auto teacher = models::load_network<float>(teacher_path);
  if (teacher.spec().arch != models::Arch::CnnMoe || teacher.classes() != kNumDiseaseClasses)
    throw UsageError("teacher must be a 3-class cnn_moe checkpoint");

  std::map<std::string, SplitPlan> splits;
  const auto index = load_index(cfg, &splits);
  const auto plan = split_plan(splits, cfg.split);
  const int subset = cfg.test_subsets().front();
  const auto [train_ids, test_ids] = train_test_ids(plan, subset);
  const auto train_inst = task_instances(index, cfg.task, train_ids);
  const auto test_inst = task_instances(index, cfg.task, test_ids);
  CacheStats stats;
  const auto train_patches = build_patches(index, train_inst, cfg, stats, log);
  const auto test_patches = build_patches(index, test_inst, cfg, stats, log);

  auto student = models::build_student<float>(kNumDiseaseClasses, cfg.seed, cfg.student_widths);
  models::DistillConfig dc;
  dc.train = cfg.train_config();
  dc.train.mixup = student_mixup;
  dc.train.loss = student_mixup ? models::LossKind::KL : models::LossKind::CrossEntropy;
  dc.gamma = cfg.gamma;
  const auto hist = models::distill(teacher, student, train_patches, dc, log);

  const auto teacher_cm = evaluate(teacher, test_patches, test_inst, Task::Disease);
  const auto student_cm = evaluate(student, test_patches, test_inst, Task::Disease);
  auto dir = run_dir(cfg, "distill");
  if (student_mixup) dir += "_mixup";
  fs::create_directories(dir);
  const auto bytes = student.encode();
  io::write_file_atomic(dir / "student.ckpt", bytes);
  io::write_text_atomic(dir / "student_history.csv", hist.to_csv());

  const auto tp = models::count_params(teacher), sp = models::count_params(student);
  json doc = results_header("distill", cfg);
  doc["task"] = 2;
  doc["subset"] = plan.tag(subset);
  doc["gamma"] = cfg.gamma;
  doc["student_mixup"] = student_mixup;
  doc["teacher"] = {{"checkpoint", teacher_path.string()},
                    {"parameters", tp},
                    {"confusion", confusion_json(teacher_cm)},
                    {"scores", scores_json(teacher_cm)}};
  doc["student"] = {{"checkpoint", (dir / "student.ckpt").string()},
                    {"checkpoint_crc32", crc_hex(sealed_digest(bytes))},
                    {"parameters", sp},
                    {"confusion", confusion_json(student_cm)},
                    {"scores", scores_json(student_cm)}};
  doc["parameter_ratio"] = static_cast<double>(sp) / static_cast<double>(tp);
  doc["confusion"] = confusion_json(student_cm);
  doc["scores"] = scores_json(student_cm);
  io::write_text_atomic(dir / "results.json", doc.dump(1));
  if (log)
    *log << "student/teacher parameters " << sp << "/" << tp << " = " << doc["parameter_ratio"].get<double>()
         << "\nresults: " << (dir / "results.json").string() << '\n';
  return doc;
}

// ------------------------------------------------------------------- report

// Text rendering of any results document.
inline std::string cmd_report(const json& doc, std::span<const Subtask> subtasks = {}) {
  if (doc.value("schema", "") != kResultsSchema) throw DataError("not an auscult results document");
  std::ostringstream os;
  os << "# " << doc.at("kind").get<std::string>() << " config " << doc.at("config_hash").get<std::string>() << '\n';
  if (doc["kind"] == "grid") {
    const int task = doc.at("config").at("task").get<int>();
    os << grid_table(doc.at("rows"), task == 1 ? Task::Anomaly : Task::Disease);
    return os.str();
  }
  if (doc["kind"] == "distill") {
    for (const char* who : {"teacher", "student"}) {
      os << "# " << who << " (" << doc[who]["parameters"].get<std::size_t>() << " parameters)\n";
      os << render_report(confusion_from_json(doc[who]["confusion"]), subtasks);
    }
    os << "parameter_ratio\t" << doc["parameter_ratio"].get<double>() << '\n';
    return os.str();
  }
  os << render_report(confusion_from_json(doc.at("confusion")), subtasks);
  return os.str();
}

}  // namespace auscult::experiment

#endif  // AUSCULT_EXPERIMENT_COMMANDS_HPP_
