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

#ifndef AUSCULT_EXPERIMENT_CONFIG_HPP_
#define AUSCULT_EXPERIMENT_CONFIG_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auscult/binary_io.hpp"
#include "auscult/dsp/frontend.hpp"
#include "auscult/error.hpp"
#include "auscult/icbhi_data.hpp"
#include "auscult/metrics.hpp"
#include "auscult/models/network.hpp"
#include "auscult/models/train.hpp"
#include "auscult/patching.hpp"

namespace auscult::experiment {

using nlohmann::json;

inline constexpr const char* kSplitNames[] = {"kfold5", "official", "ratio"};

struct Paths {
  std::string dataset_root;  // falls back to $ICBHI_ROOT
  std::string cache_dir = "cache";
  std::string out_dir = "out";
  std::string index;  // empty: <out_dir>/index.json

  std::filesystem::path index_path() const {
    return index.empty() ? std::filesystem::path(out_dir) / "index.json"
                         : std::filesystem::path(index);
  }
};

struct ExperimentConfig {
  std::string preset;
  int task = 1;
  dsp::FrontEnd frontend = dsp::FrontEnd::LogMel;
  bool z_normalize = false;
  std::size_t patch_width = 64;
  double overlap = 0.0;
  bool mixup = false;
  MixupConfig mixup_cfg;
  std::string split = "kfold5";
  std::vector<int> folds;  // 1-based test folds; empty means every fold
  models::Arch model = models::Arch::Cdnn;
  std::size_t experts = models::kDefaultExperts;
  std::vector<std::size_t> widths;          // empty: paper trunk widths
  std::vector<std::size_t> student_widths;  // empty: paper student widths
  double lr = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch = 100;
  std::uint64_t seed = 0;
  double gamma = 0.5;
  std::string aggregation = "pool";  // or "mean" (per-fold scores averaged)
  // Held-out ICBHI score every n epochs in the history (0: never).
  std::size_t eval_every = 1;
  // Per-front-end parameters; kind and z_normalize are taken from above.
  dsp::FrontendConfig frontend_options;
  Paths paths;

  std::size_t classes() const { return task == 1 ? kNumCycleClasses : kNumDiseaseClasses; }
  Task metric_task() const { return task == 1 ? Task::Anomaly : Task::Disease; }
  models::LossKind loss() const {
    return mixup ? models::LossKind::KL : models::LossKind::CrossEntropy;
  }

  void validate() const {
    if (task != 1 && task != 2) throw UsageError("task must be 1 or 2");
    if (patch_width == 0) throw UsageError("patch width must be positive");
    patch_hop(patch_width, overlap);
    if (split != "kfold5" && split != "official" && split != "ratio")
      throw UsageError("unknown split '" + split + "' (expected kfold5, official or ratio)");
    for (int f : folds)
      if (f < 1 || (split == "kfold5" && f > 5) || (split != "kfold5" && f != 1))
        throw UsageError("fold " + std::to_string(f) + " is out of range for split " + split);
    if (model == models::Arch::CnnMoe && experts == 0) throw UsageError("cnn_moe needs K >= 1");
    if (!(lr > 0.0) || epochs == 0 || batch == 0)
      throw UsageError("lr, epochs and batch must be positive");
    if (!(gamma >= 0.0)) throw UsageError("gamma must be non-negative");
    if (aggregation != "pool" && aggregation != "mean")
      throw UsageError("aggregation must be pool or mean");
    mixup_cfg.validate();
    const auto& fo = frontend_options;
    if (!(fo.mel.fmin >= 0.0 && fo.mel.fmin < fo.mel.fmax && fo.mel.fmax <= dsp::kTargetRate / 2.0))
      throw UsageError("logmel needs 0 <= fmin < fmax <= 8000");
    if (!(fo.gammatone.fmin > 0.0 && fo.gammatone.fmin < fo.gammatone.fmax &&
          fo.gammatone.fmax <= dsp::kTargetRate / 2.0) ||
        fo.gammatone.order < 1 || !(fo.gammatone.bandwidth_scale > 0.0))
      throw UsageError("gamma needs 0 < fmin < fmax <= 8000, order >= 1, bandwidth_scale > 0");
    if (fo.mfcc.mel_bands < dsp::kNumBins) throw UsageError("mfcc needs mel_bands >= 64");
    if (fo.cqt.bins_per_octave < 1 || !(fo.cqt.fmin > 0.0) ||
        !(fo.cqt.max_fraction_of_nyquist > 0.0 && fo.cqt.max_fraction_of_nyquist <= 1.0))
      throw UsageError("cqt needs bins_per_octave >= 1, fmin > 0, 0 < max_fraction_of_nyquist <= 1");
    const double top = fo.cqt.fmin * std::pow(2.0, static_cast<double>(dsp::kNumBins - 1) /
                                                       fo.cqt.bins_per_octave);
    if (top > fo.cqt.max_fraction_of_nyquist * dsp::kTargetRate / 2.0)
      throw UsageError("cqt geometry puts its top bin above the allowed limit");
  }

  // Test subsets to run: fold indices for kfold5, the test subset otherwise.
  std::vector<int> test_subsets() const {
    if (split != "kfold5") return {kTestSubset};
    std::vector<int> out;
    if (folds.empty())
      for (int f = 0; f < 5; ++f) out.push_back(f);
    else
      for (int f : folds) out.push_back(f - 1);
    return out;
  }

  models::TrainConfig train_config() const {
    models::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch = batch;
    tc.lr = lr;
    tc.seed = seed;
    tc.loss = loss();
    tc.mixup = mixup;
    tc.mixup_cfg = mixup_cfg;
    tc.mixup_cfg.normal_class = static_cast<std::size_t>(CycleLabel4::Normal);
    tc.mixup_cfg.both_class = static_cast<std::size_t>(CycleLabel4::Both);
    return tc;
  }

  models::NetworkSpec network_spec() const {
    return {model, classes(), model == models::Arch::CnnMoe ? experts : 0,
            model == models::Arch::Student ? student_widths : widths};
  }
};

// ------------------------------------------------------------------ presets

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.model = models::Arch::CnnMoe;
  c.experts = models::kDefaultExperts;
  c.mixup = true;
  c.split = "kfold5";
  c.epochs = 100;
  c.batch = 100;
  if (name == "task1-final") {
    c.task = 1;
    c.frontend = dsp::FrontEnd::Gamma;
    c.patch_width = 64;
    c.overlap = 0.0;
    c.mixup_cfg.pairing = MixupPairing::NormalVsAnomaly;
  } else if (name == "task2-final") {
    c.task = 2;
    c.frontend = dsp::FrontEnd::LogMel;
    c.patch_width = 128;
    c.overlap = 0.5;
    c.mixup_cfg.pairing = MixupPairing::Random;
  } else {
    throw UsageError("unknown preset '" + name + "' (expected task1-final or task2-final)");
  }
  return c;
}

// --------------------------------------------------------------------- json

inline std::string pairing_name(MixupPairing p) {
  return p == MixupPairing::Random ? "random" : "normal_vs_anomaly";
}
inline MixupPairing parse_pairing(const std::string& s) {
  if (s == "random") return MixupPairing::Random;
  if (s == "normal_vs_anomaly") return MixupPairing::NormalVsAnomaly;
  throw UsageError("unknown mixup pairing '" + s + "'");
}

// Options of one front-end. Row counts are fixed at 64 and not listed.
inline json frontend_options_json(const dsp::FrontendConfig& fo, dsp::FrontEnd kind) {
  switch (kind) {
    case dsp::FrontEnd::LogMel:
      return {{"fmin", fo.mel.fmin}, {"fmax", fo.mel.fmax}, {"pool_pairs", fo.mel.pool_pairs}};
    case dsp::FrontEnd::Gamma:
      return {{"order", fo.gammatone.order},
              {"fmin", fo.gammatone.fmin},
              {"fmax", fo.gammatone.fmax},
              {"bandwidth_scale", fo.gammatone.bandwidth_scale}};
    case dsp::FrontEnd::MFCC:
      return {{"mel_bands", fo.mfcc.mel_bands}};
    case dsp::FrontEnd::CQT:
      return {{"bins_per_octave", fo.cqt.bins_per_octave},
              {"fmin", fo.cqt.fmin},
              {"max_fraction_of_nyquist", fo.cqt.max_fraction_of_nyquist}};
  }
  return json::object();
}

inline json frontend_options_json(const dsp::FrontendConfig& fo) {
  json j = json::object();
  for (auto k : {dsp::FrontEnd::LogMel, dsp::FrontEnd::Gamma, dsp::FrontEnd::MFCC, dsp::FrontEnd::CQT})
    j[std::string(dsp::to_string(k))] = frontend_options_json(fo, k);
  return j;
}

inline void apply_frontend_options(dsp::FrontendConfig& fo, const json& j) {
  if (!j.is_object()) throw UsageError("frontend_options must be an object");
  for (const auto& [name, v] : j.items()) {
    const auto kind = dsp::parse_frontend(name);
    const auto known = frontend_options_json(fo, kind);
    if (!v.is_object()) throw UsageError("frontend_options." + name + " must be an object");
    for (const auto& [k, _] : v.items())
      if (!known.contains(k)) throw UsageError("unknown option frontend_options." + name + "." + k);
    switch (kind) {
      case dsp::FrontEnd::LogMel:
        fo.mel.fmin = v.value("fmin", fo.mel.fmin);
        fo.mel.fmax = v.value("fmax", fo.mel.fmax);
        fo.mel.pool_pairs = v.value("pool_pairs", fo.mel.pool_pairs);
        break;
      case dsp::FrontEnd::Gamma:
        fo.gammatone.order = v.value("order", fo.gammatone.order);
        fo.gammatone.fmin = v.value("fmin", fo.gammatone.fmin);
        fo.gammatone.fmax = v.value("fmax", fo.gammatone.fmax);
        fo.gammatone.bandwidth_scale = v.value("bandwidth_scale", fo.gammatone.bandwidth_scale);
        break;
      case dsp::FrontEnd::MFCC:
        fo.mfcc.mel_bands = v.value("mel_bands", fo.mfcc.mel_bands);
        break;
      case dsp::FrontEnd::CQT:
        fo.cqt.bins_per_octave = v.value("bins_per_octave", fo.cqt.bins_per_octave);
        fo.cqt.fmin = v.value("fmin", fo.cqt.fmin);
        fo.cqt.max_fraction_of_nyquist = v.value("max_fraction_of_nyquist", fo.cqt.max_fraction_of_nyquist);
        break;
    }
  }
}

// Everything that influences results; paths are excluded from the hash.
inline json settings_json(const ExperimentConfig& c) {
  return {{"preset", c.preset},
          {"task", c.task},
          {"frontend", std::string(dsp::to_string(c.frontend))},
          {"z_normalize", c.z_normalize},
          {"patch_width", c.patch_width},
          {"overlap", c.overlap},
          {"mixup",
           {{"enabled", c.mixup},
            {"distribution", c.mixup_cfg.distribution == MixupDistribution::Beta ? "beta" : "uniform"},
            {"a", c.mixup_cfg.a},
            {"b", c.mixup_cfg.b},
            {"pairing", pairing_name(c.mixup_cfg.pairing)},
            {"both_as_partner", c.mixup_cfg.both_as_partner}}},
          {"loss", models::to_string(c.loss())},
          {"split", c.split},
          {"folds", c.folds},
          {"model", models::to_string(c.model)},
          {"experts", c.experts},
          {"widths", c.widths},
          {"student_widths", c.student_widths},
          {"lr", c.lr},
          {"epochs", c.epochs},
          {"batch", c.batch},
          {"seed", c.seed},
          {"gamma", c.gamma},
          {"aggregation", c.aggregation},
          {"eval_every", c.eval_every},
          {"frontend_options", frontend_options_json(c.frontend_options)}};
}

inline json to_json(const ExperimentConfig& c) {
  json j = settings_json(c);
  j["paths"] = {{"dataset_root", c.paths.dataset_root},
                {"cache_dir", c.paths.cache_dir},
                {"out_dir", c.paths.out_dir},
                {"index", c.paths.index}};
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", io::crc32_of(settings_json(c).dump()));
  return buf;
}

// Applies the keys present in `j` on top of `c`. Unknown keys are errors so
// typos do not silently fall back to defaults.
inline void apply_json(ExperimentConfig& c, const json& j) {
  static const std::set<std::string> known = {
      "preset", "task",  "frontend", "z_normalize", "patch_width", "overlap", "mixup",
      "loss",   "split", "folds",    "model",       "experts",     "widths",  "student_widths",
      "lr",     "epochs", "batch",   "seed",        "gamma",       "aggregation", "paths",
      "eval_every", "frontend_options"};
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw UsageError("unknown config key '" + k + "'");
  try {
    if (j.contains("preset") && !j["preset"].get<std::string>().empty()) {
      const auto paths = c.paths;
      c = preset(j["preset"].get<std::string>());
      c.paths = paths;
    }
    if (j.contains("task")) c.task = j["task"].get<int>();
    if (j.contains("frontend")) c.frontend = dsp::parse_frontend(j["frontend"].get<std::string>());
    if (j.contains("z_normalize")) c.z_normalize = j["z_normalize"].get<bool>();
    if (j.contains("patch_width")) c.patch_width = j["patch_width"].get<std::size_t>();
    if (j.contains("overlap")) c.overlap = j["overlap"].get<double>();
    if (j.contains("mixup")) {
      const auto& m = j["mixup"];
      if (m.is_boolean()) {
        c.mixup = m.get<bool>();
      } else {
        c.mixup = m.value("enabled", c.mixup);
        if (m.contains("distribution")) {
          const auto d = m["distribution"].get<std::string>();
          if (d != "beta" && d != "uniform") throw UsageError("mixup distribution must be beta or uniform");
          c.mixup_cfg.distribution = d == "beta" ? MixupDistribution::Beta : MixupDistribution::Uniform;
        }
        c.mixup_cfg.a = m.value("a", c.mixup_cfg.a);
        c.mixup_cfg.b = m.value("b", c.mixup_cfg.b);
        if (m.contains("pairing")) c.mixup_cfg.pairing = parse_pairing(m["pairing"].get<std::string>());
        c.mixup_cfg.both_as_partner = m.value("both_as_partner", c.mixup_cfg.both_as_partner);
      }
    }
    if (j.contains("loss") && models::parse_loss(j["loss"].get<std::string>()) != c.loss())
      throw UsageError("loss follows mixup: kl with mixup, cross_entropy without");
    if (j.contains("split")) c.split = j["split"].get<std::string>();
    if (j.contains("folds")) c.folds = j["folds"].get<std::vector<int>>();
    if (j.contains("model")) c.model = models::parse_arch(j["model"].get<std::string>());
    if (j.contains("experts")) c.experts = j["experts"].get<std::size_t>();
    if (j.contains("widths")) c.widths = j["widths"].get<std::vector<std::size_t>>();
    if (j.contains("student_widths"))
      c.student_widths = j["student_widths"].get<std::vector<std::size_t>>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch")) c.batch = j["batch"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("aggregation")) c.aggregation = j["aggregation"].get<std::string>();
    if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<std::size_t>();
    if (j.contains("frontend_options")) apply_frontend_options(c.frontend_options, j["frontend_options"]);
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      c.paths.dataset_root = p.value("dataset_root", c.paths.dataset_root);
      c.paths.cache_dir = p.value("cache_dir", c.paths.cache_dir);
      c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
      c.paths.index = p.value("index", c.paths.index);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  apply_json(c, j);
  c.validate();
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace auscult::experiment

#endif  // AUSCULT_EXPERIMENT_CONFIG_HPP_
