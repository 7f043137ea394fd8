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

#ifndef AUSCULT_EXPERIMENT_PIPELINE_HPP_
#define AUSCULT_EXPERIMENT_PIPELINE_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auscult/dsp/frontend.hpp"
#include "auscult/dsp/resample.hpp"
#include "auscult/experiment/config.hpp"
#include "auscult/icbhi_data.hpp"
#include "auscult/metrics.hpp"
#include "auscult/models/train.hpp"
#include "auscult/patching.hpp"

namespace auscult::experiment {

namespace fs = std::filesystem;

// One classification unit: a respiratory cycle (Task 1) or a whole
// recording (Task 2).
struct Instance {
  std::string id;
  std::string recording_id;
  std::optional<std::size_t> cycle;
  std::size_t label = 0;
};

inline std::vector<Instance> task_instances(const DatasetIndex& index, int task,
                                            std::span<const std::string> recordings) {
  std::vector<Instance> out;
  for (const auto& id : recordings) {
    const auto* r = index.find(id);
    if (!r) throw DataError("split references unknown recording " + id);
    if (task == 2) {
      out.push_back({id, id, std::nullopt, static_cast<std::size_t>(r->group())});
      continue;
    }
    for (std::size_t c = 0; c < r->cycles.size(); ++c)
      out.push_back({id + "#" + std::to_string(c), id, c,
                     static_cast<std::size_t>(r->cycles[c].label())});
  }
  return out;
}

inline std::vector<std::string> all_recordings(const DatasetIndex& index) {
  std::vector<std::string> ids;
  for (const auto& r : index.recordings) ids.push_back(r.meta.recording_id);
  return ids;
}

// 16 kHz audio of one instance; cycles are tiled to at least 5 s.
inline AudioClip instance_audio(const AudioClip& recording_16k, const RecordingEntry& r,
                                const Instance& inst) {
  if (!inst.cycle) return recording_16k;
  return tile_to_min_duration(extract_cycle_audio(recording_16k, r.cycles[*inst.cycle], inst.cycle),
                              5.0);
}

inline dsp::FrontendConfig frontend_config(const ExperimentConfig& c) {
  dsp::FrontendConfig fe = c.frontend_options;
  fe.kind = c.frontend;
  fe.z_normalize = c.z_normalize;
  return fe;
}

// ------------------------------------------------------------ feature cache

struct CacheStats {
  std::size_t reused = 0;
  std::size_t computed = 0;
  std::size_t corrupt = 0;
};

inline json to_json(const CacheStats& s) {
  return {{"reused", s.reused}, {"computed", s.computed}, {"corrupt", s.corrupt}};
}

// <cache>/<frontend>[_z][_<options crc>]/<instance id with '#' as '_c'>.ausf
// The options suffix appears only when the front-end's options differ from
// the defaults.
inline fs::path cache_entry(const fs::path& cache_dir, const dsp::FrontendConfig& fe,
                            const Instance& inst) {
  std::string name = inst.id;
  if (auto p = name.find('#'); p != std::string::npos) name.replace(p, 1, "_c");
  std::string dir = std::string(dsp::to_string(fe.kind)) + (fe.z_normalize ? "_z" : "");
  const auto opts = frontend_options_json(fe, fe.kind);
  if (opts != frontend_options_json(dsp::FrontendConfig{}, fe.kind)) {
    char buf[10];
    std::snprintf(buf, sizeof buf, "_%08x", io::crc32_of(opts.dump()));
    dir += buf;
  }
  return cache_dir / dir / (name + ".ausf");
}

// Calls `fn` with the spectrogram of every instance, reading valid cache
// entries and recomputing missing or corrupt ones. Audio is decoded once per
// recording.
inline void for_each_feature(const DatasetIndex& index, std::span<const Instance> instances,
                             const dsp::FrontendConfig& fe, const fs::path& cache_dir,
                             CacheStats& stats, std::ostream* log,
                             const std::function<void(const Instance&, const dsp::Spectrogram&)>& fn) {
  std::string loaded_id;
  AudioClip audio;
  for (const auto& inst : instances) {
    const auto path = cache_entry(cache_dir, fe, inst);
    std::optional<dsp::Spectrogram> spec;
    if (fs::exists(path)) {
      try {
        spec = dsp::read_feature_cache(path);
        if (spec->frontend != fe.kind) throw DataError(path.string() + ": frontend tag mismatch");
        ++stats.reused;
      } catch (const DataError& e) {
        if (log) *log << "warning: " << e.what() << "; recomputing\n";
        ++stats.corrupt;
        spec.reset();
      }
    }
    if (!spec) {
      const auto* r = index.find(inst.recording_id);
      if (!r) throw DataError("unknown recording " + inst.recording_id);
      if (loaded_id != inst.recording_id) {
        audio = dsp::resample(read_wav(r->meta.file_path));
        audio.provenance.recording_id = r->meta.recording_id;
        audio.provenance.patient_id = r->meta.patient_id;
        loaded_id = inst.recording_id;
      }
      spec = dsp::compute_spectrogram(instance_audio(audio, *r, inst), fe);
      fs::create_directories(path.parent_path());
      dsp::write_feature_cache(path, *spec);
      ++stats.computed;
    }
    if (fn) fn(inst, *spec);
  }
}

inline std::vector<Patch> build_patches(const DatasetIndex& index, std::span<const Instance> instances,
                                        const ExperimentConfig& cfg, CacheStats& stats,
                                        std::ostream* log) {
  std::vector<Patch> out;
  const std::size_t classes = cfg.classes();
  for_each_feature(index, instances, frontend_config(cfg), cfg.paths.cache_dir, stats, log,
                   [&](const Instance& inst, const dsp::Spectrogram& spec) {
                     auto ps = split_patches(spec, cfg.patch_width, cfg.overlap,
                                             one_hot(inst.label, classes), inst.id);
                     for (auto& p : ps) {
                       p.origin.cycle_index = inst.cycle;
                       out.push_back(std::move(p));
                     }
                   });
  return out;
}

// ---------------------------------------------------------------- evaluation

// Instance-level confusion matrix from mean patch posteriors.
template <class T>
ConfusionMatrix evaluate(models::Network<T>& net, const std::vector<Patch>& patches,
                         std::span<const Instance> instances, Task task, json* predictions = nullptr) {
  const auto probs = models::predict(net, patches);
  const std::size_t c = net.classes();
  std::map<std::string, std::vector<std::vector<double>>> by_instance;
  for (std::size_t i = 0; i < patches.size(); ++i)
    by_instance[patches[i].origin.instance_id].emplace_back(probs.data() + i * c,
                                                            probs.data() + (i + 1) * c);
  ConfusionMatrix cm(task);
  for (const auto& inst : instances) {
    const auto it = by_instance.find(inst.id);
    if (it == by_instance.end()) throw DataError("no patches for instance " + inst.id);
    const auto mean = aggregate_posteriors(it->second);
    const auto pred = predict_label(mean);
    cm.add(inst.label, pred);
    if (predictions) predictions->push_back({{"id", inst.id}, {"truth", inst.label}, {"predicted", pred}});
  }
  return cm;
}

// --------------------------------------------------------------------- folds

inline SplitPlan split_plan(const std::map<std::string, SplitPlan>& splits, const std::string& name) {
  auto it = splits.find(name);
  if (it == splits.end())
    throw DataError("index has no '" + name + "' split; run prepare" +
                    (name == "official" ? " with the official train/test list in the dataset root" : ""));
  return it->second;
}

inline std::pair<std::vector<std::string>, std::vector<std::string>> train_test_ids(
    const SplitPlan& plan, int subset) {
  if (plan.scheme_name == "kfold") return {plan.non_members(subset), plan.members(subset)};
  return {plan.members(kTrainSubset), plan.members(kTestSubset)};
}

struct FoldOutcome {
  int subset = 0;
  std::string tag;
  ConfusionMatrix cm;
  fs::path checkpoint;
  std::uint32_t checkpoint_crc = 0;
  std::size_t train_patches = 0;
  std::size_t test_instances = 0;
  json predictions = json::array();
};

inline std::string crc_hex(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// CRC of a sealed blob minus its trailer. Hashing the whole blob would give
// the same CRC residue for every input.
inline std::uint32_t sealed_digest(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw DataError("sealed blob shorter than its trailer");
  return io::crc32_of(bytes.first(bytes.size() - 4));
}

inline json to_json(const FoldOutcome& f) {
  return {{"subset", f.tag},
          {"confusion", confusion_json(f.cm)},
          {"scores", scores_json(f.cm)},
          {"checkpoint", f.checkpoint.string()},
          {"checkpoint_crc32", crc_hex(f.checkpoint_crc)},
          {"train_patches", f.train_patches},
          {"test_instances", f.test_instances},
          {"predictions", f.predictions}};
}

// Trains one network on the subset's training side and scores it on the
// held-out side. Checkpoint and per-epoch history land in `run_dir`.
inline FoldOutcome run_fold(const ExperimentConfig& cfg, const DatasetIndex& index,
                            const SplitPlan& plan, int subset, const fs::path& run_dir,
                            CacheStats& stats, std::ostream* log) {
  FoldOutcome out;
  out.subset = subset;
  out.tag = plan.tag(subset);
  const auto [train_ids, test_ids] = train_test_ids(plan, subset);
  if (train_ids.empty() || test_ids.empty())
    throw DataError("split " + cfg.split + " leaves " + out.tag + " with an empty side");
  const auto train_inst = task_instances(index, cfg.task, train_ids);
  const auto test_inst = task_instances(index, cfg.task, test_ids);
  const auto train_patches = build_patches(index, train_inst, cfg, stats, log);
  const auto test_patches = build_patches(index, test_inst, cfg, stats, log);
  out.train_patches = train_patches.size();
  out.test_instances = test_inst.size();

  if (log)
    *log << out.tag << ": " << train_patches.size() << " training patches, " << test_inst.size()
         << " test instances\n";
  models::Network<float> net(cfg.network_spec(), cfg.seed + static_cast<std::uint64_t>(subset));
  auto tc = cfg.train_config();
  tc.seed = cfg.seed + static_cast<std::uint64_t>(subset);
  models::EpochHook<float> hook;
  if (cfg.eval_every > 0)
    hook = [&](models::Network<float>& n, std::size_t epoch) -> std::optional<double> {
      if ((epoch + 1) % cfg.eval_every != 0) return std::nullopt;
      const auto cm = evaluate(n, test_patches, test_inst, cfg.metric_task());
      try {
        return score(cm, subtasks_of(cfg.metric_task()).front()).icbhi.value();
      } catch (const MetricError&) {
        return std::nullopt;  // the held-out side lacks a class the score needs
      }
    };
  const auto hist = models::train(net, train_patches, tc, hook, log);
  out.cm = evaluate(net, test_patches, test_inst, cfg.metric_task(), &out.predictions);

  fs::create_directories(run_dir);
  out.checkpoint = run_dir / (out.tag + ".ckpt");
  const auto bytes = net.encode();
  io::write_file_atomic(out.checkpoint, bytes);
  out.checkpoint_crc = sealed_digest(bytes);
  io::write_text_atomic(run_dir / (out.tag + "_history.csv"), hist.to_csv());
  return out;
}

}  // namespace auscult::experiment

#endif  // AUSCULT_EXPERIMENT_PIPELINE_HPP_
