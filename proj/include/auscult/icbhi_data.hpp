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

#ifndef AUSCULT_ICBHI_DATA_HPP_
#define AUSCULT_ICBHI_DATA_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "auscult/audio.hpp"
#include "auscult/error.hpp"
#include "auscult/labels.hpp"

namespace auscult {

// Offsets may overrun the audio by this much (annotation jitter); such cycles
// are clamped to the clip end instead of being rejected.
inline constexpr double kAnnotationSlackSeconds = 0.050;

struct RecordingMeta {
  std::string recording_id;
  std::string patient_id;
  std::filesystem::path file_path;
  int sample_rate_native = 0;
  double duration = 0.0;
};

struct CycleAnnotation {
  double onset = 0.0;
  double offset = 0.0;
  bool has_crackle = false;
  bool has_wheeze = false;

  CycleLabel4 label() const noexcept { return label_cycle(has_crackle, has_wheeze); }
  double length() const noexcept { return offset - onset; }
};

namespace data_detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Splits on whitespace, commas and semicolons.
inline std::vector<std::string> fields(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ';') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace data_detail

// One cycle per non-empty line: onset offset crackle wheeze.
inline std::vector<CycleAnnotation> parse_annotation(std::string_view text) {
  std::vector<CycleAnnotation> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    auto cols = data_detail::fields(line);
    if (cols.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = ", line " + std::to_string(line_no);
    if (cols.size() != 4)
      throw DataError("expected 4 columns, got " + std::to_string(cols.size()) + where);
    CycleAnnotation ann;
    auto onset = data_detail::to_double(cols[0]);
    auto offset = data_detail::to_double(cols[1]);
    if (!onset || !offset) throw DataError("non-numeric time column" + where);
    ann.onset = *onset;
    ann.offset = *offset;
    if (ann.onset < 0.0) throw DataError("negative onset" + where);
    if (ann.offset <= ann.onset) throw DataError("offset before onset" + where);
    for (int f = 0; f < 2; ++f) {
      const std::string& flag = cols[2 + f];
      if (flag != "0" && flag != "1")
        throw DataError("flag must be 0 or 1, got '" + flag + "'" + where);
      (f == 0 ? ann.has_crackle : ann.has_wheeze) = flag == "1";
    }
    out.push_back(ann);
    if (end == text.size()) break;
  }
  return out;
}

inline std::string format_annotation(const std::vector<CycleAnnotation>& cycles) {
  std::ostringstream os;
  os << std::setprecision(9);
  for (const auto& c : cycles)
    os << c.onset << '\t' << c.offset << '\t' << int(c.has_crackle) << '\t'
       << int(c.has_wheeze) << '\n';
  return os.str();
}

inline DiseaseGroup3 group_diagnosis(std::string_view diagnosis) {
  const std::string d = data_detail::lower(data_detail::trim(diagnosis));
  if (d == "copd" || d == "bronchiectasis" || d == "asthma") return DiseaseGroup3::Chronic;
  if (d == "urti" || d == "lrti" || d == "pneumonia" || d == "bronchiolitis")
    return DiseaseGroup3::NonChronic;
  if (d == "healthy") return DiseaseGroup3::Healthy;
  throw DataError("unknown diagnosis '" + std::string(diagnosis) + "'");
}

// Two-column table: patient_id, diagnosis. Lines starting with '#' and a
// header row whose second column is not a known diagnosis are skipped.
inline std::map<std::string, std::string> parse_diagnosis_table(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto cols = data_detail::fields(line);
    if (cols.empty() || cols[0][0] == '#') continue;
    if (cols.size() != 2)
      throw DataError("diagnosis table: expected 2 columns, line " + std::to_string(line_no));
    try {
      group_diagnosis(cols[1]);
    } catch (const DataError&) {
      if (line_no == 1) continue;  // header
      throw DataError("diagnosis table: unknown diagnosis '" + cols[1] + "', line " +
                      std::to_string(line_no));
    }
    out[cols[0]] = cols[1];
  }
  return out;
}

// ICBHI file names start with the patient number: 101_1b1_Al_sc_Meditron.
inline std::string patient_of(std::string_view recording_id) {
  auto pos = recording_id.find('_');
  return std::string(recording_id.substr(0, pos));
}

struct RecordingEntry {
  RecordingMeta meta;
  std::vector<CycleAnnotation> cycles;
  std::string diagnosis;

  DiseaseGroup3 group() const { return group_diagnosis(diagnosis); }
};

struct DatasetIndex {
  std::filesystem::path root;
  std::vector<RecordingEntry> recordings;  // sorted by recording_id
  std::map<std::string, std::string> diagnoses;
  std::vector<std::string> warnings;

  std::size_t cycle_count() const {
    std::size_t n = 0;
    for (const auto& r : recordings) n += r.cycles.size();
    return n;
  }
  std::set<std::string> patients() const {
    std::set<std::string> out;
    for (const auto& r : recordings) out.insert(r.meta.patient_id);
    return out;
  }
  std::array<std::size_t, 4> cycle_class_counts() const {
    std::array<std::size_t, 4> counts{};
    for (const auto& r : recordings)
      for (const auto& c : r.cycles) ++counts[static_cast<std::size_t>(c.label())];
    return counts;
  }
  const RecordingEntry* find(std::string_view id) const {
    auto it = std::lower_bound(recordings.begin(), recordings.end(), id,
                               [](const RecordingEntry& e, std::string_view key) {
                                 return e.meta.recording_id < key;
                               });
    return it != recordings.end() && it->meta.recording_id == id ? &*it : nullptr;
  }
};

inline bool is_diagnosis_file(const std::filesystem::path& p) {
  return data_detail::lower(p.filename().string()).find("diagnosis") != std::string::npos;
}
inline bool is_split_file(const std::filesystem::path& p) {
  auto n = data_detail::lower(p.filename().string());
  return n.find("train_test") != std::string::npos || n.find("split") != std::string::npos;
}

// Indexes a corpus directory: <id>.wav + <id>.txt per recording plus one
// diagnosis table. Incomplete or malformed recordings are reported in
// `warnings` and left out of `recordings`.
inline DatasetIndex scan_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw DataError("dataset root is not a readable directory: " + root.string());
  DatasetIndex index;
  index.root = root;
  std::map<std::string, fs::path> wavs, texts;
  std::optional<fs::path> diagnosis_path;
  fs::directory_iterator it(root, ec);
  if (ec) throw DataError("cannot read dataset root " + root.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    auto ext = data_detail::lower(p.extension().string());
    if (is_diagnosis_file(p) && (ext == ".txt" || ext == ".csv")) {
      diagnosis_path = p;
    } else if (ext == ".wav") {
      wavs[p.stem().string()] = p;
    } else if (ext == ".txt" && !is_split_file(p)) {
      texts[p.stem().string()] = p;
    }
  }
  if (wavs.empty() && texts.empty()) return index;
  if (!diagnosis_path)
    throw DataError("no diagnosis table (*diagnosis*.txt|csv) found under " + root.string());
  index.diagnoses = parse_diagnosis_table(data_detail::read_text(*diagnosis_path));

  for (const auto& [id, txt] : texts)
    if (!wavs.count(id)) index.warnings.push_back(id + ": annotation without audio file");
  for (const auto& [id, wav] : wavs) {
    auto txt = texts.find(id);
    if (txt == texts.end()) {
      index.warnings.push_back(id + ": audio without annotation file");
      continue;
    }
    RecordingEntry rec;
    rec.meta.recording_id = id;
    rec.meta.patient_id = patient_of(id);
    rec.meta.file_path = wav;
    auto diag = index.diagnoses.find(rec.meta.patient_id);
    if (diag == index.diagnoses.end()) {
      index.warnings.push_back(id + ": patient " + rec.meta.patient_id +
                               " missing from diagnosis table");
      continue;
    }
    rec.diagnosis = diag->second;
    try {
      auto info = read_wav_info(wav);
      rec.meta.sample_rate_native = info.sample_rate;
      rec.meta.duration = info.duration();
      if (rec.meta.duration <= 0.0) throw DataError("empty audio");
      rec.cycles = parse_annotation(data_detail::read_text(txt->second));
    } catch (const DataError& e) {
      index.warnings.push_back(id + ": " + e.what());
      continue;
    }
    std::vector<CycleAnnotation> kept;
    for (std::size_t i = 0; i < rec.cycles.size(); ++i) {
      const auto& c = rec.cycles[i];
      if (c.offset > rec.meta.duration + kAnnotationSlackSeconds) {
        index.warnings.push_back(id + ": cycle " + std::to_string(i) +
                                 " ends beyond the recording, dropped");
        continue;
      }
      kept.push_back(c);
    }
    rec.cycles = std::move(kept);
    index.recordings.push_back(std::move(rec));
  }
  return index;
}

// Samples [round(onset*sr), round(offset*sr)) with the offset clamped to the
// clip end when it overruns by at most the annotation slack.
inline AudioClip extract_cycle_audio(const AudioClip& clip, const CycleAnnotation& ann,
                                     std::optional<std::size_t> cycle_index = std::nullopt) {
  if (ann.onset < 0.0 || ann.offset <= ann.onset)
    throw DataError("extract_cycle_audio: invalid annotation interval");
  if (ann.offset > clip.duration() + kAnnotationSlackSeconds)
    throw DataError("extract_cycle_audio: annotation ends beyond the clip");
  const auto sr = static_cast<double>(clip.sample_rate);
  const auto n = static_cast<long long>(clip.samples.size());
  long long begin = std::clamp<long long>(std::llround(ann.onset * sr), 0, n);
  long long end = std::clamp<long long>(std::llround(ann.offset * sr), 0, n);
  if (end <= begin) throw DataError("extract_cycle_audio: empty slice after clamping");
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + begin, clip.samples.begin() + end);
  out.provenance = clip.provenance;
  out.provenance.cycle_index = cycle_index;
  out.provenance.cycle_label = ann.label();
  return out;
}

// Repeats a short clip end-to-end ceil(min/duration) times. Clips already at
// least `min_seconds` long are returned unchanged; the result is never cut.
inline AudioClip tile_to_min_duration(const AudioClip& clip, double min_seconds = 5.0) {
  if (clip.empty() || clip.sample_rate <= 0)
    throw DataError("tile_to_min_duration: empty clip");
  const auto n = clip.samples.size();
  const auto min_samples =
      static_cast<std::size_t>(std::llround(min_seconds * clip.sample_rate));
  if (n >= min_samples) return clip;
  const std::size_t tiles = (min_samples + n - 1) / n;
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.provenance = clip.provenance;
  out.samples.reserve(tiles * n);
  for (std::size_t t = 0; t < tiles; ++t)
    out.samples.insert(out.samples.end(), clip.samples.begin(), clip.samples.end());
  return out;
}

// ---------------------------------------------------------------------------
// Splits

struct KFold {
  int k = 5;
  std::uint64_t seed = 0;
};
struct OfficialList {
  std::map<std::string, std::string> assignment;  // recording_id -> train|test
};
struct RatioSplit {
  double train_frac = 0.6;
  std::uint64_t seed = 0;
  bool patient_disjoint = true;
};
using SplitScheme = std::variant<KFold, OfficialList, RatioSplit>;

inline constexpr int kTrainSubset = 0;
inline constexpr int kTestSubset = 1;

// For k-fold the subset is the fold number; otherwise kTrainSubset/kTestSubset.
struct SplitPlan {
  std::string scheme_name;  // "kfold", "official", "ratio"
  int num_subsets = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignment;

  std::vector<std::string> members(int subset) const {
    std::vector<std::string> out;
    for (const auto& [id, s] : assignment)
      if (s == subset) out.push_back(id);
    return out;
  }
  std::vector<std::string> non_members(int subset) const {
    std::vector<std::string> out;
    for (const auto& [id, s] : assignment)
      if (s != subset) out.push_back(id);
    return out;
  }
  std::string tag(int subset) const {
    if (scheme_name == "kfold") return "fold" + std::to_string(subset);
    return subset == kTrainSubset ? "train" : "test";
  }
};

inline OfficialList parse_official_split(std::string_view text) {
  OfficialList list;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto cols = data_detail::fields(line);
    if (cols.empty() || cols[0][0] == '#') continue;
    if (cols.size() != 2)
      throw DataError("split file: expected 2 columns, line " + std::to_string(line_no));
    auto subset = data_detail::lower(cols[1]);
    if (subset != "train" && subset != "test")
      throw DataError("split file: subset must be train or test, line " +
                      std::to_string(line_no));
    list.assignment[cols[0]] = subset;
  }
  return list;
}

namespace data_detail {

inline void check_patient_disjoint(const DatasetIndex& index, const SplitPlan& plan) {
  std::map<std::string, std::set<int>> subsets_of_patient;
  for (const auto& [id, subset] : plan.assignment)
    subsets_of_patient[index.find(id)->meta.patient_id].insert(subset);
  for (const auto& [patient, subsets] : subsets_of_patient)
    if (subsets.size() > 1)
      throw DataError("split places patient " + patient + " in both train and test");
}

}  // namespace data_detail

inline SplitPlan make_splits(const DatasetIndex& index, const SplitScheme& scheme) {
  SplitPlan plan;
  std::vector<std::string> ids;
  ids.reserve(index.recordings.size());
  for (const auto& r : index.recordings) ids.push_back(r.meta.recording_id);

  if (const auto* kf = std::get_if<KFold>(&scheme)) {
    if (kf->k < 2) throw UsageError("kfold needs k >= 2");
    plan.scheme_name = "kfold";
    plan.num_subsets = kf->k;
    plan.seed = kf->seed;
    std::mt19937_64 rng(kf->seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < ids.size(); ++i)
      plan.assignment[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(kf->k));
  } else if (const auto* off = std::get_if<OfficialList>(&scheme)) {
    plan.scheme_name = "official";
    plan.num_subsets = 2;
    for (const auto& [id, subset] : off->assignment) {
      if (!index.find(id)) throw DataError("split file references unknown recording " + id);
      plan.assignment[id] = subset == "train" ? kTrainSubset : kTestSubset;
    }
    for (const auto& id : ids)
      if (!plan.assignment.count(id))
        throw DataError("split file does not assign recording " + id);
    data_detail::check_patient_disjoint(index, plan);
  } else {
    const auto& ratio = std::get<RatioSplit>(scheme);
    if (!(ratio.train_frac > 0.0 && ratio.train_frac < 1.0))
      throw UsageError("ratio split needs 0 < train_frac < 1");
    plan.scheme_name = "ratio";
    plan.num_subsets = 2;
    plan.seed = ratio.seed;
    std::mt19937_64 rng(ratio.seed);
    const auto target = static_cast<std::size_t>(
        std::llround(ratio.train_frac * static_cast<double>(ids.size())));
    if (ratio.patient_disjoint) {
      std::map<std::string, std::vector<std::string>> by_patient;
      for (const auto& r : index.recordings)
        by_patient[r.meta.patient_id].push_back(r.meta.recording_id);
      std::vector<std::string> patients;
      for (const auto& [p, _] : by_patient) patients.push_back(p);
      std::shuffle(patients.begin(), patients.end(), rng);
      std::size_t in_train = 0;
      for (const auto& p : patients) {
        const int subset = in_train < target ? kTrainSubset : kTestSubset;
        for (const auto& id : by_patient[p]) plan.assignment[id] = subset;
        if (subset == kTrainSubset) in_train += by_patient[p].size();
      }
    } else {
      std::shuffle(ids.begin(), ids.end(), rng);
      for (std::size_t i = 0; i < ids.size(); ++i)
        plan.assignment[ids[i]] = i < target ? kTrainSubset : kTestSubset;
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Index cache document

inline constexpr int kIndexSchemaVersion = 1;

inline nlohmann::json split_to_json(const SplitPlan& plan) {
  nlohmann::json j;
  j["scheme"] = plan.scheme_name;
  j["num_subsets"] = plan.num_subsets;
  j["seed"] = plan.seed;
  nlohmann::json a = nlohmann::json::object();
  for (const auto& [id, s] : plan.assignment) a[id] = plan.tag(s);
  j["assignment"] = std::move(a);
  return j;
}

inline SplitPlan split_from_json(const nlohmann::json& j) {
  SplitPlan plan;
  plan.scheme_name = j.at("scheme").get<std::string>();
  plan.num_subsets = j.at("num_subsets").get<int>();
  plan.seed = j.value("seed", std::uint64_t{0});
  for (const auto& [id, tag] : j.at("assignment").items()) {
    auto t = tag.get<std::string>();
    int subset = t == "train" ? kTrainSubset
                 : t == "test" ? kTestSubset
                 : t.rfind("fold", 0) == 0 ? std::stoi(t.substr(4))
                 : throw DataError("bad split tag '" + t + "'");
    plan.assignment[id] = subset;
  }
  return plan;
}

inline nlohmann::json index_to_json(const DatasetIndex& index,
                                    const std::map<std::string, SplitPlan>& splits = {}) {
  nlohmann::json j;
  j["schema"] = "auscult.index";
  j["version"] = kIndexSchemaVersion;
  j["root"] = index.root.string();
  auto& recs = j["recordings"] = nlohmann::json::array();
  for (const auto& r : index.recordings) {
    nlohmann::json jr;
    jr["id"] = r.meta.recording_id;
    jr["patient"] = r.meta.patient_id;
    jr["path"] = r.meta.file_path.string();
    jr["sample_rate"] = r.meta.sample_rate_native;
    jr["duration"] = r.meta.duration;
    jr["diagnosis"] = r.diagnosis;
    jr["group"] = std::string(to_string(r.group()));
    auto& cyc = jr["cycles"] = nlohmann::json::array();
    for (const auto& c : r.cycles)
      cyc.push_back({{"onset", c.onset},
                     {"offset", c.offset},
                     {"crackle", c.has_crackle},
                     {"wheeze", c.has_wheeze},
                     {"label", std::string(to_string(c.label()))}});
    recs.push_back(std::move(jr));
  }
  j["warnings"] = index.warnings;
  auto& js = j["splits"] = nlohmann::json::object();
  for (const auto& [name, plan] : splits) js[name] = split_to_json(plan);
  return j;
}

inline DatasetIndex index_from_json(const nlohmann::json& j,
                                    std::map<std::string, SplitPlan>* splits = nullptr) {
  if (j.value("schema", "") != "auscult.index")
    throw DataError("not an auscult index document");
  if (j.value("version", 0) != kIndexSchemaVersion)
    throw DataError("unsupported index version " + std::to_string(j.value("version", 0)));
  DatasetIndex index;
  index.root = j.at("root").get<std::string>();
  for (const auto& jr : j.at("recordings")) {
    RecordingEntry r;
    r.meta.recording_id = jr.at("id").get<std::string>();
    r.meta.patient_id = jr.at("patient").get<std::string>();
    r.meta.file_path = jr.at("path").get<std::string>();
    r.meta.sample_rate_native = jr.at("sample_rate").get<int>();
    r.meta.duration = jr.at("duration").get<double>();
    r.diagnosis = jr.at("diagnosis").get<std::string>();
    for (const auto& jc : jr.at("cycles"))
      r.cycles.push_back({jc.at("onset").get<double>(), jc.at("offset").get<double>(),
                          jc.at("crackle").get<bool>(), jc.at("wheeze").get<bool>()});
    index.diagnoses[r.meta.patient_id] = r.diagnosis;
    index.recordings.push_back(std::move(r));
  }
  std::sort(index.recordings.begin(), index.recordings.end(),
            [](const auto& a, const auto& b) { return a.meta.recording_id < b.meta.recording_id; });
  index.warnings = j.value("warnings", std::vector<std::string>{});
  if (splits && j.contains("splits"))
    for (const auto& [name, js] : j.at("splits").items()) (*splits)[name] = split_from_json(js);
  return index;
}

}  // namespace auscult

#endif  // AUSCULT_ICBHI_DATA_HPP_
