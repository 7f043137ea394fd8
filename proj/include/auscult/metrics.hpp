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

#ifndef AUSCULT_METRICS_HPP_
#define AUSCULT_METRICS_HPP_

#include <algorithm>
#include <cstdio>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "auscult/error.hpp"
#include "auscult/labels.hpp"

namespace auscult {

// Exact non-negative rational; scores are ratios of integer counts.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction make(std::int64_t n, std::int64_t d) {
    if (d <= 0) throw MetricError("fraction with non-positive denominator");
    const auto g = std::gcd(n, d);
    return {n / g, d / g};
  }
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num * b.den == b.num * a.den;
  }
  friend bool operator<=(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den <= static_cast<__int128>(b.num) * a.den;
  }
  friend Fraction midpoint(const Fraction& a, const Fraction& b) {
    return make(a.num * b.den + b.num * a.den, 2 * a.den * b.den);
  }
};

enum class Task { Anomaly, Disease };  // Task 1: 4 cycle classes, Task 2: 3 groups
enum class Subtask { T1_1, T1_2, T2_1, T2_2 };

inline Task task_of(Subtask s) noexcept {
  return s == Subtask::T1_1 || s == Subtask::T1_2 ? Task::Anomaly : Task::Disease;
}
inline std::size_t num_classes(Task t) noexcept {
  return t == Task::Anomaly ? kNumCycleClasses : kNumDiseaseClasses;
}
inline std::string to_string(Task t) { return t == Task::Anomaly ? "anomaly" : "disease"; }
inline std::string to_string(Subtask s) {
  switch (s) {
    case Subtask::T1_1: return "1-1";
    case Subtask::T1_2: return "1-2";
    case Subtask::T2_1: return "2-1";
    case Subtask::T2_2: return "2-2";
  }
  return "?";
}
inline Subtask parse_subtask(const std::string& s) {
  if (s == "1-1") return Subtask::T1_1;
  if (s == "1-2") return Subtask::T1_2;
  if (s == "2-1") return Subtask::T2_1;
  if (s == "2-2") return Subtask::T2_2;
  throw UsageError("unknown subtask '" + s + "' (expected 1-1, 1-2, 2-1 or 2-2)");
}

inline std::vector<std::string> class_names(Task t) {
  if (t == Task::Anomaly) return {"Crackle", "Wheeze", "Both", "Normal"};
  return {"Chronic", "NonChronic", "Healthy"};
}

// The negative class: Normal for Task 1, Healthy for Task 2.
inline std::size_t negative_class(Task t) noexcept {
  return t == Task::Anomaly ? static_cast<std::size_t>(CycleLabel4::Normal)
                            : static_cast<std::size_t>(DiseaseGroup3::Healthy);
}

// ------------------------------------------------------------- aggregation

// Mean of the per-patch posteriors of one instance.
inline std::vector<double> aggregate_posteriors(std::span<const std::vector<double>> patches) {
  if (patches.empty()) throw MetricError("an instance needs at least one patch posterior");
  std::vector<double> mean(patches.front().size(), 0.0);
  for (const auto& p : patches) {
    if (p.size() != mean.size()) throw ShapeError("posterior lengths differ within an instance");
    for (std::size_t c = 0; c < p.size(); ++c) mean[c] += p[c];
  }
  for (auto& v : mean) v /= static_cast<double>(patches.size());
  return mean;
}

// argmax with ties going to the lowest index.
inline std::size_t predict_label(std::span<const double> mean) {
  if (mean.empty()) throw ShapeError("empty posterior");
  std::size_t best = 0;
  for (std::size_t c = 1; c < mean.size(); ++c)
    if (mean[c] > mean[best]) best = c;
  return best;
}

// ---------------------------------------------------------------- confusion

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Task task = Task::Anomaly)
      : task_(task), c_(num_classes(task)), counts_(c_ * c_, 0) {}

  void add(std::size_t truth, std::size_t predicted, std::int64_t n = 1) {
    if (truth >= c_ || predicted >= c_)
      throw MetricError("label out of range for the " + to_string(task_) + " task");
    counts_[truth * c_ + predicted] += n;
  }

  Task task() const noexcept { return task_; }
  std::size_t classes() const noexcept { return c_; }
  std::int64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_.at(truth * c_ + predicted);
  }
  std::int64_t row_total(std::size_t truth) const {
    std::int64_t s = 0;
    for (std::size_t p = 0; p < c_; ++p) s += at(truth, p);
    return s;
  }
  std::int64_t column_total(std::size_t predicted) const {
    std::int64_t s = 0;
    for (std::size_t t = 0; t < c_; ++t) s += at(t, predicted);
    return s;
  }
  std::int64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    if (o.task_ != task_) throw MetricError("cannot pool confusion matrices of different tasks");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    return *this;
  }
  friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    return a.task_ == b.task_ && a.counts_ == b.counts_;
  }

 private:
  Task task_;
  std::size_t c_;
  std::vector<std::int64_t> counts_;
};

inline ConfusionMatrix confusion_matrix(std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                        Task task) {
  ConfusionMatrix cm(task);
  for (const auto& [t, p] : pairs) cm.add(t, p);
  return cm;
}

// Pools fold matrices into one before scoring.
inline ConfusionMatrix pool(std::span<const ConfusionMatrix> folds) {
  if (folds.empty()) throw MetricError("no folds to pool");
  ConfusionMatrix out(folds.front().task());
  for (const auto& f : folds) out += f;
  return out;
}

// ------------------------------------------------------------------ scores

// Task 1-1: correct anomaly class; 1-2: any anomaly predicted for an anomaly.
// Task 2-1: correct disease group; 2-2: any unhealthy group for an unhealthy truth.
inline Fraction sensitivity_fraction(const ConfusionMatrix& cm, Subtask s) {
  if (task_of(s) != cm.task())
    throw MetricError("subtask " + to_string(s) + " does not match a " + to_string(cm.task()) +
                      " confusion matrix");
  const std::size_t neg = negative_class(cm.task());
  const bool coarse = s == Subtask::T1_2 || s == Subtask::T2_2;
  std::int64_t hit = 0, total = 0;
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    if (t == neg) continue;
    total += cm.row_total(t);
    for (std::size_t p = 0; p < cm.classes(); ++p)
      if (coarse ? p != neg : p == t) hit += cm.at(t, p);
  }
  if (total == 0) throw MetricError("sensitivity undefined: no positive-class instances");
  return Fraction::make(hit, total);
}

// Negative-class recall; identical for both subtasks of a task.
inline Fraction specificity_fraction(const ConfusionMatrix& cm, Subtask s) {
  if (task_of(s) != cm.task()) throw MetricError("subtask does not match confusion matrix");
  const std::size_t neg = negative_class(cm.task());
  const auto total = cm.row_total(neg);
  if (total == 0) throw MetricError("specificity undefined: no negative-class instances");
  return Fraction::make(cm.at(neg, neg), total);
}

inline double sensitivity(const ConfusionMatrix& cm, Subtask s) {
  return sensitivity_fraction(cm, s).value();
}
inline double specificity(const ConfusionMatrix& cm, Subtask s) {
  return specificity_fraction(cm, s).value();
}

inline double icbhi_score(double sens, double spec) {
  if (!(sens >= 0.0 && sens <= 1.0 && spec >= 0.0 && spec <= 1.0))
    throw MetricError("sensitivity and specificity must lie in [0, 1]");
  return (sens + spec) / 2.0;
}

struct ScoreTriple {
  Fraction sensitivity;
  Fraction specificity;
  Fraction icbhi;  // exactly (sensitivity + specificity) / 2
};

inline ScoreTriple score(const ConfusionMatrix& cm, Subtask s) {
  ScoreTriple t{sensitivity_fraction(cm, s), specificity_fraction(cm, s), {}};
  t.icbhi = midpoint(t.sensitivity, t.specificity);
  return t;
}

// Per-fold scores averaged, the alternative to pooling.
inline std::array<double, 3> mean_fold_scores(std::span<const ConfusionMatrix> folds, Subtask s) {
  if (folds.empty()) throw MetricError("no folds to average");
  std::array<double, 3> acc{};
  for (const auto& f : folds) {
    const auto t = score(f, s);
    acc[0] += t.sensitivity.value();
    acc[1] += t.specificity.value();
    acc[2] += t.icbhi.value();
  }
  for (auto& v : acc) v /= static_cast<double>(folds.size());
  return acc;
}

inline std::vector<Subtask> subtasks_of(Task t) {
  if (t == Task::Anomaly) return {Subtask::T1_1, Subtask::T1_2};
  return {Subtask::T2_1, Subtask::T2_2};
}

// ------------------------------------------------------------------ report

// Tab-separated confusion matrix with row/column totals, then one block per
// subtask. Scores that cannot be computed print as "undefined".
inline std::string render_report(const ConfusionMatrix& cm, std::span<const Subtask> subtasks = {}) {
  const auto names = class_names(cm.task());
  std::ostringstream os;
  os << "# confusion " << to_string(cm.task()) << "\n";
  os << "truth\\pred";
  for (const auto& n : names) os << '\t' << n;
  os << "\ttotal\n";
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    os << names[t];
    for (std::size_t p = 0; p < cm.classes(); ++p) os << '\t' << cm.at(t, p);
    os << '\t' << cm.row_total(t) << '\n';
  }
  os << "total";
  for (std::size_t p = 0; p < cm.classes(); ++p) os << '\t' << cm.column_total(p);
  os << '\t' << cm.total() << '\n';

  const auto all = subtasks_of(cm.task());
  if (subtasks.empty()) subtasks = all;
  char buf[32];
  auto line = [&](const char* key, auto fn) {
    os << key << '\t';
    try {
      const Fraction f = fn();
      std::snprintf(buf, sizeof buf, "%.4f", f.value());
      os << buf << '\t' << f.str() << '\n';
    } catch (const MetricError&) {
      os << "undefined\n";
    }
  };
  for (Subtask s : subtasks) {
    os << "# subtask " << to_string(s) << '\n';
    line("sensitivity", [&] { return sensitivity_fraction(cm, s); });
    line("specificity", [&] { return specificity_fraction(cm, s); });
    line("icbhi_score", [&] { return score(cm, s).icbhi; });
  }
  return os.str();
}

// Reads back the confusion block of render_report; score lines are ignored.
inline ConfusionMatrix parse_report(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::optional<ConfusionMatrix> cm;
  std::size_t row = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    for (std::string x; std::getline(ss, x, '\t');) f.push_back(x);
    return f;
  };
  while (std::getline(is, line)) {
    if (line.rfind("# confusion ", 0) == 0) {
      const auto tag = line.substr(12);
      if (tag != "anomaly" && tag != "disease") throw DataError("report: unknown task " + tag);
      cm.emplace(tag == "anomaly" ? Task::Anomaly : Task::Disease);
      continue;
    }
    if (!cm || row >= cm->classes() || line.rfind("truth", 0) == 0) continue;
    const auto f = split(line);
    const auto names = class_names(cm->task());
    if (f.size() != cm->classes() + 2 || f[0] != names[row])
      throw DataError("report: malformed row '" + line + "'");
    std::int64_t sum = 0;
    for (std::size_t p = 0; p < cm->classes(); ++p) {
      const auto n = std::stoll(f[p + 1]);
      cm->add(row, p, n);
      sum += n;
    }
    if (sum != std::stoll(f.back())) throw DataError("report: row total mismatch for " + f[0]);
    ++row;
  }
  if (!cm || row != cm->classes()) throw DataError("report: no complete confusion matrix");
  return *cm;
}

// -------------------------------------------------------------------- json

inline nlohmann::json fraction_json(const Fraction& f) {
  return {{"num", f.num}, {"den", f.den}, {"value", f.value()}};
}

inline nlohmann::json confusion_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t p = 0; p < cm.classes(); ++p) r.push_back(cm.at(t, p));
    rows.push_back(r);
  }
  return {{"task", to_string(cm.task())}, {"classes", class_names(cm.task())}, {"counts", rows}};
}

inline ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  const auto tag = j.at("task").get<std::string>();
  if (tag != "anomaly" && tag != "disease") throw DataError("results: unknown task " + tag);
  ConfusionMatrix cm(tag == "anomaly" ? Task::Anomaly : Task::Disease);
  const auto& rows = j.at("counts");
  if (rows.size() != cm.classes()) throw DataError("results: confusion matrix has wrong size");
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    if (rows[t].size() != cm.classes()) throw DataError("results: confusion matrix has wrong size");
    for (std::size_t p = 0; p < cm.classes(); ++p) cm.add(t, p, rows[t][p].get<std::int64_t>());
  }
  return cm;
}

// {"1-1": {"sensitivity": {...}, "specificity": {...}, "icbhi": {...}}, ...};
// null where a denominator is zero.
inline nlohmann::json scores_json(const ConfusionMatrix& cm) {
  nlohmann::json out = nlohmann::json::object();
  for (Subtask s : subtasks_of(cm.task())) {
    try {
      const auto t = score(cm, s);
      out[to_string(s)] = {{"sensitivity", fraction_json(t.sensitivity)},
                           {"specificity", fraction_json(t.specificity)},
                           {"icbhi", fraction_json(t.icbhi)}};
    } catch (const MetricError&) {
      out[to_string(s)] = nullptr;
    }
  }
  return out;
}

}  // namespace auscult

#endif  // AUSCULT_METRICS_HPP_
