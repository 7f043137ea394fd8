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

#ifndef AUSCULT_MODELS_TRAIN_HPP_
#define AUSCULT_MODELS_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "auscult/models/network.hpp"
#include "auscult/nn/adam.hpp"
#include "auscult/nn/losses.hpp"
#include "auscult/patching.hpp"

namespace auscult::models {

enum class LossKind { CrossEntropy, KL };

inline std::string to_string(LossKind k) { return k == LossKind::KL ? "kl" : "cross_entropy"; }
inline LossKind parse_loss(const std::string& s) {
  if (s == "kl") return LossKind::KL;
  if (s == "cross_entropy" || s == "ce") return LossKind::CrossEntropy;
  throw UsageError("unknown loss '" + s + "'");
}

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch = 100;
  LossKind loss = LossKind::CrossEntropy;
  nn::Reduction kl_reduction = nn::Reduction::Sum;
  double lr = 1e-4;
  double lambda = nn::kL2Lambda;
  std::uint64_t seed = 0;
  bool mixup = false;
  MixupConfig mixup_cfg;
  // Eval-mode accuracy on the un-augmented training set after each epoch.
  bool eval_train_accuracy = false;
  // Stop once eval_train_accuracy reaches this value (0 disables).
  double target_train_accuracy = 0.0;

  void validate() const {
    if (epochs == 0 || batch == 0) throw UsageError("epochs and batch must be positive");
    if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
    if (mixup && loss != LossKind::KL) throw UsageError("mixup requires the kl loss");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;       // mean over batches of the total loss
  double data_term = 0.0;
  double l2_term = 0.0;
  double euclidean = 0.0;  // distillation only
  double batch_accuracy = 0.0;
  std::optional<double> train_accuracy;
  std::optional<double> heldout_score;
  std::size_t clamped_batches = 0;
  std::size_t patches = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  MixupStats mixup;

  std::string to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "epoch,loss,data_term,l2_term,euclidean,batch_accuracy,train_accuracy,heldout_score,"
          "clamped_batches,patches\n";
    for (const auto& e : epochs) {
      os << e.epoch << ',' << e.loss << ',' << e.data_term << ',' << e.l2_term << ','
         << e.euclidean << ',' << e.batch_accuracy << ',';
      if (e.train_accuracy) os << *e.train_accuracy;
      os << ',';
      if (e.heldout_score) os << *e.heldout_score;
      os << ',' << e.clamped_batches << ',' << e.patches << '\n';
    }
    return os.str();
  }
};

// Per-epoch evaluation hook, e.g. a held-out ICBHI score.
template <class T>
using EpochHook = std::function<std::optional<double>(Network<T>&, std::size_t epoch)>;

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// Stacks patches [begin, end) of `order` into an (n, 64, W, 1) input and an
// (n, C) label tensor.
template <class T>
std::pair<Tensor<T>, Tensor<T>> make_batch(const std::vector<Patch>& patches,
                                           const std::vector<std::size_t>& order,
                                           std::size_t begin, std::size_t end) {
  const Patch& first = patches[order[begin]];
  const std::size_t n = end - begin, h = first.height, w = first.width, c = first.label.size();
  Tensor<T> x({n, h, w, 1}), y({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    const Patch& p = patches[order[begin + i]];
    if (p.height != h || p.width != w || p.label.size() != c)
      throw ShapeError("batch mixes patch shapes or label lengths");
    std::copy(p.pixels.begin(), p.pixels.end(), x.data() + i * h * w);
    std::copy(p.label.begin(), p.label.end(), y.data() + i * c);
  }
  return {std::move(x), std::move(y)};
}

// Batch boundaries; a trailing batch of one is folded into its predecessor
// because train-mode batch norm needs at least two samples.
inline std::vector<std::size_t> batch_bounds(std::size_t n, std::size_t batch) {
  std::vector<std::size_t> b;
  for (std::size_t s = 0; s < n; s += batch) b.push_back(s);
  if (b.size() > 1 && n - b.back() == 1) b.pop_back();
  b.push_back(n);
  return b;
}

template <class T>
std::size_t argmax(const T* v, std::size_t n) {
  return static_cast<std::size_t>(std::max_element(v, v + n) - v);
}

// Eval-mode class probabilities for every patch, in input order.
template <class T>
Tensor<T> predict(Network<T>& net, const std::vector<Patch>& patches, std::size_t batch = 64) {
  if (patches.empty()) return Tensor<T>({0, net.classes()});
  Tensor<T> out({patches.size(), net.classes()});
  std::vector<std::size_t> order(patches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t s = 0; s < patches.size(); s += batch) {
    const std::size_t e = std::min(patches.size(), s + batch);
    auto [x, y] = make_batch<T>(patches, order, s, e);
    const auto probs = net.forward(x, {false, nullptr}).probs;
    std::copy(probs.values().begin(), probs.values().end(), out.data() + s * net.classes());
  }
  return out;
}

template <class T>
double accuracy(Network<T>& net, const std::vector<Patch>& patches, std::size_t batch = 64) {
  const auto probs = predict(net, patches, batch);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto* row = probs.data() + i * net.classes();
    hit += argmax(row, net.classes()) == patches[i].argmax_label();
  }
  return patches.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(patches.size());
}

namespace detail {

inline std::vector<Patch> epoch_set(const std::vector<Patch>& data, bool mixup, const MixupConfig& mcfg,
                             std::mt19937_64& rng, MixupStats& stats,
                             std::vector<std::size_t>& order) {
  std::vector<Patch> set = mixup ? mixup_batch(data, mcfg, rng, &stats) : data;
  order.resize(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (!mixup) std::shuffle(order.begin(), order.end(), rng);
  return set;
}

inline void check_training_set(const std::vector<Patch>& data, std::size_t classes) {
  if (data.size() < 2) throw UsageError("training needs at least two patches");
  for (const auto& p : data)
    if (p.label.size() != classes)
      throw ShapeError("patch label length " + std::to_string(p.label.size()) +
                       " does not match the model's " + std::to_string(classes) + " classes");
}

inline void require_finite_loss(double v, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(v))
    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batch));
}

}  // namespace detail

// Runs epochs x batches of forward / backward / Adam. With mixup on, each
// epoch re-augments the whole training set (doubling it) from an rng seeded
// by (seed, epoch).
template <class T>
TrainHistory train(Network<T>& net, const std::vector<Patch>& data, const TrainConfig& cfg,
                   EpochHook<T> hook = {}, std::ostream* log = nullptr) {
  cfg.validate();
  detail::check_training_set(data, net.classes());
  nn::Adam adam({.lr = cfg.lr});
  TrainHistory hist;
  const bool kl = cfg.loss == LossKind::KL;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto data_rng = stream_rng(cfg.seed, epoch, 0);
    auto drop_rng = stream_rng(cfg.seed, epoch, 1);
    std::vector<std::size_t> order;
    const auto set =
        detail::epoch_set(data, cfg.mixup, cfg.mixup_cfg, data_rng, hist.mixup, order);
    const auto bounds = batch_bounds(set.size(), cfg.batch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.patches = set.size();
    std::size_t hits = 0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      auto [x, y] = make_batch<T>(set, order, bounds[b], bounds[b + 1]);
      const std::size_t n = x.dim(0);
      auto& store = net.params();
      store.zero_grad();
      const auto out = net.forward(x, {true, &drop_rng});
      const auto lv = kl ? nn::kl_div_l2_loss(out.probs, y, &store, cfg.lambda, cfg.kl_reduction)
                         : nn::cross_entropy_l2_loss(out.probs, y, &store, cfg.lambda);
      detail::require_finite_loss(lv.total, epoch, b);
      net.backward(nn::softmax_loss_grad(out.probs, y, nn::loss_scale(n, kl, cfg.kl_reduction)));
      nn::add_l2_grad(store, cfg.lambda);
      adam.step(store);
      rec.loss += lv.total;
      rec.data_term += lv.data_term;
      rec.l2_term += lv.l2_term;
      rec.clamped_batches += lv.clamped;
      for (std::size_t i = 0; i < n; ++i)
        hits += argmax(out.probs.data() + i * net.classes(), net.classes()) ==
                argmax(y.data() + i * net.classes(), net.classes());
    }
    const double batches = static_cast<double>(bounds.size() - 1);
    rec.loss /= batches;
    rec.data_term /= batches;
    rec.l2_term /= batches;
    rec.batch_accuracy = static_cast<double>(hits) / static_cast<double>(set.size());
    if (cfg.eval_train_accuracy) rec.train_accuracy = accuracy(net, data);
    if (hook) rec.heldout_score = hook(net, epoch);
    if (log) {
      *log << "epoch " << epoch << " loss " << rec.loss << " acc " << rec.batch_accuracy;
      if (rec.train_accuracy) *log << " train_acc " << *rec.train_accuracy;
      if (rec.heldout_score) *log << " heldout " << *rec.heldout_score;
      *log << '\n';
    }
    hist.epochs.push_back(rec);
    if (cfg.target_train_accuracy > 0.0 && rec.train_accuracy &&
        *rec.train_accuracy >= cfg.target_train_accuracy)
      break;
  }
  return hist;
}

// --------------------------------------------------------------- distillation

struct DistillConfig {
  TrainConfig train;  // loss must be cross-entropy; mixup off by default
  double gamma = 0.5;
};

template <class T>
Tensor<T> embeddings(Network<T>& net, const std::vector<Patch>& patches,
                     const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
  auto [x, y] = make_batch<T>(patches, order, begin, end);
  return net.forward(x, {false, nullptr}).embedding;
}

// Mean Euclidean distance between teacher and student embeddings (eval mode).
template <class T>
double mean_embedding_distance(Network<T>& teacher, Network<T>& student,
                               const std::vector<Patch>& patches, std::size_t batch = 64) {
  std::vector<std::size_t> order(patches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double acc = 0.0;
  for (std::size_t s = 0; s < patches.size(); s += batch) {
    const std::size_t e = std::min(patches.size(), s + batch);
    acc += nn::euclidean_embedding_loss(embeddings(teacher, patches, order, s, e),
                                        embeddings(student, patches, order, s, e)) *
           static_cast<double>(e - s);
  }
  return acc / static_cast<double>(patches.size());
}

// Trains the student on L = L_entropy + gamma * L_euclidean with the teacher
// frozen. L_entropy includes the L2 term; L_euclidean compares the two
// networks' global-average-pooled embeddings on the same patch.
template <class T>
TrainHistory distill(Network<T>& teacher, Network<T>& student, const std::vector<Patch>& data,
                     const DistillConfig& cfg, std::ostream* log = nullptr) {
  const TrainConfig& tc = cfg.train;
  tc.validate();
  if (tc.loss != LossKind::CrossEntropy && !tc.mixup)
    throw UsageError("distillation uses the cross-entropy loss");
  if (teacher.embedding_dim() != student.embedding_dim())
    throw ShapeError("teacher embedding length " + std::to_string(teacher.embedding_dim()) +
                     " differs from student " + std::to_string(student.embedding_dim()));
  if (!(cfg.gamma >= 0.0)) throw UsageError("gamma must be non-negative");
  detail::check_training_set(data, student.classes());
  nn::Adam adam({.lr = tc.lr});
  TrainHistory hist;
  const bool kl = tc.loss == LossKind::KL;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    auto data_rng = stream_rng(tc.seed, epoch, 0);
    std::vector<std::size_t> order;
    const auto set = detail::epoch_set(data, tc.mixup, tc.mixup_cfg, data_rng, hist.mixup, order);
    const auto bounds = batch_bounds(set.size(), tc.batch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.patches = set.size();
    std::size_t hits = 0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      auto [x, y] = make_batch<T>(set, order, bounds[b], bounds[b + 1]);
      const std::size_t n = x.dim(0);
      const auto t_emb = teacher.forward(x, {false, nullptr}).embedding;
      auto& store = student.params();
      store.zero_grad();
      const auto out = student.forward(x, {true, nullptr});
      const auto lv = kl ? nn::kl_div_l2_loss(out.probs, y, &store, tc.lambda, tc.kl_reduction)
                         : nn::cross_entropy_l2_loss(out.probs, y, &store, tc.lambda);
      const double euc = nn::euclidean_embedding_loss(t_emb, out.embedding);
      const double total = lv.total + cfg.gamma * euc;
      detail::require_finite_loss(total, epoch, b);
      auto demb = nn::euclidean_embedding_grad(t_emb, out.embedding);
      for (auto& v : demb.values()) v = static_cast<T>(v * cfg.gamma);
      student.backward(nn::softmax_loss_grad(out.probs, y, nn::loss_scale(n, kl, tc.kl_reduction)),
                       &demb);
      nn::add_l2_grad(store, tc.lambda);
      adam.step(store);
      rec.loss += total;
      rec.data_term += lv.data_term;
      rec.l2_term += lv.l2_term;
      rec.euclidean += euc;
      rec.clamped_batches += lv.clamped;
      for (std::size_t i = 0; i < n; ++i)
        hits += argmax(out.probs.data() + i * student.classes(), student.classes()) ==
                argmax(y.data() + i * student.classes(), student.classes());
    }
    const double batches = static_cast<double>(bounds.size() - 1);
    rec.loss /= batches;
    rec.data_term /= batches;
    rec.l2_term /= batches;
    rec.euclidean /= batches;
    rec.batch_accuracy = static_cast<double>(hits) / static_cast<double>(set.size());
    if (log)
      *log << "epoch " << epoch << " loss " << rec.loss << " euclidean " << rec.euclidean << '\n';
    hist.epochs.push_back(rec);
  }
  return hist;
}

}  // namespace auscult::models

#endif  // AUSCULT_MODELS_TRAIN_HPP_
