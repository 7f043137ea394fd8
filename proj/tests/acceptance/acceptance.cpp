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

// Release acceptance run. Prints one PASS / FAIL / SKIP line per criterion
// and exits non-zero if any criterion fails.
//
//   auscult_acceptance            all criteria
//   auscult_acceptance 3 8        only the listed ones

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "auscult/dsp/frontend.hpp"
#include "auscult/experiment/commands.hpp"
#include "auscult/icbhi_data.hpp"
#include "auscult/metrics.hpp"
#include "auscult/models/moe.hpp"
#include "auscult/models/network.hpp"
#include "auscult/models/train.hpp"
#include "auscult/patching.hpp"
#include "fixtures.hpp"
#include "grad_report.hpp"
#include "oracles.hpp"
#include "toy_data.hpp"

namespace auscult::acceptance {
namespace {

namespace fs = std::filesystem;
using testing::D;
using testing::random_tensor;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::vector<std::string> notes;     // printed after the verdict
  std::vector<std::string> failures;  // any entry turns the criterion into FAIL

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
  void skip(const std::string& why) {
    status = Status::Skip;
    notes.push_back(why);
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ----------------------------------------------------------------- metrics

ConfusionMatrix from_rows(Task task, const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix cm(task);
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t p = 0; p < rows[t].size(); ++p) cm.add(t, p, rows[t][p]);
  return cm;
}

struct MetricFixture {
  std::string name;
  Task task;
  std::vector<std::vector<std::int64_t>> rows;  // [truth][pred]
  Subtask subtask;
  Fraction sensitivity, specificity, icbhi;
};

Fraction F(std::int64_t n, std::int64_t d) { return Fraction::make(n, d); }

// Every expected value below was tallied by hand from the rows.
std::vector<MetricFixture> metric_fixtures() {
  using enum Subtask;
  // Rows: crackle, wheeze, both, normal.
  const std::vector<std::vector<std::int64_t>> t1 = {
      {10, 4, 3, 3}, {2, 5, 1, 2}, {1, 2, 5, 2}, {3, 2, 1, 34}};
  // Rows: chronic, non-chronic, healthy.
  const std::vector<std::vector<std::int64_t>> t2 = {{30, 5, 5}, {4, 10, 6}, {2, 3, 15}};
  return {
      // (10 + 5 + 5) / (20 + 10 + 10); normal 34 / 40.
      {"task1 mixed, 1-1", Task::Anomaly, t1, T1_1, F(1, 2), F(17, 20), F(27, 40)},
      // any anomaly row predicted as any anomaly: (17 + 8 + 8) / 40.
      {"task1 mixed, 1-2", Task::Anomaly, t1, T1_2, F(33, 40), F(17, 20), F(67, 80)},
      // crackle predicted wheeze seven times: wrong for 1-1, correct for 1-2.
      {"anomaly as anomaly, 1-2", Task::Anomaly,
       {{0, 7, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 5}}, T1_2, F(1, 1), F(1, 1), F(1, 1)},
      {"anomaly as anomaly, 1-1", Task::Anomaly,
       {{0, 7, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 5}}, T1_1, F(0, 1), F(1, 1), F(1, 2)},
      // chronic all predicted non-chronic: 2-2 unhurt (20/20), 2-1 gets 5/20.
      {"within unhealthy, 2-2", Task::Disease, {{0, 12, 0}, {3, 5, 0}, {1, 2, 9}}, T2_2,
       F(1, 1), F(3, 4), F(7, 8)},
      {"within unhealthy, 2-1", Task::Disease, {{0, 12, 0}, {3, 5, 0}, {1, 2, 9}}, T2_1,
       F(1, 4), F(3, 4), F(1, 2)},
      // (30 + 10) / 60 and (30 + 5 + 4 + 10) / 60; healthy 15 / 20.
      {"task2 mixed, 2-1", Task::Disease, t2, T2_1, F(2, 3), F(3, 4), F(17, 24)},
      {"task2 mixed, 2-2", Task::Disease, t2, T2_2, F(49, 60), F(3, 4), F(47, 60)},
      // 20 / 40 with a single normal cycle.
      {"worked 1-1", Task::Anomaly, {{10, 5, 5, 0}, {0, 5, 5, 0}, {0, 5, 5, 0}, {0, 0, 0, 1}},
       T1_1, F(1, 2), F(1, 1), F(3, 4)},
      // healthy 50 / 100.
      {"half specificity, 2-1", Task::Disease, {{1, 0, 0}, {0, 0, 0}, {20, 30, 50}}, T2_1,
       F(1, 1), F(1, 2), F(3, 4)},
  };
}

Outcome criterion_metrics() {
  Outcome o;
  const auto fixtures = metric_fixtures();
  for (const auto& f : fixtures) {
    const auto cm = from_rows(f.task, f.rows);
    const auto s = score(cm, f.subtask);
    o.expect(s.sensitivity == f.sensitivity,
             f.name + ": sensitivity " + s.sensitivity.str() + " != " + f.sensitivity.str());
    o.expect(s.specificity == f.specificity,
             f.name + ": specificity " + s.specificity.str() + " != " + f.specificity.str());
    o.expect(s.icbhi == f.icbhi, f.name + ": score " + s.icbhi.str() + " != " + f.icbhi.str());
  }
  o.note(std::to_string(fixtures.size()) + " fixtures, exact rationals");
  return o;
}

Outcome criterion_paper_rows() {
  Outcome o;
  struct Row {
    int spec, sen, expect;  // hundredths
  };
  for (const Row& r : {Row{68, 26, 47}, Row{90, 68, 79}, Row{86, 98, 92}}) {
    const double v = icbhi_score(r.sen / 100.0, r.spec / 100.0);
    const auto two_dp = static_cast<int>(std::lround(v * 100.0));
    o.expect(two_dp == r.expect, "double (" + std::to_string(r.spec) + ", " +
                                     std::to_string(r.sen) + ") gave " + fmt("%.4f", v));
    o.expect(midpoint(F(r.sen, 100), F(r.spec, 100)) == F(r.expect, 100),
             "exact midpoint for row " + std::to_string(r.expect));
  }
  o.note("0.47, 0.79, 0.92");
  return o;
}

// ------------------------------------------------------------- gradients

Outcome criterion_gradients() {
  Outcome o;
  constexpr double kTol = 1e-4;
  double worst_all = 0.0;
  std::size_t tensors = 0;
  auto take = [&](const std::string& what, const testing::GradReport& rep) {
    for (const auto& [name, g] : rep) {
      ++tensors;
      worst_all = std::max(worst_all, g.max_relative_error);
      o.expect(g.max_relative_error < kTol, what + "/" + name + " " + oracle::describe(g));
    }
  };
  using namespace nn;
  {
    ParamStore<D> s;
    std::mt19937_64 rng(2);
    Conv2d<D> conv(s, "c", 3, 2, rng);
    for (auto& v : s[1].value.values()) v = 0.1;
    take("conv2d", testing::layer_gradient_report(conv, s, random_tensor({2, 5, 4, 3}, 4)));
  }
  {
    ParamStore<D> s;
    BatchNorm<D> bn(s, "bn", 3);
    s[0].value = random_tensor({3}, 8, 0.5, 1.5);
    s[1].value = random_tensor({3}, 9);
    take("batchnorm/train", testing::layer_gradient_report(bn, s, random_tensor({3, 2, 3, 3}, 10)));
  }
  {
    ParamStore<D> s;
    BatchNorm<D> bn(s, "bn", 2);
    s.buffer(0).value = random_tensor({2}, 11);
    s.buffer(1).value = random_tensor({2}, 12, 0.5, 2.0);
    take("batchnorm/eval",
         testing::layer_gradient_report(bn, s, random_tensor({2, 2, 2, 2}, 13), false));
  }
  {
    ParamStore<D> s;
    AvgPool<D> pool(2);
    take("avgpool", testing::layer_gradient_report(pool, s, random_tensor({2, 4, 6, 3}, 14)));
    GlobalAvgPool<D> gap;
    take("gap", testing::layer_gradient_report(gap, s, random_tensor({2, 3, 5, 4}, 15)));
    Relu<D> relu;
    take("relu", testing::layer_gradient_report(relu, s, testing::off_kink_tensor({2, 3, 3, 2}, 16)));
    Dropout<D> dr(0.4);
    take("dropout", testing::layer_gradient_report(dr, s, random_tensor({2, 10}, 21)));
    Softmax<D> sm;
    take("softmax", testing::layer_gradient_report(sm, s, random_tensor({3, 4}, 25, -2.0, 2.0)));
  }
  {
    ParamStore<D> s;
    std::mt19937_64 rng(3);
    Dense<D> dense(s, "d", 5, 4, rng);
    s[1].value = random_tensor({4}, 22);
    take("dense", testing::layer_gradient_report(dense, s, random_tensor({3, 5}, 23)));
  }
  {
    ParamStore<D> s;
    std::mt19937_64 rng(16);
    models::MixtureOfExperts<D> moe(s, "moe", 4, 3, 2, rng);
    s[1].value = random_tensor({6}, 17, 0.2, 0.6);
    take("moe", testing::layer_gradient_report(moe, s, random_tensor({3, 4}, 18)));
  }
  // Both training losses, data term through softmax plus L2, through a dense layer.
  for (bool kl : {false, true}) {
    ParamStore<D> theta;
    std::mt19937_64 rng(6);
    Dense<D> dense(theta, "d", 4, 3, rng);
    auto x = random_tensor({3, 4}, 26);
    Tensor<D> y = kl ? Tensor<D>({3, 3}, {0.2, 0.8, 0, 0.5, 0.5, 0, 0, 0.3, 0.7})
                     : Tensor<D>({3, 3}, {1, 0, 0, 0, 0, 1, 0, 1, 0});
    const double lambda = 0.05;
    auto loss = [&]() {
      auto yhat = softmax(dense.forward(x, {}));
      return kl ? kl_div_l2_loss(yhat, y, &theta, lambda).total
                : cross_entropy_l2_loss(yhat, y, &theta, lambda).total;
    };
    theta.zero_grad();
    auto yhat = softmax(dense.forward(x, {}));
    auto dx = dense.backward(softmax_loss_grad(yhat, y, loss_scale(3, kl)));
    add_l2_grad(theta, lambda);
    testing::GradReport rep;
    for (auto& p : theta.params()) {
      auto g = p.grad;
      rep.emplace_back(p.name, oracle::check_gradient(p.value.data(), p.value.size(), g.data(), loss));
    }
    rep.emplace_back("input", oracle::check_gradient(x.data(), x.size(), dx.data(), loss));
    take(kl ? "kl+l2" : "cross_entropy+l2", rep);
  }
  {
    auto a = random_tensor({4, 6}, 28);
    auto b = random_tensor({4, 6}, 29);
    auto g = euclidean_embedding_grad(a, b);
    take("euclidean", {{"student", oracle::check_gradient(b.data(), b.size(), g.data(), [&] {
                          return euclidean_embedding_loss(a, b);
                        })}});
  }
  // Whole f64 micro-networks, summed KL + L2.
  const std::vector<std::size_t> micro = {2, 3, 2, 3, 2, 4};
  auto biased = [](models::Network<D>& net, std::uint64_t seed) {
    for (auto& p : net.params().params())
      if (p.name.ends_with("bias")) p.value = random_tensor(p.value.shape(), seed, 0.1, 0.3);
  };
  {
    auto net = models::build_cdnn<D>(3, 40, micro);
    biased(net, 41);
    auto y = Tensor<D>({3, 3}, {0.3, 0.7, 0, 1, 0, 0, 0, 0.5, 0.5});
    take("cdnn", testing::network_gradient_report(net, random_tensor({3, 8, 8, 1}, 42), y));
  }
  {
    auto net = models::build_cnn_moe<D>(3, 2, 20, micro);
    biased(net, 21);
    auto y = Tensor<D>({3, 3}, {0.6, 0.4, 0, 0, 1, 0, 0.1, 0, 0.9});
    take("cnn_moe", testing::network_gradient_report(net, random_tensor({3, 8, 8, 1}, 22), y));
  }
  {
    auto net = models::build_student<D>(3, 23, {3, 4});
    biased(net, 24);
    auto y = Tensor<D>({2, 3}, {1, 0, 0, 0, 0.5, 0.5});
    take("student", testing::network_gradient_report(net, random_tensor({2, 8, 8, 1}, 25), y));
  }
  o.note(std::to_string(tensors) + " tensors, worst relative error " + fmt("%.2e", worst_all));
  return o;
}

// --------------------------------------------------------------------- MoE

Outcome criterion_moe() {
  Outcome o;
  {
    nn::ParamStore<float> s;
    std::mt19937_64 rng(13);
    models::MixtureOfExperts<float> moe(s, "moe", 512, 10, 3, rng);
    std::normal_distribution<float> g(0.0f, 3.0f);
    nn::Tensor<float> emb({10000, 512});
    for (auto& v : emb.values()) v = g(rng);
    moe.forward(emb, {});
    const auto& gate = moe.last_gate();
    double worst = 0.0;
    for (std::size_t i = 0; i < 10000; ++i) {
      double sum = 0.0;
      for (std::size_t k = 0; k < 10; ++k) {
        o.expect(gate(i, k) >= 0.0f, "negative gate weight at row " + std::to_string(i));
        sum += gate(i, k);
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    o.expect(worst <= 1e-6, "gate row sum off by " + fmt("%.2e", worst));
    o.note("gate |sum-1| <= " + fmt("%.1e", worst) + " over 1e4 inputs");
  }
  {
    // K = 1: output must equal softmax(relu(e W + b)) of the single expert.
    const std::vector<std::size_t> micro = {2, 3, 2, 3, 2, 4};
    auto net = models::build_cnn_moe(3, 1, 14, micro);
    auto x = random_tensor({64, 8, 8, 1}, 15).cast<float>();
    auto out = net.forward(x, {});
    auto w = net.moe()->weights();
    double worst = 0.0;
    for (std::size_t n = 0; n < 64; ++n) {
      double e[3];
      for (std::size_t j = 0; j < 3; ++j) {
        double a = w.expert_b[j];
        for (std::size_t i = 0; i < w.dim; ++i) a += out.embedding(n, i) * w.expert_w[i * 3 + j];
        e[j] = std::max(a, 0.0);
      }
      const double z = std::exp(e[0]) + std::exp(e[1]) + std::exp(e[2]);
      for (std::size_t j = 0; j < 3; ++j)
        worst = std::max(worst, std::abs(out.probs(n, j) - std::exp(e[j]) / z));
    }
    o.expect(worst <= 1e-6, "K=1 head differs by " + fmt("%.2e", worst));
    o.note("K=1 max diff " + fmt("%.1e", worst));
  }
  return o;
}

// ------------------------------------------------------------------- mixup

Patch random_patch(std::mt19937_64& rng, std::size_t width, std::size_t cls, std::size_t classes) {
  std::normal_distribution<float> g;
  Patch p;
  p.width = width;
  p.pixels.resize(p.height * width);
  for (auto& v : p.pixels) v = g(rng);
  p.label = one_hot(cls, classes);
  return p;
}

Outcome criterion_mixup() {
  Outcome o;
  std::mt19937_64 rng(4);
  MixupConfig cfg;
  double worst_pixel = 0.0, worst_label = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    auto p1 = random_patch(rng, 8, rng() % 4, 4);
    auto p2 = random_patch(rng, 8, rng() % 4, 4);
    auto [m1, m2] = mixup_pair(p1, p2, draw_mixup_coeff(cfg, rng));
    for (std::size_t i = 0; i < p1.pixels.size(); ++i)
      worst_pixel = std::max(worst_pixel, std::abs((double(m1.pixels[i]) + m2.pixels[i]) -
                                                   (double(p1.pixels[i]) + p2.pixels[i])));
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      o.expect(m1.label[k] >= 0.0f && m2.label[k] >= 0.0f, "negative mixed label");
      worst_label = std::max(worst_label, std::abs((double(m1.label[k]) + m2.label[k]) -
                                                   (double(p1.label[k]) + p2.label[k])));
      s1 += m1.label[k];
      s2 += m2.label[k];
    }
    worst_label = std::max({worst_label, std::abs(s1 - 1.0), std::abs(s2 - 1.0)});
  }
  o.expect(worst_pixel <= 1e-6, "pixel conservation off by " + fmt("%.2e", worst_pixel));
  o.expect(worst_label <= 1e-6, "label conservation or simplex off by " + fmt("%.2e", worst_label));

  std::vector<Patch> batch;
  for (std::size_t i = 0; i < 10; ++i) batch.push_back(random_patch(rng, 16, i % 3, 3));
  const auto doubled = mixup_batch(batch, cfg, rng);
  o.expect(doubled.size() == 20, "batch of 10 became " + std::to_string(doubled.size()));
  o.note("1e4 pairs, pixel " + fmt("%.1e", worst_pixel) + ", label " + fmt("%.1e", worst_label) +
         "; 10 -> " + std::to_string(doubled.size()));
  return o;
}

// -------------------------------------------------------------- front-ends

std::size_t argmax_row(const dsp::Spectrogram& s, std::size_t frame) {
  std::size_t best = 0;
  for (std::size_t b = 1; b < s.bins; ++b)
    if (s(b, frame) > s(best, frame)) best = b;
  return best;
}

Outcome criterion_frontends() {
  Outcome o;
  using testing::sine;
  {
    const double mel_top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
    std::size_t expect = 0;
    double best = 1e9;
    for (std::size_t j = 0; j < 64; ++j) {
      const double m = mel_top * ((2 * j + 1) + (2 * j + 2)) / 2.0 / 129.0;
      const double hz = 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
      if (std::abs(hz - 1000.0) < best) best = std::abs(hz - 1000.0), expect = j;
    }
    auto s = dsp::log_mel(sine(1000.0, 1.0, 16000));
    for (std::size_t t = 0; t < s.frames; ++t)
      o.expect(argmax_row(s, t) == expect, "log-mel frame " + std::to_string(t));
    o.note("log-mel band " + std::to_string(expect));
  }
  {
    auto erb = [](double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); };
    const double lo = erb(50.0), hi = erb(8000.0), target = erb(1000.0);
    const auto expect = static_cast<std::size_t>(std::lround((target - lo) / (hi - lo) * 63.0));
    auto s = dsp::gammatone_spec(sine(1000.0, 1.0, 16000));
    for (std::size_t t = 2; t < s.frames; ++t)
      o.expect(argmax_row(s, t) == expect, "gammatone frame " + std::to_string(t));
    o.note("gamma channel " + std::to_string(expect));
  }
  {
    const auto expect = static_cast<std::size_t>(std::lround(8.0 * std::log2(261.6 / 32.70)));
    o.expect(expect == 24, "cqt oracle arithmetic");
    auto s = dsp::cqt_spec(sine(261.6, 2.0, 16000));
    for (std::size_t t = 12; t + 12 < s.frames; ++t)
      o.expect(argmax_row(s, t) == expect, "cqt frame " + std::to_string(t));
    o.note("cqt C4 bin " + std::to_string(expect));
  }
  {
    auto p = dsp::power_stft(sine(1000.0, 0.5, 16000));
    for (std::size_t t = 0; t < p.cols; ++t) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < p.rows; ++k)
        if (p(k, t) > p(best, t)) best = k;
      o.expect(best == 128, "stft frame " + std::to_string(t) + " peak " + std::to_string(best));
    }
  }
  {
    double worst = 0.0;
    auto clip = testing::noise(0.8, 16000, 21, 0.3);
    auto shifted = clip;
    shifted.samples.insert(shifted.samples.begin(), 256, 0.0f);
    for (auto kind : {dsp::FrontEnd::LogMel, dsp::FrontEnd::Gamma, dsp::FrontEnd::MFCC,
                      dsp::FrontEnd::CQT}) {
      dsp::FrontendConfig cfg;
      cfg.kind = kind;
      auto a = dsp::compute_spectrogram(clip, cfg);
      auto b = dsp::compute_spectrogram(shifted, cfg);
      if (b.frames != a.frames + 1) {
        o.expect(false, std::string(dsp::to_string(kind)) + ": delayed clip frame count");
        continue;
      }
      double w = 0.0;
      for (std::size_t t = 0; t < a.frames; ++t)
        for (std::size_t k = 0; k < 64; ++k) {
          const double x = a(k, t), y = b(k, t + 1);
          w = std::max(w, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-6}));
        }
      o.expect(w <= 1e-5, std::string(dsp::to_string(kind)) + " shift error " + fmt("%.2e", w));
      worst = std::max(worst, w);
    }
    o.note("shift covariance " + fmt("%.1e", worst));
  }
  {
    auto out = dsp::resample(sine(440.0, 1.5, 44100));
    o.expect(out.sample_rate == 16000, "resampled rate");
    std::span<const float> mid(out.samples.data() + 4000, 16000);
    double best_hz = 0, best = -1;
    for (int hz = 400; hz <= 480; ++hz) {
      const double m = oracle::dft_magnitude(mid, hz, 16000);
      if (m > best) best = m, best_hz = hz;
    }
    o.expect(std::abs(best_hz - 440.0) <= 1.0, "resampled peak at " + fmt("%.0f Hz", best_hz));
    o.note("resample peak " + fmt("%.0f Hz", best_hz));
  }
  return o;
}

// ------------------------------------------------------------------ shapes

Outcome criterion_shapes() {
  Outcome o;
  using nn::Shape;
  auto cdnn = models::build_cdnn(4);
  const std::vector<Shape> cdnn_expect = {{1, 32, 32, 64}, {1, 16, 16, 128}, {1, 16, 16, 256},
                                          {1, 8, 8, 256},  {1, 8, 8, 512},   {1, 512},
                                          {1, 4}};
  o.expect(cdnn.block_shapes(64, 64) == cdnn_expect, "c-dnn block shapes on 64x64");
  auto student = models::build_student(3);
  const std::vector<Shape> student_expect = {{1, 16, 32, 128}, {1, 512}, {1, 3}};
  o.expect(student.block_shapes(64, 128) == student_expect, "student block shapes on 64x128");
  auto teacher = models::build_cnn_moe(3, 10);
  const double t = static_cast<double>(models::count_params(teacher));
  const double s = static_cast<double>(models::count_params(student));
  o.expect(s / t >= 1.0 / 8.0 && s / t <= 1.0 / 6.0, "ratio " + fmt("%.4f", s / t));
  o.note("teacher " + fmt("%.2fM", t / 1e6) + ", student " + fmt("%.2fM", s / 1e6) + ", ratio 1/" +
         fmt("%.2f", t / s));
  return o;
}

// ----------------------------------------------------------------- overfit

Outcome criterion_overfit() {
  Outcome o;
  auto data = testing::toy_patches(50, 4, 64, 1, 2.0);
  auto net = models::build_cnn_moe(4, 10, 7);
  models::TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch = 10;
  cfg.lr = 1e-3;
  cfg.seed = 1;
  cfg.eval_train_accuracy = true;
  cfg.target_train_accuracy = 0.95;
  const std::clock_t c0 = std::clock();
  const auto w0 = std::chrono::steady_clock::now();
  const auto hist = models::train(net, data, cfg);
  const double cpu = double(std::clock() - c0) / CLOCKS_PER_SEC;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
  const double acc = models::accuracy(net, data);
  o.expect(acc >= 0.95, "training accuracy " + fmt("%.3f", acc));
  o.expect(hist.epochs.size() <= 200, "epochs");
  o.expect(cpu < 600.0, "cpu time " + fmt("%.0f s", cpu));
  o.note("accuracy " + fmt("%.2f", acc) + " after " + std::to_string(hist.epochs.size()) +
         " epochs, cpu " + fmt("%.1f s", cpu) + ", wall " + fmt("%.1f s", wall));
  return o;
}

// ------------------------------------------------------------- determinism

std::vector<std::uint8_t> run_toy(std::uint64_t seed, std::string& probs) {
  auto data = testing::toy_patches(20, 3, 64, 5);
  auto net = models::build_cnn_moe(3, 10, seed);
  models::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch = 8;
  cfg.lr = 1e-4;
  cfg.seed = seed;
  cfg.mixup = true;
  cfg.loss = models::LossKind::KL;
  const auto hist = models::train(net, data, cfg);
  const auto p = models::predict(net, data);
  probs.assign(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(float));
  probs += hist.to_csv();
  return net.encode();
}

void write_corpus(const fs::path& root) {
  std::vector<testing::FixtureRecording> recs;
  std::vector<std::pair<std::string, std::string>> diag;
  const char* diagnoses[] = {"COPD", "COPD", "Asthma", "COPD", "URTI",
                             "Pneumonia", "URTI", "Healthy", "Healthy", "Healthy"};
  for (int i = 0; i < 10; ++i) {
    testing::FixtureRecording r;
    r.id = std::to_string(101 + i) + "_1b1_Al_sc_Meditron";
    r.seconds = 6.0;
    r.tone_hz = 200.0 + 150.0 * (i % 3);
    for (int c = 0; c < 3; ++c)
      r.cycles.push_back({1.5 * c, 1.5 * c + 1.4, (i + c) % 2 == 0, (i + c) % 3 == 0});
    recs.push_back(r);
    diag.emplace_back(std::to_string(101 + i), diagnoses[i]);
  }
  testing::write_corpus(root, recs, diag);
}

nlohmann::json run_pipeline(const fs::path& corpus, const fs::path& work, std::string& ckpt) {
  experiment::cmd_prepare(corpus, work / "out", 7, nullptr);
  experiment::ExperimentConfig c;
  c.task = 2;
  c.widths = {4, 4, 4, 4, 4, 8};
  c.mixup = true;
  c.epochs = 2;
  c.batch = 16;
  c.lr = 1e-3;
  c.seed = 3;
  c.folds = {1, 2};
  c.paths.out_dir = (work / "out").string();
  c.paths.cache_dir = (work / "cache").string();
  auto doc = experiment::cmd_train(c, nullptr);
  ckpt.clear();
  for (const auto& f : doc["folds"]) ckpt += slurp(f["checkpoint"].get<std::string>());
  return doc;
}

Outcome criterion_determinism() {
  Outcome o;
  {
    std::string pa, pb;
    const auto a = run_toy(11, pa);
    const auto b = run_toy(11, pb);
    o.expect(a == b, "toy cnn-moe checkpoints differ");
    o.expect(pa == pb, "toy cnn-moe predictions or history differ");
    std::string pc;
    o.expect(run_toy(12, pc) != a, "a different seed gave the same checkpoint");
  }
  {
    testing::TempDir dir("acceptance");
    write_corpus(dir.path() / "corpus");
    std::string ca, cb;
    const auto a = run_pipeline(dir.path() / "corpus", dir.path() / "a", ca);
    const auto b = run_pipeline(dir.path() / "corpus", dir.path() / "b", cb);
    o.expect(!ca.empty() && ca == cb, "pipeline checkpoints differ");
    o.expect(a["scores"] == b["scores"], "pipeline scores differ");
    o.expect(a["confusion"] == b["confusion"], "pipeline confusion differs");
    o.note("toy cnn-moe and two-fold pipeline runs bit-identical (" +
           std::to_string(ca.size()) + " checkpoint bytes)");
  }
  return o;
}

// ---------------------------------------------------------------- corpus

fs::path corpus_root() {
  const char* env = std::getenv("ICBHI_ROOT");
  if (!env || !*env) return {};
  std::error_code ec;
  return fs::is_directory(env, ec) ? fs::path(env) : fs::path();
}

Outcome criterion_census() {
  Outcome o;
  const auto root = corpus_root();
  if (root.empty()) {
    o.skip("ICBHI_ROOT is unset or not a directory; corpus census not run");
    return o;
  }
  const auto index = scan_dataset(root);
  const auto counts = index.cycle_class_counts();
  o.expect(index.recordings.size() == 920, "recordings " + std::to_string(index.recordings.size()));
  o.expect(index.cycle_count() == 6898, "cycles " + std::to_string(index.cycle_count()));
  const std::array<std::size_t, 4> expect = {1864, 886, 506, 3642};
  o.expect(counts == expect, "class counts " + std::to_string(counts[0]) + "/" +
                                 std::to_string(counts[1]) + "/" + std::to_string(counts[2]) +
                                 "/" + std::to_string(counts[3]));
  o.note(std::to_string(index.recordings.size()) + " recordings, " +
         std::to_string(index.cycle_count()) + " cycles, " +
         std::to_string(index.warnings.size()) + " warnings");
  return o;
}

Outcome criterion_official_split() {
  Outcome o;
  const auto root = corpus_root();
  if (root.empty()) {
    o.skip("ICBHI_ROOT is unset or not a directory; official split not checked");
    return o;
  }
  fs::path list;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".txt" && is_split_file(e.path()))
      list = e.path();
  if (list.empty()) {
    o.skip("no official train/test list under " + root.string());
    return o;
  }
  const auto index = scan_dataset(root);
  const auto official = parse_official_split(data_detail::read_text(list));
  // Independent enumeration: every patient must sit on one side only.
  std::map<std::string, std::set<std::string>> sides;
  for (const auto& [id, subset] : official.assignment) sides[patient_of(id)].insert(subset);
  std::size_t shared = 0;
  for (const auto& [patient, s] : sides) shared += s.size() > 1;
  o.expect(shared == 0, std::to_string(shared) + " patients on both sides");
  try {
    make_splits(index, official);
  } catch (const Error& e) {
    o.expect(false, e.what());
  }
  o.note(std::to_string(sides.size()) + " patients, " + std::to_string(official.assignment.size()) +
         " recordings listed");
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace auscult::acceptance

int main(int argc, char** argv) {
  using namespace auscult::acceptance;
  const std::vector<Criterion> all = {
      {1, "metric fixtures", criterion_metrics},
      {2, "score rows", criterion_paper_rows},
      {3, "gradient checks", criterion_gradients},
      {4, "moe invariants", criterion_moe},
      {5, "mixup conservation", criterion_mixup},
      {6, "front-end oracles", criterion_frontends},
      {7, "shape contracts", criterion_shapes},
      {8, "overfit smoke test", criterion_overfit},
      {9, "determinism", criterion_determinism},
      {10, "corpus census", criterion_census},
      {11, "official split disjointness", criterion_official_split},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const char* verdict = !o.failures.empty()           ? "FAIL"
                          : o.status == Status::Skip ? "SKIP"
                                                     : "PASS";
    std::cout << verdict << " criterion " << c.id << ": " << c.title;
    for (const auto& n : o.notes) std::cout << "; " << n;
    std::cout << '\n';
    for (std::size_t i = 0; i < o.failures.size() && i < 10; ++i)
      std::cout << "    " << o.failures[i] << '\n';
    if (o.failures.size() > 10) std::cout << "    (" << o.failures.size() - 10 << " more)\n";
    std::cout.flush();
    failed += !o.failures.empty();
  }
  return failed == 0 ? 0 : 1;
}
