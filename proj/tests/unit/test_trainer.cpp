/*
 * Copyright 2026 The UTOPYA Authors
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


#include "utopya/simulator.hpp"
#include "utopya/trainer.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace utopya;

namespace {

ModelConfig small_model() {
  ModelConfig cfg;
  cfg.tcn.d_model = 16;
  cfg.tcn.layers = 3;
  cfg.fusion.ffn_hidden = 32;
  cfg.heads.hidden = 24;
  cfg.heads.class_hidden = 12;
  cfg.audio_frames = 16;
  return cfg;
}

struct Corpus {
  std::vector<ExperimentRecord> records;
  std::vector<WindowSample> windows;

  Corpus() {
    for (int i = 0; i < 3; ++i) {
      sim::PlantConfig c;
      c.seed = 10 + static_cast<std::uint64_t>(i);
      c.duration_s = 600;
      c.id = "e" + std::to_string(i);
      if (i > 0) c.faults.push_back({sim::FaultKind::heat_drop, 330, 500, 1.0});
      records.push_back(normalize_per_experiment(sim::simulate(c)));
    }
    for (std::size_t r = 0; r < records.size(); ++r) {
      auto w = make_windows(records[r], kWindow, kStride, kHorizon, r);
      windows.insert(windows.end(), w.begin(), w.end());
    }
  }

  WindowSet set(std::size_t begin, std::size_t end) const {
    WindowSet s;
    s.records = &records;
    for (std::size_t i = begin; i < end; ++i) s.windows.push_back(&windows[i]);
    return s;
  }
  WindowSet all() const { return set(0, windows.size()); }
};

TrainConfig quick_train(int epochs) {
  TrainConfig t;
  t.batch = 4;
  t.accum = 2;
  t.max_epochs = epochs;
  t.seed = 5;
  return t;
}

std::vector<Matrix> group_values(const Model& m, const std::string& group) {
  std::vector<Matrix> out;
  for (const auto* p : m.params().all()) {
    if (p->group == group) out.push_back(p->value);
  }
  return out;
}

}  // namespace

TEST_CASE("learning-rate schedule", "[trainer]") {
  TrainConfig cfg;
  CHECK(lr_at(0.0, cfg) == Catch::Approx(1e-7).epsilon(1e-12));
  CHECK(lr_at(3.0, cfg) == Catch::Approx(3e-4).epsilon(1e-12));
  CHECK(lr_at(53.0, cfg) == Catch::Approx(1.505e-4).epsilon(1e-12));
  CHECK(lr_at(103.0, cfg) == Catch::Approx(1e-6).epsilon(1e-12));
  CHECK(lr_at(500.0, cfg) == Catch::Approx(1e-6).epsilon(1e-12));
  CHECK(lr_at(1.5, cfg) == Catch::Approx(1e-7 + (3e-4 - 1e-7) / 2).epsilon(1e-12));
  // Continuous at the warmup junction.
  CHECK(std::abs(lr_at(3.0 - 1e-9, cfg) - lr_at(3.0, cfg)) < 1e-12);
  double prev = lr_at(3.0, cfg);
  for (double e = 3.5; e <= 103.0; e += 0.5) {
    CHECK(lr_at(e, cfg) <= prev);
    prev = lr_at(e, cfg);
  }
  CHECK_THROWS_AS(lr_at(-1.0, cfg), std::invalid_argument);
}

TEST_CASE("train config validation", "[trainer]") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.batch * cfg.accum == 64);
  cfg.lr = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.accum = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("adamw matches a hand-written update", "[trainer]") {
  ag::Parameter p;
  p.value = Matrix::Constant(1, 2, 1.0);
  AdamW opt(0.9, 0.999, 1e-8, 0.1);
  double m[2] = {0, 0}, v[2] = {0, 0}, w[2] = {1.0, 1.0};
  const double grads[3][2] = {{0.5, -2.0}, {0.1, 0.3}, {-1.0, 0.0}};
  for (int t = 1; t <= 3; ++t) {
    p.grad = Matrix(1, 2);
    p.grad << grads[t - 1][0], grads[t - 1][1];
    opt.step({&p}, 0.01);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grads[t - 1][i];
      v[i] = 0.999 * v[i] + 0.001 * grads[t - 1][i] * grads[t - 1][i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      w[i] = w[i] * (1 - 0.01 * 0.1) - 0.01 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(p.value(0, i) == Catch::Approx(w[i]).epsilon(1e-14));
    }
  }
  // Frozen parameters and buffers are left alone.
  p.trainable = false;
  const Matrix before = p.value;
  opt.step({&p}, 0.01);
  CHECK(p.value == before);
}

TEST_CASE("gradient clipping caps the global norm", "[trainer]") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    ag::Parameter a, b;
    a.grad = nn::normal(3, 4, 1.0 + trial, rng);
    b.grad = nn::normal(1, 5, 1.0 + trial, rng);
    std::vector<ag::Parameter*> ps{&a, &b};
    const double before = grad_norm(ps);
    const Matrix ga = a.grad;
    CHECK(clip_grad_norm(ps, 1.0) == before);
    if (before > 1.0) {
      CHECK(std::abs(grad_norm(ps) - 1.0) < 1e-6);
      CHECK(a.grad.isApprox(ga / before, 1e-12));
    } else {
      CHECK(a.grad == ga);
    }
  }
}

TEST_CASE("fit freezes the encoder for three epochs and clips every step", "[trainer]") {
  Corpus data;
  Model model(small_model(), 1);
  std::vector<Matrix> last = group_values(model, "encoder");
  std::vector<Matrix> heads_before = group_values(model, "head");
  int frozen_steps = 0, thawed_changes = 0;
  FitCallbacks cb;
  cb.on_step = [&](const StepInfo& info, const Model& m) {
    auto now = group_values(m, "encoder");
    if (info.epoch <= 3) {
      CHECK(info.encoder_frozen);
      bool same = true;
      for (std::size_t i = 0; i < now.size(); ++i) same = same && now[i] == last[i];
      CHECK(same);
      ++frozen_steps;
    } else {
      CHECK_FALSE(info.encoder_frozen);
      bool same = true;
      for (std::size_t i = 0; i < now.size(); ++i) same = same && now[i] == last[i];
      thawed_changes += !same;
    }
    if (info.grad_norm_before > 1.0) CHECK(std::abs(info.grad_norm_after - 1.0) < 1e-6);
    CHECK(info.grad_norm_after <= 1.0 + 1e-6);
    last = std::move(now);
  };
  auto cfg = quick_train(4);
  cfg.patience = 100;
  auto hist = fit(model, data.all(), data.set(0, 10), cfg, cb);
  CHECK(frozen_steps > 0);
  CHECK(thawed_changes > 0);
  REQUIRE(hist.epochs.size() == 4);
  CHECK(hist.epochs[0].n_train_windows >= 27);
  CHECK(hist.epochs[0].n_train_windows < 45);
  CHECK_FALSE(hist.selection_note.empty());
  CHECK(hist.best_epoch >= 1);
}

TEST_CASE("fit is deterministic for a seed", "[trainer]") {
  Corpus data;
  auto run = [&](std::uint64_t seed) {
    Model model(small_model(), 2);
    auto cfg = quick_train(2);
    cfg.seed = seed;
    cfg.freeze_epochs = 0;
    fit(model, data.all(), data.all(), cfg);
    return model.params().snapshot();
  };
  const auto a = run(3), b = run(3), c = run(4);
  REQUIRE(a.size() == b.size());
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    all_equal = all_equal && a[i] == b[i];
    any_diff = any_diff || !(a[i] == c[i]);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("fit tracks validation AUROC and stops early", "[trainer]") {
  Corpus data;
  Model model(small_model(), 3);
  auto cfg = quick_train(30);
  cfg.patience = 2;
  cfg.lr = 1e-12;
  cfg.warmup_start = 1e-12;
  cfg.lr_min = 1e-12;
  std::vector<int> seen;
  FitCallbacks cb;
  cb.on_epoch = [&](const EpochRecord& r) { seen.push_back(r.epoch); };
  auto hist = fit(model, data.all(), data.all(), cfg, cb);
  CHECK(hist.stopped_early);
  CHECK(hist.epochs.size() < 30);
  CHECK(seen.size() == hist.epochs.size());
  for (const auto& e : hist.epochs) {
    CHECK(e.val_auroc >= 0.0);
    CHECK(e.val_auroc <= 1.0);
    CHECK(std::isfinite(e.train_total));
  }
}

TEST_CASE("single-class validation falls back to the loss", "[trainer]") {
  Corpus data;
  Model model(small_model(), 4);
  auto hist = fit(model, data.all(), data.set(0, 5), quick_train(1));
  REQUIRE(hist.epochs.size() == 1);
  CHECK(std::isnan(hist.epochs[0].val_auroc));
  CHECK(hist.best_score == Catch::Approx(-hist.epochs[0].val_total));
  CHECK(hist.selection_note.find("validation loss") != std::string::npos);
}

TEST_CASE("fit rejects an empty training set", "[trainer]") {
  Corpus data;
  Model model(small_model(), 5);
  CHECK_THROWS_AS(fit(model, data.set(0, 0), data.all(), quick_train(1)), std::invalid_argument);
}

TEST_CASE("evaluation scores every window", "[trainer]") {
  Corpus data;
  auto mc = small_model();
  mc.use_recon = true;
  Model model(mc, 6);
  auto set = data.all();
  auto ev = evaluate(model, set, 7);
  REQUIRE(ev.scores.size() == set.windows.size());
  for (std::size_t i = 0; i < ev.scores.size(); ++i) {
    const auto& s = ev.scores[i];
    CHECK(s.experiment_id == set.windows[i]->experiment_id);
    CHECK(s.anomaly_prob > 0.0);
    CHECK(s.anomaly_prob < 1.0);
    CHECK(s.pred_mse >= s.pred_mae * s.pred_mae - 1e-12);
    CHECK(s.has_recon);
  }
  // Batch size does not change the scores.
  auto ev2 = evaluate(model, set, 64);
  for (std::size_t i = 0; i < ev.scores.size(); ++i) {
    CHECK(ev.scores[i].anomaly_prob == Catch::Approx(ev2.scores[i].anomaly_prob).epsilon(1e-12));
  }
  CHECK(ev.mean_loss == Catch::Approx(ev2.mean_loss).epsilon(1e-9));
}

TEST_CASE("fixed-batch loss is deterministic without dropout", "[trainer]") {
  Corpus data;
  auto mc = small_model();
  mc.tcn.dropout = 0.0;
  mc.heads.dropout = 0.0;
  Model model(mc, 7);
  std::vector<BatchItem> items;
  for (std::size_t i : {0u, 20u, 40u}) {
    const auto& w = data.windows[i];
    items.push_back({&w, &data.records[w.record_index], nullptr, effective_availability(w.availability, mc.modalities)});
  }
  Batch batch = make_batch(items, mc);
  auto loss = [&](std::uint64_t seed) {
    Tape tape;
    Rng rng(seed);
    auto out = model.forward(tape, batch, rng, true);
    return loss_total(tape, model.losses(out, batch), mc.loss).scalar();
  };
  CHECK(loss(1) == loss(2));
}

TEST_CASE("a single batch can be overfit", "[trainer]") {
  Corpus data;
  auto mc = small_model();
  mc.tcn.dropout = 0.0;
  mc.heads.dropout = 0.0;
  Model model(mc, 8);
  std::vector<BatchItem> items;
  for (std::size_t i : {1u, 16u, 25u, 40u}) {
    const auto& w = data.windows[i];
    items.push_back({&w, &data.records[w.record_index], nullptr, effective_availability(w.availability, mc.modalities)});
  }
  Batch batch = make_batch(items, mc);
  AdamW opt(0.9, 0.999, 1e-8, 0.0);
  Rng rng(0);
  const double initial = train_step(model, opt, batch, 3e-3, rng, 1.0);
  double last = initial;
  for (int s = 1; s < 50; ++s) last = train_step(model, opt, batch, 3e-3, rng, 1.0);
  Tape tape;
  auto out = model.forward(tape, batch, rng, true);
  const double final_loss = loss_total(tape, model.losses(out, batch), mc.loss).scalar();
  INFO("initial " << initial << " last " << last << " final " << final_loss);
  CHECK(final_loss < 0.1 * initial);
}

TEST_CASE("history CSV layout", "[trainer]") {
  History h;
  EpochRecord r;
  r.epoch = 1;
  r.lr = 1e-4;
  r.train_total = 2.5;
  r.val_auroc = 0.75;
  r.n_train_windows = 12;
  h.epochs.push_back(r);
  auto path = std::filesystem::temp_directory_path() / "utopya_history_test.csv";
  write_history_csv(h, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header ==
        "epoch,lr,loss_pred,loss_focal,loss_phase,loss_recon,loss_smooth,loss_mono,train_total,val_total,val_auroc,"
        "n_train_windows");
  CHECK(row.rfind("1,", 0) == 0);
  CHECK(row.ends_with(",12"));
  std::filesystem::remove(path);
}
