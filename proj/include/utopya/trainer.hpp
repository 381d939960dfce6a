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

#pragma once

#include "utopya/augment.hpp"
#include "utopya/curriculum.hpp"
#include "utopya/model.hpp"
#include "utopya/scoring.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace utopya {

struct TrainConfig {
  double lr = 3e-4;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double warmup_epochs = 3.0;
  double t_max = 100.0;
  double lr_min = 1e-6;
  double warmup_start = 1e-7;
  double clip_norm = 1.0;
  int batch = 16;
  int accum = 4;
  int patience = 20;
  double encoder_ft_lr = 3e-5;
  int freeze_epochs = 3;
  int max_epochs = 100;
  int eval_batch = 64;
  std::uint64_t seed = 0;

  bool use_curriculum = true;
  bool use_augment = true;
  bool use_modality_dropout = true;
  AugmentConfig augment;
  CurriculumSchedule curriculum;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// Linear warmup from warmup_start to lr, then cosine decay to lr_min over
// t_max epochs; constant lr_min afterwards. `epoch` may be fractional.
double lr_at(double epoch, const TrainConfig& cfg);

// Adam with decoupled weight decay. Moments are keyed by parameter and each
// parameter keeps its own step count, so frozen parameters resume cleanly.
class AdamW {
 public:
  AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8, double weight_decay = 1e-3);

  // Updates every parameter with a gradient; lr_scale maps a parameter group
  // to a multiplier of `lr`.
  void step(const std::vector<ag::Parameter*>& params, double lr,
            const std::function<double(const ag::Parameter&)>& lr_scale = {});

 private:
  struct State {
    Matrix m, v;
    long long t = 0;
  };
  double beta1_, beta2_, eps_, wd_;
  std::map<const ag::Parameter*, State> state_;
};

// Global L2 norm over the gradients of `params`.
double grad_norm(const std::vector<ag::Parameter*>& params);
// Rescales gradients so the global norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(const std::vector<ag::Parameter*>& params, double max_norm);

struct StepInfo {
  int epoch = 0;  // 1-based
  long long step = 0;
  double lr = 0.0;
  double grad_norm_before = 0.0;
  double grad_norm_after = 0.0;
  bool encoder_frozen = false;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  LossComponents train;
  double train_total = 0.0;
  double val_total = 0.0;
  double val_auroc = 0.0;  // NaN when the validation set has one class
  int n_train_windows = 0;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_score = 0.0;
  bool stopped_early = false;
  std::string selection_note;
};

void write_history_csv(const History& h, const std::filesystem::path& path);

struct FitCallbacks {
  std::function<void(const StepInfo&, const Model&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Windows must reference `records` through WindowSample::record_index.
struct WindowSet {
  const std::vector<ExperimentRecord>* records = nullptr;
  std::vector<const WindowSample*> windows;
};

// Throws std::invalid_argument on an empty training set.
History fit(Model& model, const WindowSet& train, const WindowSet& val, const TrainConfig& cfg,
            const FitCallbacks& callbacks = {});

struct Evaluation {
  std::vector<WindowScore> scores;
  double mean_loss = 0.0;
};

// Inference-mode pass over the windows. pred_mae/pred_mse cover the
// continuous forecast block in normalised units; recon_err is the window
// reconstruction MSE when the model has that head.
Evaluation evaluate(const Model& model, const WindowSet& set, int batch = 64);

// One optimisation step on a fixed batch without augmentation; returns the
// loss before the update. Used for overfit and determinism checks.
double train_step(Model& model, AdamW& opt, const Batch& batch, double lr, Rng& rng, double clip_norm = 1.0);

}  // namespace utopya
