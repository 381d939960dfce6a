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

#include "utopya/encoders.hpp"

namespace utopya {

// Predictions are flattened per sample as variable-major rows: column
// v * horizon + k holds variable v at future step k.
inline constexpr Index pred_column(int variable, int step, int horizon = kHorizon) {
  return static_cast<Index>(variable) * horizon + step;
}
// Flattens an H x 25 target block into the 1 x (25 * H) prediction layout.
Eigen::RowVectorXd flatten_target(const Matrix& y_target);

struct HeadsConfig {
  int d_model = 128;
  int hidden = 256;
  int class_hidden = 128;
  int horizon = kHorizon;
  int window = kWindow;
  double dropout = 0.5;
};

// [z_fused; h_last] -> ReLU hidden -> one projection block per target variable.
class PredictionHead {
 public:
  PredictionHead() = default;
  PredictionHead(ParamStore& store, const HeadsConfig& cfg, Rng& rng, const std::string& prefix = "pred");
  Var forward(Tape& tape, const Var& z_fused, const Var& last_step, Rng& rng, bool training) const;
  const nn::Linear& projection() const { return proj_; }

 private:
  HeadsConfig cfg_;
  nn::Linear hidden_, proj_;
};

// Two-layer MLP emitting one anomaly logit followed by four phase logits.
class ClassificationHead {
 public:
  static constexpr int kOutputs = 1 + kPhaseCount;

  ClassificationHead() = default;
  ClassificationHead(ParamStore& store, const HeadsConfig& cfg, Rng& rng, const std::string& prefix = "cls");
  Var forward(Tape& tape, const Var& z_fused, Rng& rng, bool training) const;

 private:
  HeadsConfig cfg_;
  nn::Linear l1_, l2_;
};

// Mirror MLP from the fused latent to the full window.
class ReconstructionHead {
 public:
  ReconstructionHead() = default;
  ReconstructionHead(ParamStore& store, const HeadsConfig& cfg, Rng& rng, const std::string& prefix = "recon");
  Var forward(Tape& tape, const Var& z_fused) const;

 private:
  nn::Linear l1_, l2_;
};

}  // namespace utopya
