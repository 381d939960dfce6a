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

#include "utopya/heads.hpp"

namespace utopya {

Eigen::RowVectorXd flatten_target(const Matrix& y_target) {
  const int horizon = static_cast<int>(y_target.rows());
  Eigen::RowVectorXd out(y_target.size());
  for (int v = 0; v < y_target.cols(); ++v) {
    for (int k = 0; k < horizon; ++k) out(pred_column(v, k, horizon)) = y_target(k, v);
  }
  return out;
}

PredictionHead::PredictionHead(ParamStore& store, const HeadsConfig& cfg, Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  hidden_ = nn::Linear(store, prefix + ".hidden", 2 * cfg.d_model, cfg.hidden, rng);
  proj_ = nn::Linear(store, prefix + ".proj", cfg.hidden, channels::kTargets * cfg.horizon, rng);
}

Var PredictionHead::forward(Tape& tape, const Var& z_fused, const Var& last_step, Rng& rng, bool training) const {
  Var h = ag::relu(hidden_(tape, ag::concat_cols({z_fused, last_step})));
  return proj_(tape, ag::dropout(h, cfg_.dropout, rng, training));
}

ClassificationHead::ClassificationHead(ParamStore& store, const HeadsConfig& cfg, Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  l1_ = nn::Linear(store, prefix + ".fc1", cfg.d_model, cfg.class_hidden, rng);
  l2_ = nn::Linear(store, prefix + ".fc2", cfg.class_hidden, kOutputs, rng);
}

Var ClassificationHead::forward(Tape& tape, const Var& z_fused, Rng& rng, bool training) const {
  Var h = ag::dropout(ag::relu(l1_(tape, z_fused)), cfg_.dropout, rng, training);
  return l2_(tape, h);
}

ReconstructionHead::ReconstructionHead(ParamStore& store, const HeadsConfig& cfg, Rng& rng, const std::string& prefix) {
  l1_ = nn::Linear(store, prefix + ".fc1", cfg.d_model, cfg.hidden, rng);
  l2_ = nn::Linear(store, prefix + ".fc2", cfg.hidden, static_cast<Index>(cfg.window) * channels::kInputs, rng);
}

Var ReconstructionHead::forward(Tape& tape, const Var& z_fused) const {
  return l2_(tape, ag::relu(l1_(tape, z_fused)));
}

}  // namespace utopya
