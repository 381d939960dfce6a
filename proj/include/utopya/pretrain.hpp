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
#include "utopya/encoders.hpp"

#include <map>
#include <string>
#include <vector>

namespace utopya {

struct PretrainConfig {
  TcnConfig tcn;
  int epochs = 5;
  int batch = 16;
  double lr = 1e-3;
  double weight_decay = 1e-3;
  double mask_ratio = 0.15;
  int min_run = 10;
  int max_run = 30;
  double temperature = 0.1;
  double contrastive_weight = 1.0;  // reconstruction weight is 1
  AugmentConfig augment;
  std::uint64_t seed = 0;
};

// Timestep mask made of non-overlapping contiguous runs with lengths in
// [min_run, max_run], drawn until at least `ratio` of the steps are covered.
std::vector<bool> block_mask(int length, double ratio, int min_run, int max_run, Rng& rng);

// Mean squared error over masked timesteps only; pred and target are
// (batch * seq) x channels.
Var masked_mse(const Var& pred, const Matrix& target, const std::vector<bool>& row_mask);

// NT-Xent over two views: row i of a and row i of b are positives, every
// other row of both views is a negative.
Var nt_xent(const Var& a, const Var& b, double temperature);

using EncoderWeights = std::map<std::string, Matrix>;

struct PretrainResult {
  EncoderWeights weights;
  std::vector<double> epoch_loss;
};

// Masked reconstruction plus contrastive training of a fresh encoder on
// unlabelled windows (each seq x 29).
PretrainResult ssl_pretrain(const std::vector<const Matrix*>& windows, const PretrainConfig& cfg);

// Copies matching encoder tensors into `store`; throws when a name is
// missing or a shape differs.
void load_encoder_weights(ParamStore& store, const EncoderWeights& weights);

}  // namespace utopya
