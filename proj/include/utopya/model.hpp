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

#include "utopya/fusion.hpp"
#include "utopya/heads.hpp"
#include "utopya/losses.hpp"

#include <memory>
#include <optional>

namespace utopya {

// Default modality set: time series, audio and the three static sources.
inline constexpr ModalityMask kFullModalities = {true, false, true, true, true, true};

struct ModelConfig {
  TcnConfig tcn;
  FusionConfig fusion;
  HeadsConfig heads;
  LossWeights loss;
  ModalityMask modalities = kFullModalities;
  bool use_recon = false;
  int audio_frames = 30;
};

// One sample prepared for a batch. `x` overrides the window values (for
// augmented copies); `availability` is the effective mask after config
// restriction and modality dropout.
struct BatchItem {
  const WindowSample* window = nullptr;
  const ExperimentRecord* record = nullptr;
  const Matrix* x = nullptr;
  ModalityMask availability{};
};

struct Batch {
  Index size = 0;
  Matrix x;        // (size * W) x 29
  Matrix y;        // size x (25 * H)
  Matrix x_flat;   // size x (W * 29), only with reconstruction
  std::vector<bool> anomaly;
  std::vector<Index> phase;
  std::vector<ModalityMask> availability;
  Matrix norm_mean, norm_scale;  // size x 21

  // Inputs for the optional modalities; *_rows lists which samples they belong to.
  Matrix audio;
  std::vector<Index> audio_rows;
  Matrix tab;
  std::vector<Index> tab_rows;
  Matrix text;
  std::vector<Index> text_rows;
  Matrix img;
  std::vector<Index> img_offsets, img_rows;
  std::optional<GcnEncoder::GraphBatch> mol;
  std::vector<Index> mol_rows;
};

// Effective availability: the record's modalities restricted to the config.
ModalityMask effective_availability(const ModalityMask& record_mask, const ModalityMask& enabled);

Batch make_batch(const std::vector<BatchItem>& items, const ModelConfig& cfg);

class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  struct Output {
    Var y_hat;    // size x (25 * H)
    Var logits;   // size x 5: anomaly then phases
    Var x_hat;    // size x (W * 29) when reconstruction is enabled
    Var fused;    // size x d
    Var context;  // size x d
    Var pooled;   // size x d (time-series embedding)
  };

  Output forward(Tape& tape, const Batch& batch, Rng& rng, bool training) const;
  LossTerms losses(const Output& out, const Batch& batch) const;

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const ModelConfig& config() const { return cfg_; }
  const TcnEncoder& tcn() const { return tcn_; }
  const Fusion& fusion() const { return fusion_; }

 private:
  Var embed(Tape& tape, Modality m, const Var& sub, const std::vector<Index>& rows, Index batch) const;

  ModelConfig cfg_;
  ParamStore store_;
  TcnEncoder tcn_;
  AudioEncoder audio_;
  TabularEncoder tab_;
  VectorEncoder text_, img_;
  GcnEncoder gcn_;
  Fusion fusion_;
  PredictionHead pred_;
  ClassificationHead cls_;
  ReconstructionHead recon_;
};

}  // namespace utopya
