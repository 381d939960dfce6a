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

#include <array>
#include <vector>

namespace utopya {

struct FusionConfig {
  int d_model = 128;
  int heads = 4;
  int ffn_hidden = 512;
  double modality_dropout = 0.2;
  double eps = 1e-8;
};

// Each non-time-series modality that is available is dropped independently
// with probability p in training; inference returns the mask unchanged.
ModalityMask modality_dropout(const ModalityMask& availability, Rng& rng, double p = 0.2, bool training = true);

// Static context, FiLM, pairwise cross-attention and gated fusion. All
// inputs are batch x d_model with one row per sample.
class Fusion {
 public:
  Fusion() = default;
  Fusion(ParamStore& store, const FusionConfig& cfg, Rng& rng, const std::string& prefix = "fusion");

  // LN(ReLU(W_c [z_tab; z_text; z_mol] + b_c)).
  Var build_context(Tape& tape, const Var& z_tab, const Var& z_text, const Var& z_mol) const;
  // (W_g c + b_g) * z + (W_b c + b_b) with per-modality maps.
  Var film(Tape& tape, Modality m, const Var& z, const Var& c) const;
  // z_i + FFN(z_i + MHA(LN z_i, LN z_j, LN z_j)) with one token per side.
  Var cross_attend(Tape& tape, const Var& z_i, const Var& z_j) const;
  // Attention weights per head (batch x heads); always one for a single key.
  Matrix attention_weights(Tape& tape, const Var& z_i, const Var& z_j) const;
  // z_i + FFN(z_i), used when a modality has no available partner.
  Var self_update(Tape& tape, const Var& z_i) const;

  // Sum_i m_i g_i z_i / (Sum_i m_i g_i + eps), g_i = sigmoid(W_i [z_i; c] + b_i).
  // masks[k][b] is the availability of modality `mods[k]` for sample b.
  Var gated_fuse(Tape& tape, const std::vector<Modality>& mods, const std::vector<Var>& z,
                 const std::vector<std::vector<bool>>& masks, const Var& c) const;

  // Learned default embedding repeated for `batch` rows.
  Var default_embedding(Tape& tape, Modality m, Index batch) const;

  // Complete stage: z holds one batch x d tensor per modality (defaults
  // already substituted where unavailable), avail the per-sample masks.
  struct Output {
    Var fused;
    Var context;
  };
  Output forward(Tape& tape, const std::array<Var, kModalityCount>& z, const std::vector<ModalityMask>& avail) const;

  const FusionConfig& config() const { return cfg_; }

  struct FilmParams {
    ag::Parameter* w_gamma = nullptr;
    ag::Parameter* b_gamma = nullptr;
    ag::Parameter* w_beta = nullptr;
    ag::Parameter* b_beta = nullptr;
  };
  const FilmParams& film_params(Modality m) const { return film_[static_cast<std::size_t>(m)]; }
  const nn::Linear& attn_out() const { return wo_; }
  const nn::Linear& ffn_out() const { return ffn2_; }

 private:
  Var attend(Tape& tape, const Var& z_i, const Var& z_j, Matrix* weights) const;
  Var ffn(Tape& tape, const Var& x) const;

  FusionConfig cfg_;
  nn::Linear context_;
  nn::LayerNorm context_ln_;
  std::array<FilmParams, kModalityCount> film_{};
  nn::LayerNorm attn_ln_;
  nn::Linear wq_, wk_, wv_, wo_;
  nn::Linear ffn1_, ffn2_;
  std::array<nn::Linear, kModalityCount> gate_{};
  std::array<ag::Parameter*, kModalityCount> defaults_{};
};

}  // namespace utopya
