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

#include "utopya/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace utopya {

namespace {

bool is_dynamic(Modality m) { return m == Modality::ts || m == Modality::img || m == Modality::audio; }

Matrix column(const std::vector<double>& v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Index>(i), 0) = v[i];
  return m;
}

}  // namespace

ModalityMask modality_dropout(const ModalityMask& availability, Rng& rng, double p, bool training) {
  if (!training || p <= 0.0) return availability;
  std::bernoulli_distribution drop(p);
  ModalityMask out = availability;
  for (int k = 0; k < kModalityCount; ++k) {
    if (static_cast<Modality>(k) == Modality::ts || !out[k]) continue;
    if (drop(rng)) out[k] = false;
  }
  return out;
}

Fusion::Fusion(ParamStore& store, const FusionConfig& cfg, Rng& rng, const std::string& prefix) : cfg_(cfg) {
  const int d = cfg.d_model;
  if (d % cfg.heads != 0) throw std::invalid_argument("fusion: d_model must be divisible by heads");
  context_ = nn::Linear(store, prefix + ".context", 3 * d, d, rng);
  context_ln_ = nn::LayerNorm(store, prefix + ".context_ln", d);
  for (Modality m : kDynamicModalities) {
    const std::string name = prefix + ".film." + std::string(modality_name(m));
    FilmParams& f = film_[static_cast<std::size_t>(m)];
    f.w_gamma = &store.add(name + ".w_gamma", Matrix::Zero(d, d));
    f.b_gamma = &store.add(name + ".b_gamma", Matrix::Ones(1, d));
    f.w_beta = &store.add(name + ".w_beta", Matrix::Zero(d, d));
    f.b_beta = &store.add(name + ".b_beta", Matrix::Zero(1, d));
  }
  attn_ln_ = nn::LayerNorm(store, prefix + ".attn_ln", d);
  wq_ = nn::Linear(store, prefix + ".attn.q", d, d, rng);
  wk_ = nn::Linear(store, prefix + ".attn.k", d, d, rng);
  wv_ = nn::Linear(store, prefix + ".attn.v", d, d, rng);
  wo_ = nn::Linear(store, prefix + ".attn.o", d, d, rng);
  ffn1_ = nn::Linear(store, prefix + ".ffn1", d, cfg.ffn_hidden, rng);
  ffn2_ = nn::Linear(store, prefix + ".ffn2", cfg.ffn_hidden, d, rng);
  for (Modality m : kDynamicModalities) {
    gate_[static_cast<std::size_t>(m)] =
        nn::Linear(store, prefix + ".gate." + std::string(modality_name(m)), 2 * d, 1, rng);
  }
  for (int k = 0; k < kModalityCount; ++k) {
    const auto m = static_cast<Modality>(k);
    defaults_[static_cast<std::size_t>(k)] =
        &store.add(prefix + ".default." + std::string(modality_name(m)), Matrix::Zero(1, d));
  }
}

Var Fusion::build_context(Tape& tape, const Var& z_tab, const Var& z_text, const Var& z_mol) const {
  Var h = ag::relu(context_(tape, ag::concat_cols({z_tab, z_text, z_mol})));
  return context_ln_(tape, h);
}

Var Fusion::film(Tape& tape, Modality m, const Var& z, const Var& c) const {
  if (!is_dynamic(m)) throw std::invalid_argument("film: only dynamic modalities are modulated");
  const FilmParams& f = film_[static_cast<std::size_t>(m)];
  Var gamma = ag::linear(c, tape.param(*f.w_gamma), tape.param(*f.b_gamma));
  Var beta = ag::linear(c, tape.param(*f.w_beta), tape.param(*f.b_beta));
  return ag::add(ag::mul(gamma, z), beta);
}

Var Fusion::attend(Tape& tape, const Var& z_i, const Var& z_j, Matrix* weights) const {
  Var qi = attn_ln_(tape, z_i);
  Var kj = attn_ln_(tape, z_j);
  Var q = wq_(tape, qi);
  Var k = wk_(tape, kj);
  Var v = wv_(tape, kj);
  const Index dh = cfg_.d_model / cfg_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  if (weights) *weights = Matrix(z_i.rows(), cfg_.heads);
  for (int h = 0; h < cfg_.heads; ++h) {
    Var qh = ag::slice_cols(q, h * dh, dh);
    Var kh = ag::slice_cols(k, h * dh, dh);
    // One key per query, so each softmax runs over a single score.
    Var score = ag::scale(ag::row_sum(ag::mul(qh, kh)), inv_sqrt);
    Var attn = ag::softmax_rows(score);
    if (weights) weights->col(h) = attn.value().col(0);
    heads.push_back(ag::mul_col(ag::slice_cols(v, h * dh, dh), attn));
  }
  return wo_(tape, ag::concat_cols(heads));
}

Var Fusion::ffn(Tape& tape, const Var& x) const { return ffn2_(tape, ag::relu(ffn1_(tape, x))); }

Var Fusion::cross_attend(Tape& tape, const Var& z_i, const Var& z_j) const {
  Var mha = attend(tape, z_i, z_j, nullptr);
  return ag::add(z_i, ffn(tape, ag::add(z_i, mha)));
}

Matrix Fusion::attention_weights(Tape& tape, const Var& z_i, const Var& z_j) const {
  Matrix w;
  attend(tape, z_i, z_j, &w);
  return w;
}

Var Fusion::self_update(Tape& tape, const Var& z_i) const { return ag::add(z_i, ffn(tape, z_i)); }

Var Fusion::gated_fuse(Tape& tape, const std::vector<Modality>& mods, const std::vector<Var>& z,
                       const std::vector<std::vector<bool>>& masks, const Var& c) const {
  if (mods.size() != z.size() || mods.size() != masks.size() || mods.empty()) {
    throw std::invalid_argument("gated_fuse: inconsistent modality lists");
  }
  const Index batch = c.rows();
  std::vector<int> present(static_cast<std::size_t>(batch), 0);
  std::vector<Var> num, den;
  for (std::size_t k = 0; k < mods.size(); ++k) {
    if (static_cast<Index>(masks[k].size()) != batch) throw std::invalid_argument("gated_fuse: mask length");
    std::vector<double> m(static_cast<std::size_t>(batch));
    for (Index b = 0; b < batch; ++b) {
      m[static_cast<std::size_t>(b)] = masks[k][static_cast<std::size_t>(b)] ? 1.0 : 0.0;
      present[static_cast<std::size_t>(b)] += masks[k][static_cast<std::size_t>(b)] ? 1 : 0;
    }
    const nn::Linear& gate = gate_.at(static_cast<std::size_t>(mods[k]));
    if (!gate.weight) throw std::invalid_argument("gated_fuse: no gate for a static modality");
    Var g = ag::sigmoid(gate(tape, ag::concat_cols({z[k], c})));
    Var mg = ag::mul(g, tape.constant(column(m)));
    num.push_back(ag::mul_col(z[k], mg));
    den.push_back(mg);
  }
  for (int p : present) {
    if (p == 0) throw std::invalid_argument("gated_fuse: every modality is masked for a sample");
  }
  return ag::div_col(ag::sum(num), ag::add_scalar(ag::sum(den), cfg_.eps));
}

Var Fusion::default_embedding(Tape& tape, Modality m, Index batch) const {
  return ag::repeat_rows(tape.param(*defaults_[static_cast<std::size_t>(m)]), batch);
}

Fusion::Output Fusion::forward(Tape& tape, const std::array<Var, kModalityCount>& z,
                               const std::vector<ModalityMask>& avail) const {
  const auto idx = [](Modality m) { return static_cast<std::size_t>(m); };
  const auto batch = static_cast<Index>(avail.size());
  // Unavailable static rows take the learned default so their values never
  // reach the context.
  std::array<Var, kStaticModalities.size()> zs;
  for (std::size_t k = 0; k < kStaticModalities.size(); ++k) {
    const Modality m = kStaticModalities[k];
    std::vector<bool> mask(static_cast<std::size_t>(batch));
    bool all = true;
    for (Index b = 0; b < batch; ++b) {
      mask[static_cast<std::size_t>(b)] = at(avail[static_cast<std::size_t>(b)], m);
      all = all && mask[static_cast<std::size_t>(b)];
    }
    zs[k] = all ? z[idx(m)] : ag::select_rows(mask, z[idx(m)], default_embedding(tape, m, 1));
  }
  Var c = build_context(tape, zs[0], zs[1], zs[2]);

  std::vector<Modality> mods;
  std::vector<Var> modulated;
  std::vector<std::vector<bool>> masks;
  for (Modality m : kDynamicModalities) {
    std::vector<bool> mask(static_cast<std::size_t>(batch));
    bool any = false;
    for (Index b = 0; b < batch; ++b) {
      mask[static_cast<std::size_t>(b)] = at(avail[static_cast<std::size_t>(b)], m);
      any = any || mask[static_cast<std::size_t>(b)];
    }
    if (!any) continue;  // nothing to contribute in this batch
    mods.push_back(m);
    modulated.push_back(film(tape, m, z[idx(m)], c));
    masks.push_back(std::move(mask));
  }

  // Pairwise attention restricted to available pairs; a modality's updates
  // from several partners are averaged.
  std::vector<Var> attended;
  for (std::size_t i = 0; i < mods.size(); ++i) {
    std::vector<double> n_partner(static_cast<std::size_t>(batch), 0.0);
    std::vector<std::vector<double>> pair_mask(mods.size());
    for (std::size_t j = 0; j < mods.size(); ++j) {
      if (j == i) continue;
      pair_mask[j].assign(static_cast<std::size_t>(batch), 0.0);
      for (Index b = 0; b < batch; ++b) {
        if (masks[i][static_cast<std::size_t>(b)] && masks[j][static_cast<std::size_t>(b)]) {
          pair_mask[j][static_cast<std::size_t>(b)] = 1.0;
          n_partner[static_cast<std::size_t>(b)] += 1.0;
        }
      }
    }
    std::vector<Var> terms;
    for (std::size_t j = 0; j < mods.size(); ++j) {
      if (j == i) continue;
      std::vector<double> w(static_cast<std::size_t>(batch), 0.0);
      bool any = false;
      for (Index b = 0; b < batch; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        if (pair_mask[j][bi] > 0.0) {
          w[bi] = 1.0 / n_partner[bi];
          any = true;
        }
      }
      if (!any) continue;
      terms.push_back(ag::mul_col(cross_attend(tape, modulated[i], modulated[j]), tape.constant(column(w))));
    }
    std::vector<double> solo(static_cast<std::size_t>(batch), 0.0);
    bool any_solo = false;
    for (Index b = 0; b < batch; ++b) {
      if (n_partner[static_cast<std::size_t>(b)] == 0.0) {
        solo[static_cast<std::size_t>(b)] = 1.0;
        any_solo = true;
      }
    }
    if (any_solo) terms.push_back(ag::mul_col(self_update(tape, modulated[i]), tape.constant(column(solo))));
    attended.push_back(ag::sum(terms));
  }
  return {gated_fuse(tape, mods, attended, masks, c), c};
}

}  // namespace utopya
