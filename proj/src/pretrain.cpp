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

#include "utopya/pretrain.hpp"

#include "utopya/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace utopya {

std::vector<bool> block_mask(int length, double ratio, int min_run, int max_run, Rng& rng) {
  if (min_run < 1 || max_run < min_run || length < min_run) throw std::invalid_argument("block_mask: bad run lengths");
  std::vector<bool> mask(static_cast<std::size_t>(length), false);
  const int target = static_cast<int>(std::ceil(ratio * length));
  int covered = 0;
  std::uniform_int_distribution<int> len_dist(min_run, max_run);
  for (int attempt = 0; covered < target && attempt < 1000; ++attempt) {
    const int len = std::min(len_dist(rng), length);
    std::uniform_int_distribution<int> start_dist(0, length - len);
    const int start = start_dist(rng);
    // Keep runs separated by at least one unmasked step so they stay distinct.
    const int lo = std::max(0, start - 1), hi = std::min(length, start + len + 1);
    bool clash = false;
    for (int t = lo; t < hi && !clash; ++t) clash = mask[static_cast<std::size_t>(t)];
    if (clash) continue;
    for (int t = start; t < start + len; ++t) mask[static_cast<std::size_t>(t)] = true;
    covered += len;
  }
  return mask;
}

Var masked_mse(const Var& pred, const Matrix& target, const std::vector<bool>& row_mask) {
  if (static_cast<Index>(row_mask.size()) != pred.rows() || target.rows() != pred.rows() ||
      target.cols() != pred.cols()) {
    throw std::invalid_argument("masked_mse: shape mismatch");
  }
  Matrix m = Matrix::Zero(pred.rows(), pred.cols());
  Index count = 0;
  for (std::size_t r = 0; r < row_mask.size(); ++r) {
    if (row_mask[r]) {
      m.row(static_cast<Index>(r)).setOnes();
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("masked_mse: nothing masked");
  Tape& tape = pred.tape();
  Var diff = ag::mul(ag::sub(pred, tape.constant(target)), tape.constant(m));
  return ag::scale(ag::sum_all(ag::square(diff)), 1.0 / static_cast<double>(count * pred.cols()));
}

Var nt_xent(const Var& a, const Var& b, double temperature) {
  const Index n = a.rows();
  if (b.rows() != n || n < 2) throw std::invalid_argument("nt_xent: need two views of at least two samples");
  Var z = ag::concat_rows({ag::l2_normalize_rows(a), ag::l2_normalize_rows(b)});
  Var sim = ag::scale(ag::matmul_nt(z, z), 1.0 / temperature);
  // A large negative on the diagonal removes self-similarity from the softmax.
  Matrix diag = Matrix::Zero(2 * n, 2 * n);
  diag.diagonal().setConstant(-1e9);
  sim = ag::add(sim, z.tape().constant(diag));
  std::vector<Index> targets(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    targets[static_cast<std::size_t>(i)] = i + n;
    targets[static_cast<std::size_t>(i + n)] = i;
  }
  return ag::softmax_cross_entropy(sim, targets);
}

PretrainResult ssl_pretrain(const std::vector<const Matrix*>& windows, const PretrainConfig& cfg) {
  if (windows.size() < 2) throw std::invalid_argument("ssl_pretrain: need at least two windows");
  const Index seq = windows.front()->rows();
  for (const Matrix* w : windows) {
    if (w->rows() != seq || w->cols() != cfg.tcn.inputs) throw std::invalid_argument("ssl_pretrain: window shape");
  }
  Rng rng(cfg.seed);
  ParamStore store;
  TcnEncoder enc(store, cfg.tcn, rng);
  nn::Linear head(store, "ssl.recon", cfg.tcn.d_model, cfg.tcn.inputs, rng);
  AdamW opt(0.9, 0.999, 1e-8, cfg.weight_decay);

  PretrainResult result;
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bsz = static_cast<std::size_t>(std::max(2, cfg.batch));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int batches = 0;
    for (std::size_t i0 = 0; i0 + 1 < order.size(); i0 += bsz) {
      const std::size_t i1 = std::min(order.size(), i0 + bsz);
      const auto B = static_cast<Index>(i1 - i0);
      if (B < 2) break;
      Matrix clean(B * seq, cfg.tcn.inputs), masked, other(B * seq, cfg.tcn.inputs);
      std::vector<bool> rows;
      rows.reserve(static_cast<std::size_t>(B * seq));
      for (Index b = 0; b < B; ++b) {
        const Matrix& x = *windows[order[i0 + static_cast<std::size_t>(b)]];
        clean.middleRows(b * seq, seq) = augment(x, rng, cfg.augment);
        other.middleRows(b * seq, seq) = augment(x, rng, cfg.augment);
        auto m = block_mask(static_cast<int>(seq), cfg.mask_ratio, cfg.min_run, cfg.max_run, rng);
        rows.insert(rows.end(), m.begin(), m.end());
      }
      masked = clean;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r]) masked.row(static_cast<Index>(r)).setZero();
      }
      store.zero_grad();
      Tape tape;
      auto view1 = enc.forward(tape, tape.constant(masked), seq, rng, true);
      auto view2 = enc.forward(tape, tape.constant(other), seq, rng, true);
      Var recon = masked_mse(head(tape, view1.per_step), clean, rows);
      Var contrast = nt_xent(view1.pooled, view2.pooled, cfg.temperature);
      Var total = ag::add(recon, ag::scale(contrast, cfg.contrastive_weight));
      tape.backward(total);
      auto params = store.trainable();
      clip_grad_norm(params, 1.0);
      opt.step(params, cfg.lr);
      sum += total.scalar();
      ++batches;
    }
    result.epoch_loss.push_back(batches ? sum / batches : 0.0);
  }
  for (const ag::Parameter* p : store.all()) {
    if (p->group == "encoder") result.weights[p->name] = p->value;
  }
  return result;
}

void load_encoder_weights(ParamStore& store, const EncoderWeights& weights) {
  for (const auto& [name, value] : weights) {
    ag::Parameter* p = store.find(name);
    if (p == nullptr) throw std::invalid_argument("encoder weight not in model: " + name);
    if (p->value.rows() != value.rows() || p->value.cols() != value.cols()) {
      throw std::invalid_argument("encoder weight shape differs: " + name);
    }
    p->value = value;
  }
  for (const ag::Parameter* p : store.all()) {
    if (p->group == "encoder" && weights.find(p->name) == weights.end()) {
      throw std::invalid_argument("encoder weight missing: " + p->name);
    }
  }
}

}  // namespace utopya
