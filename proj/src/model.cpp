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

#include "utopya/model.hpp"

#include <stdexcept>

namespace utopya {

ModalityMask effective_availability(const ModalityMask& record_mask, const ModalityMask& enabled) {
  ModalityMask out{};
  for (int k = 0; k < kModalityCount; ++k) out[k] = record_mask[k] && enabled[k];
  at(out, Modality::ts) = true;
  return out;
}

Batch make_batch(const std::vector<BatchItem>& items, const ModelConfig& cfg) {
  if (items.empty()) throw std::invalid_argument("make_batch: empty batch");
  const int W = cfg.heads.window, H = cfg.heads.horizon;
  const auto B = static_cast<Index>(items.size());
  Batch batch;
  batch.size = B;
  batch.x.resize(B * W, channels::kInputs);
  batch.y.resize(B, static_cast<Index>(channels::kTargets) * H);
  if (cfg.use_recon) batch.x_flat.resize(B, static_cast<Index>(W) * channels::kInputs);
  batch.norm_mean = Matrix::Zero(B, channels::kContinuousTargets);
  batch.norm_scale = Matrix::Ones(B, channels::kContinuousTargets);

  std::vector<Matrix> audio_parts, img_parts;
  std::vector<Eigen::RowVectorXd> tab_parts, text_parts;
  std::vector<const std::vector<MolecularGraph>*> mols;
  batch.img_offsets.push_back(0);

  for (Index b = 0; b < B; ++b) {
    const BatchItem& it = items[static_cast<std::size_t>(b)];
    const Matrix& x = it.x ? *it.x : it.window->x;
    if (x.rows() != W || x.cols() != channels::kInputs) throw std::invalid_argument("make_batch: window shape");
    batch.x.middleRows(b * W, W) = x;
    batch.y.row(b) = flatten_target(it.window->y_target);
    if (cfg.use_recon) {
      for (int t = 0; t < W; ++t) batch.x_flat.block(b, static_cast<Index>(t) * channels::kInputs, 1, channels::kInputs) = x.row(t);
    }
    batch.anomaly.push_back(it.window->anomaly_label);
    batch.phase.push_back(static_cast<Index>(it.window->phase_label));
    batch.availability.push_back(it.availability);
    const ExperimentRecord& rec = *it.record;
    if (rec.norm_mean.size() >= channels::kContinuousTargets) {
      batch.norm_mean.row(b) = rec.norm_mean.head(channels::kContinuousTargets);
      batch.norm_scale.row(b) = rec.norm_scale.head(channels::kContinuousTargets);
    }
    const ModalityMask& m = it.availability;
    if (at(m, Modality::audio)) {
      audio_parts.push_back(audio_segment(rec, it.window->t_start, W, cfg.audio_frames));
      batch.audio_rows.push_back(b);
    }
    if (at(m, Modality::tab)) {
      tab_parts.push_back(TabularEncoder::fit_width(rec.static_tab));
      batch.tab_rows.push_back(b);
    }
    if (at(m, Modality::text)) {
      text_parts.push_back(rec.text_emb.transpose());
      batch.text_rows.push_back(b);
    }
    if (at(m, Modality::img)) {
      for (const auto& v : rec.img_feats) img_parts.push_back(v.transpose());
      batch.img_offsets.push_back(batch.img_offsets.back() + static_cast<Index>(rec.img_feats.size()));
      batch.img_rows.push_back(b);
    }
    if (at(m, Modality::mol)) {
      mols.push_back(&rec.molecules);
      batch.mol_rows.push_back(b);
    }
  }

  if (!audio_parts.empty()) {
    const Index per = static_cast<Index>(cfg.audio_frames) * AudioEncoder::kMelBins;
    batch.audio.resize(static_cast<Index>(audio_parts.size()) * per, 1);
    for (std::size_t i = 0; i < audio_parts.size(); ++i) {
      const Matrix& seg = audio_parts[i];
      for (Index f = 0; f < seg.rows(); ++f) {
        for (Index k = 0; k < seg.cols(); ++k) batch.audio(static_cast<Index>(i) * per + f * seg.cols() + k, 0) = seg(f, k);
      }
    }
  }
  auto stack = [](const std::vector<Eigen::RowVectorXd>& rows) {
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Index>(i)) = rows[i];
    return m;
  };
  batch.tab = stack(tab_parts);
  batch.text = stack(text_parts);
  if (!img_parts.empty()) {
    batch.img.resize(static_cast<Index>(img_parts.size()), img_parts.front().cols());
    for (std::size_t i = 0; i < img_parts.size(); ++i) batch.img.row(static_cast<Index>(i)) = img_parts[i];
  }
  if (!mols.empty()) batch.mol = GcnEncoder::batch(mols);
  return batch;
}

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (!at(cfg.modalities, Modality::ts)) throw std::invalid_argument("model: the time-series modality is mandatory");
  Rng rng(seed);
  const int d = cfg.tcn.d_model;
  tcn_ = TcnEncoder(store_, cfg.tcn, rng);
  if (at(cfg.modalities, Modality::audio)) audio_ = AudioEncoder(store_, d, rng);
  if (at(cfg.modalities, Modality::tab)) tab_ = TabularEncoder(store_, d, rng);
  if (at(cfg.modalities, Modality::text)) text_ = VectorEncoder(store_, 384, d, rng, "text");
  if (at(cfg.modalities, Modality::img)) img_ = VectorEncoder(store_, 512, d, rng, "img");
  if (at(cfg.modalities, Modality::mol)) gcn_ = GcnEncoder(store_, d, rng);
  FusionConfig fc = cfg.fusion;
  fc.d_model = d;
  fusion_ = Fusion(store_, fc, rng);
  HeadsConfig hc = cfg.heads;
  hc.d_model = d;
  pred_ = PredictionHead(store_, hc, rng);
  cls_ = ClassificationHead(store_, hc, rng);
  if (cfg.use_recon) recon_ = ReconstructionHead(store_, hc, rng);
}

Var Model::embed(Tape& tape, Modality m, const Var& sub, const std::vector<Index>& rows, Index batch) const {
  Var def = fusion_.default_embedding(tape, m, 1);
  if (rows.empty()) return ag::repeat_rows(def, batch);
  std::vector<bool> mask(static_cast<std::size_t>(batch), false);
  std::vector<Index> map(static_cast<std::size_t>(batch), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    mask[static_cast<std::size_t>(rows[i])] = true;
    map[static_cast<std::size_t>(rows[i])] = static_cast<Index>(i);
  }
  return ag::select_rows(mask, ag::gather_rows(sub, map), def);
}

Model::Output Model::forward(Tape& tape, const Batch& batch, Rng& rng, bool training) const {
  const Index B = batch.size;
  const Index W = cfg_.heads.window;
  Output out;
  auto enc = tcn_.forward(tape, tape.constant(batch.x), W, rng, training);
  out.pooled = enc.pooled;
  std::vector<Index> last(static_cast<std::size_t>(B));
  for (Index b = 0; b < B; ++b) last[static_cast<std::size_t>(b)] = b * W + W - 1;
  Var last_step = ag::gather_rows(enc.per_step, last);

  std::array<Var, kModalityCount> z;
  z[static_cast<std::size_t>(Modality::ts)] = enc.pooled;
  auto slot = [&](Modality m) -> Var& { return z[static_cast<std::size_t>(m)]; };
  const bool use_audio = at(cfg_.modalities, Modality::audio) && !batch.audio_rows.empty();
  slot(Modality::audio) = embed(
      tape, Modality::audio,
      use_audio ? audio_.forward(tape, tape.constant(batch.audio), static_cast<Index>(batch.audio_rows.size()),
                                 cfg_.audio_frames, training)
                : Var(),
      use_audio ? batch.audio_rows : std::vector<Index>{}, B);
  const bool use_tab = at(cfg_.modalities, Modality::tab) && !batch.tab_rows.empty();
  slot(Modality::tab) = embed(tape, Modality::tab, use_tab ? tab_.forward(tape, tape.constant(batch.tab)) : Var(),
                              use_tab ? batch.tab_rows : std::vector<Index>{}, B);
  const bool use_text = at(cfg_.modalities, Modality::text) && !batch.text_rows.empty();
  if (use_text) {
    std::vector<Index> offsets(batch.text_rows.size() + 1);
    for (std::size_t i = 0; i < offsets.size(); ++i) offsets[i] = static_cast<Index>(i);
    slot(Modality::text) = embed(tape, Modality::text, text_.forward(tape, tape.constant(batch.text), offsets),
                                 batch.text_rows, B);
  } else {
    slot(Modality::text) = embed(tape, Modality::text, Var(), {}, B);
  }
  const bool use_img = at(cfg_.modalities, Modality::img) && !batch.img_rows.empty();
  slot(Modality::img) = embed(tape, Modality::img,
                              use_img ? img_.forward(tape, tape.constant(batch.img), batch.img_offsets) : Var(),
                              use_img ? batch.img_rows : std::vector<Index>{}, B);
  const bool use_mol = at(cfg_.modalities, Modality::mol) && batch.mol.has_value();
  slot(Modality::mol) = embed(tape, Modality::mol, use_mol ? gcn_.forward(tape, *batch.mol) : Var(),
                              use_mol ? batch.mol_rows : std::vector<Index>{}, B);

  std::vector<ModalityMask> avail = batch.availability;
  for (auto& m : avail) m = effective_availability(m, cfg_.modalities);
  auto fused = fusion_.forward(tape, z, avail);
  out.fused = fused.fused;
  out.context = fused.context;
  out.y_hat = pred_.forward(tape, fused.fused, last_step, rng, training);
  out.logits = cls_.forward(tape, fused.fused, rng, training);
  if (cfg_.use_recon) out.x_hat = recon_.forward(tape, fused.fused);
  return out;
}

LossTerms Model::losses(const Output& out, const Batch& batch) const {
  const int H = cfg_.heads.horizon;
  LossTerms t;
  t.pred = loss_pred(out.y_hat, batch.y, H);
  t.focal = loss_focal(ag::slice_cols(out.logits, 0, 1), batch.anomaly, cfg_.loss.focal_gamma, cfg_.loss.w_plus);
  t.phase = loss_phase(ag::slice_cols(out.logits, 1, kPhaseCount), batch.phase);
  if (cfg_.use_recon) t.recon = loss_recon(out.x_hat, batch.x_flat);
  Var cont = ag::slice_cols(out.y_hat, 0, static_cast<Index>(channels::kContinuousTargets) * H);
  t.smooth = loss_smooth(cont, H);
  t.mono = loss_mono(cont, batch.norm_mean, batch.norm_scale, cfg_.loss.margin, H);
  return t;
}

}  // namespace utopya
