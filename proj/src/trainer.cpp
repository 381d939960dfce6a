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

#include "utopya/trainer.hpp"

#include "utopya/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace utopya {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("train config: ") + name + " must be positive");
  };
  positive(lr, "lr");
  positive(warmup_start, "warmup_start");
  positive(lr_min, "lr_min");
  positive(t_max, "t_max");
  positive(clip_norm, "clip_norm");
  positive(encoder_ft_lr, "encoder_ft_lr");
  positive(eps, "eps");
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be non-negative");
  if (warmup_epochs < 0.0) throw std::invalid_argument("train config: warmup_epochs must be non-negative");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("train config: betas must lie in (0, 1)");
  }
  if (batch < 1 || accum < 1 || patience < 1 || max_epochs < 1 || eval_batch < 1 || freeze_epochs < 0) {
    throw std::invalid_argument("train config: batch, accum, patience and epochs must be positive");
  }
}

double lr_at(double epoch, const TrainConfig& cfg) {
  if (epoch < 0.0) throw std::invalid_argument("lr_at: negative epoch");
  if (epoch < cfg.warmup_epochs) {
    return cfg.warmup_start + (cfg.lr - cfg.warmup_start) * epoch / cfg.warmup_epochs;
  }
  const double e = std::min(epoch - cfg.warmup_epochs, cfg.t_max);
  return cfg.lr_min + (cfg.lr - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * e / cfg.t_max)) / 2.0;
}

AdamW::AdamW(double beta1, double beta2, double eps, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

void AdamW::step(const std::vector<ag::Parameter*>& params, double lr,
                 const std::function<double(const ag::Parameter&)>& lr_scale) {
  for (ag::Parameter* p : params) {
    if (!p->trainable || p->buffer || p->grad.size() == 0) continue;
    const double eta = lr * (lr_scale ? lr_scale(*p) : 1.0);
    State& s = state_[p];
    if (s.t == 0) {
      s.m = Matrix::Zero(p->value.rows(), p->value.cols());
      s.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    ++s.t;
    s.m = beta1_ * s.m + (1.0 - beta1_) * p->grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
    p->value *= 1.0 - eta * wd_;
    p->value.array() -= eta * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps_);
  }
}

double grad_norm(const std::vector<ag::Parameter*>& params) {
  double sq = 0.0;
  for (const ag::Parameter* p : params) {
    if (p->grad.size() != 0) sq += p->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_grad_norm(const std::vector<ag::Parameter*>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (ag::Parameter* p : params) {
      if (p->grad.size() != 0) p->grad *= f;
    }
  }
  return norm;
}

void write_history_csv(const History& h, const std::filesystem::path& path) {
  using io::format_double;
  std::string out =
      "epoch,lr,loss_pred,loss_focal,loss_phase,loss_recon,loss_smooth,loss_mono,train_total,val_total,val_auroc,"
      "n_train_windows\n";
  for (const auto& e : h.epochs) {
    out += std::to_string(e.epoch) + ',' + format_double(e.lr) + ',' + format_double(e.train.pred) + ',' +
           format_double(e.train.focal) + ',' + format_double(e.train.phase) + ',' + format_double(e.train.recon) +
           ',' + format_double(e.train.smooth) + ',' + format_double(e.train.mono) + ',' +
           format_double(e.train_total) + ',' + format_double(e.val_total) + ',' + format_double(e.val_auroc) + ',' +
           std::to_string(e.n_train_windows) + '\n';
  }
  io::write_text(path, out);
}

namespace {

const ExperimentRecord& record_of(const WindowSet& set, const WindowSample& w) {
  if (set.records == nullptr || w.record_index >= set.records->size()) {
    throw std::invalid_argument("window refers to a missing record");
  }
  return (*set.records)[w.record_index];
}

BatchItem eval_item(const WindowSet& set, const WindowSample& w, const ModelConfig& mc) {
  const ExperimentRecord& rec = record_of(set, w);
  return {&w, &rec, nullptr, effective_availability(rec.availability(), mc.modalities)};
}

void add_components(LossComponents& acc, const LossComponents& c, double f) {
  acc.pred += f * c.pred;
  acc.focal += f * c.focal;
  acc.phase += f * c.phase;
  acc.recon += f * c.recon;
  acc.smooth += f * c.smooth;
  acc.mono += f * c.mono;
}

bool encoder_group(const ag::Parameter& p) { return p.group == "encoder"; }

}  // namespace

Evaluation evaluate(const Model& model, const WindowSet& set, int batch) {
  Evaluation ev;
  const ModelConfig& mc = model.config();
  const int H = mc.heads.horizon;
  const Index n_cont = static_cast<Index>(channels::kContinuousTargets) * H;
  Rng rng(0);  // unused in inference mode
  double loss_sum = 0.0;
  const std::size_t n = set.windows.size();
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch));
    std::vector<BatchItem> items;
    for (std::size_t i = start; i < end; ++i) items.push_back(eval_item(set, *set.windows[i], mc));
    Batch b = make_batch(items, mc);
    Tape tape;
    tape.set_grad_enabled(false);
    auto out = model.forward(tape, b, rng, false);
    const LossComponents lc = values_of(model.losses(out, b));
    loss_sum += loss_total(lc, mc.loss) * static_cast<double>(end - start);
    const Matrix& logits = out.logits.value();
    const Matrix& y_hat = out.y_hat.value();
    for (std::size_t i = start; i < end; ++i) {
      const auto r = static_cast<Index>(i - start);
      const WindowSample& w = *set.windows[i];
      WindowScore s;
      s.experiment_id = w.experiment_id;
      s.t_start = w.t_start;
      s.label = w.anomaly_label;
      s.experiment_label = record_of(set, w).is_anomalous;
      s.anomaly_prob = 1.0 / (1.0 + std::exp(-logits(r, 0)));
      const auto diff = (y_hat.row(r).head(n_cont) - b.y.row(r).head(n_cont)).array();
      s.pred_mae = diff.abs().mean();
      s.pred_mse = diff.square().mean();
      if (mc.use_recon) {
        s.has_recon = true;
        s.recon_err = (out.x_hat.value().row(r) - b.x_flat.row(r)).array().square().mean();
      }
      ev.scores.push_back(std::move(s));
    }
  }
  ev.mean_loss = n ? loss_sum / static_cast<double>(n) : 0.0;
  return ev;
}

double train_step(Model& model, AdamW& opt, const Batch& batch, double lr, Rng& rng, double clip_norm) {
  auto params = model.params().trainable();
  model.params().zero_grad();
  Tape tape;
  auto out = model.forward(tape, batch, rng, true);
  Var total = loss_total(tape, model.losses(out, batch), model.config().loss);
  tape.backward(total);
  clip_grad_norm(params, clip_norm);
  opt.step(params, lr);
  return total.scalar();
}

History fit(Model& model, const WindowSet& train, const WindowSet& val, const TrainConfig& cfg,
            const FitCallbacks& callbacks) {
  cfg.validate();
  if (train.windows.empty()) throw std::invalid_argument("fit: empty training partition");
  const ModelConfig& mc = model.config();
  ParamStore& store = model.params();
  Rng rng(cfg.seed);
  AdamW opt(cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
  const double ft_ratio = cfg.encoder_ft_lr / cfg.lr;

  std::vector<double> difficulty;
  difficulty.reserve(train.windows.size());
  for (const auto* w : train.windows) difficulty.push_back(w->difficulty);

  History hist;
  hist.best_score = -std::numeric_limits<double>::infinity();
  std::vector<Matrix> best = store.snapshot();
  int since_best = 0;
  long long global_step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const bool frozen = epoch <= cfg.freeze_epochs;
    store.set_group_trainable("encoder", !frozen);
    auto params = store.trainable();
    auto scale = [&](const ag::Parameter& p) { return encoder_group(p) ? ft_ratio : 1.0; };

    std::vector<std::size_t> active;
    if (cfg.use_curriculum) {
      active = curriculum_filter(difficulty, epoch, cfg.curriculum);
    } else {
      active.resize(train.windows.size());
      for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
    }
    std::shuffle(active.begin(), active.end(), rng);

    const std::size_t bsz = static_cast<std::size_t>(cfg.batch);
    const std::size_t n_micro = (active.size() + bsz - 1) / bsz;
    const std::size_t n_steps = (n_micro + static_cast<std::size_t>(cfg.accum) - 1) / static_cast<std::size_t>(cfg.accum);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.n_train_windows = static_cast<int>(active.size());
    double weight_sum = 0.0;

    for (std::size_t s = 0; s < n_steps; ++s) {
      const std::size_t m0 = s * static_cast<std::size_t>(cfg.accum);
      const std::size_t m1 = std::min(n_micro, m0 + static_cast<std::size_t>(cfg.accum));
      store.zero_grad();
      for (std::size_t m = m0; m < m1; ++m) {
        const std::size_t i0 = m * bsz, i1 = std::min(active.size(), i0 + bsz);
        std::vector<Matrix> xs;
        xs.reserve(i1 - i0);
        std::vector<BatchItem> items;
        for (std::size_t i = i0; i < i1; ++i) {
          const WindowSample& w = *train.windows[active[i]];
          const ExperimentRecord& r = record_of(train, w);
          xs.push_back(cfg.use_augment ? augment(w.x, rng, cfg.augment) : w.x);
          ModalityMask avail = effective_availability(r.availability(), mc.modalities);
          if (cfg.use_modality_dropout) avail = modality_dropout(avail, rng, mc.fusion.modality_dropout, true);
          items.push_back({&w, &r, nullptr, avail});
        }
        for (std::size_t k = 0; k < items.size(); ++k) items[k].x = &xs[k];
        Batch b = make_batch(items, mc);
        Tape tape;
        auto out = model.forward(tape, b, rng, true);
        LossTerms terms = model.losses(out, b);
        Var total = loss_total(tape, terms, mc.loss);
        tape.backward(ag::scale(total, 1.0 / static_cast<double>(m1 - m0)));
        const double f = static_cast<double>(i1 - i0);
        add_components(rec.train, values_of(terms), f);
        rec.train_total += f * total.scalar();
        weight_sum += f;
      }
      const double frac_epoch = static_cast<double>(epoch - 1) + static_cast<double>(s) / static_cast<double>(n_steps);
      const double lr = lr_at(frac_epoch, cfg);
      StepInfo info;
      info.epoch = epoch;
      info.step = global_step++;
      info.lr = lr;
      info.encoder_frozen = frozen;
      info.grad_norm_before = clip_grad_norm(params, cfg.clip_norm);
      info.grad_norm_after = grad_norm(params);
      opt.step(params, lr, scale);
      rec.lr = lr;
      if (callbacks.on_step) callbacks.on_step(info, model);
    }
    if (weight_sum > 0.0) {
      LossComponents mean;
      add_components(mean, rec.train, 1.0 / weight_sum);
      rec.train = mean;
      rec.train_total /= weight_sum;
    }

    double score;
    if (!val.windows.empty()) {
      Evaluation ev = evaluate(model, val, cfg.eval_batch);
      rec.val_total = ev.mean_loss;
      std::vector<double> p;
      std::vector<bool> y;
      for (const auto& s : ev.scores) {
        p.push_back(s.anomaly_prob);
        y.push_back(s.label);
      }
      const bool both = std::find(y.begin(), y.end(), true) != y.end() && std::find(y.begin(), y.end(), false) != y.end();
      rec.val_auroc = both ? auroc(p, y) : std::numeric_limits<double>::quiet_NaN();
      score = both ? rec.val_auroc : -rec.val_total;
      if (!both) hist.selection_note = "validation windows hold one class; selection used validation loss";
    } else {
      rec.val_auroc = std::numeric_limits<double>::quiet_NaN();
      score = -rec.train_total;
      hist.selection_note = "no validation windows; selection used training loss";
    }
    hist.epochs.push_back(rec);
    if (callbacks.on_epoch) callbacks.on_epoch(rec);

    if (score > hist.best_score) {
      hist.best_score = score;
      hist.best_epoch = epoch;
      best = store.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      hist.stopped_early = true;
      break;
    }
  }
  store.set_group_trainable("encoder", true);
  store.restore(best);
  if (hist.selection_note.empty()) {
    hist.selection_note = "checkpoint selected by best validation window AUROC; validation and test AUROC may disagree";
  }
  return hist;
}

}  // namespace utopya
