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

#include "utopya/pipeline.hpp"

#include "utopya/io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace utopya {

std::vector<const WindowSample*> PreparedData::windows_of(std::string_view name) const {
  const std::set<std::string>* ids = nullptr;
  if (name == "train") ids = &split.train;
  if (name == "val") ids = &split.val;
  if (name == "test") ids = &split.test;
  if (ids == nullptr) throw std::invalid_argument("unknown partition: " + std::string(name));
  std::vector<const WindowSample*> out;
  for (const auto& w : windows) {
    if (ids->count(w.experiment_id)) out.push_back(&w);
  }
  return out;
}

WindowSet PreparedData::partition(std::string_view name) const { return {&records, windows_of(name)}; }

PreparedData prepare_data(std::vector<ExperimentRecord> raw, const SplitAssignment& split) {
  std::set<std::string> ids;
  for (const auto& r : raw) ids.insert(r.id);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const auto& id : *part) {
      if (!ids.count(id)) throw DataError("split references experiment missing from the corpus: " + id);
    }
  }
  validate_split(raw, split);
  PreparedData data;
  data.split = split;
  data.records.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    data.records.push_back(normalize_per_experiment(raw[i]));
    auto w = make_windows(data.records.back(), kWindow, kStride, kHorizon, i);
    std::move(w.begin(), w.end(), std::back_inserter(data.windows));
  }
  return data;
}

PreparedData load_prepared(const std::filesystem::path& corpus, const std::filesystem::path& split_file) {
  return prepare_data(load_corpus(corpus), read_split(split_file));
}

PretrainResult pretrain_encoder(const PreparedData& data, const RunConfig& cfg, std::uint64_t seed) {
  std::vector<const Matrix*> xs;
  for (const auto* w : data.windows_of("train")) xs.push_back(&w->x);
  PretrainConfig pc = cfg.pretrain;
  pc.tcn = cfg.model.tcn;
  pc.seed = seed;
  return ssl_pretrain(xs, pc);
}

TrainedModel train_model(const PreparedData& data, const RunConfig& cfg, std::uint64_t seed,
                         const EncoderWeights* pretrained, const FitCallbacks& callbacks) {
  TrainedModel out;
  out.model = std::make_unique<Model>(cfg.model, seed);
  if (pretrained != nullptr) {
    load_encoder_weights(out.model->params(), *pretrained);
  } else if (cfg.use_pretrain) {
    PretrainResult pr = pretrain_encoder(data, cfg, seed);
    out.pretrain_loss = pr.epoch_loss;
    load_encoder_weights(out.model->params(), pr.weights);
  }
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  out.history = fit(*out.model, data.partition("train"), data.partition("val"), tc, callbacks);
  return out;
}

namespace {

void require_both_classes(const std::vector<WindowScore>& scores, std::string_view partition) {
  bool wpos = false, wneg = false, epos = false, eneg = false;
  for (const auto& s : scores) {
    (s.label ? wpos : wneg) = true;
    (s.experiment_label ? epos : eneg) = true;
  }
  if (!(wpos && wneg && epos && eneg)) {
    throw DataError("partition '" + std::string(partition) +
                    "' needs both normal and anomalous windows and experiments for evaluation");
  }
}

}  // namespace

EvalResult evaluate_partition(const Model& model, const PreparedData& data, std::string_view partition,
                              const ScoringConfig& scoring) {
  const int batch = 64;
  Evaluation ev = evaluate(model, data.partition(partition), batch);
  require_both_classes(ev.scores, partition);
  EvalResult res;
  res.fusion_weight = scoring.fusion_weight;
  if (scoring.tune_on_val) {
    Evaluation val = evaluate(model, data.partition("val"), batch);
    const auto exps = aggregate_experiment(val.scores);
    std::vector<double> cls, pred;
    std::vector<bool> y;
    for (const auto& e : exps) {
      cls.push_back(e.max_prob);
      pred.push_back(e.p95_pred_mae);
      y.push_back(e.label);
    }
    res.fusion_weight = tune_fusion_weight(cls, pred, y).weight;
    res.tuned = true;
  }
  res.card = make_scorecard(std::move(ev.scores), res.fusion_weight, scoring.three_signal);
  res.summary = summarize(res.card);
  return res;
}

EvalResult evaluate_baseline(baselines::Method method, const PreparedData& data, std::string_view partition,
                             const baselines::BaselineConfig& cfg) {
  const auto train = data.windows_of("train");
  const auto eval = data.windows_of(partition);
  const auto raw = baselines::run_baseline(method, train, eval, cfg);
  std::vector<WindowScore> scores;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const WindowSample& w = *eval[i];
    WindowScore s;
    s.experiment_id = w.experiment_id;
    s.t_start = w.t_start;
    s.label = w.anomaly_label;
    s.experiment_label = data.records[w.record_index].is_anomalous;
    const double v = std::max(0.0, raw[i]);
    s.anomaly_prob = v / (1.0 + v);
    scores.push_back(std::move(s));
  }
  require_both_classes(scores, partition);
  EvalResult res;
  res.fusion_weight = 1.0;
  res.card = make_scorecard(std::move(scores), 1.0, false);
  res.summary = summarize(res.card);
  return res;
}

std::vector<AblationConfig> ablation_matrix() {
  auto mask = [](std::string_view list) { return parse_modality_list(list); };
  return {
      {"A1", "TS only", mask("ts")},
      {"A2", "TS + GC", mask("ts,mol")},
      {"A3", "TS + Audio", mask("ts,audio")},
      {"A4", "TS + Static (tabular + text, no GC)", mask("ts,tab,text")},
      {"A5", "TS + GC + Audio", mask("ts,mol,audio")},
      {"A6", "TS + GC + Static", mask("ts,mol,tab,text")},
      {"A7", "TS + GC + Audio + Tabular + Text", mask("ts,mol,audio,tab,text")},
      {"A8", "TS + Tabular only", mask("ts,tab")},
      {"A9", "TS + Text only", mask("ts,text")},
      {"A10", "TS + Tabular + Text (no GC)", mask("ts,tab,text")},
      {"A11", "TS + Audio + Tabular + Text (no GC)", mask("ts,audio,tab,text")},
  };
}

std::vector<AblationConfig> select_ablations(std::string_view names) {
  const auto all = ablation_matrix();
  if (names.empty() || names == "all") return all;
  std::vector<AblationConfig> out;
  for (auto token : io::split(names)) {
    auto it = std::find_if(all.begin(), all.end(), [&](const AblationConfig& a) { return a.name == token; });
    if (it == all.end()) throw std::invalid_argument("unknown ablation config: " + std::string(token));
    out.push_back(*it);
  }
  return out;
}

std::vector<AblationRow> run_ablation(const PreparedData& data, const RunConfig& base,
                                      const std::vector<AblationConfig>& configs, std::uint64_t seed) {
  std::optional<PretrainResult> shared;
  std::vector<AblationRow> rows;
  for (const auto& a : configs) {
    AblationRow row;
    row.config = a.name;
    row.description = a.description;
    try {
      if (base.use_pretrain && !shared) shared = pretrain_encoder(data, base, seed);
      RunConfig cfg = base;
      cfg.model.modalities = a.modalities;
      TrainedModel tm = train_model(data, cfg, seed, shared ? &shared->weights : nullptr);
      EvalResult ev = evaluate_partition(*tm.model, data, "test", cfg.scoring);
      row.window_auroc = ev.summary.window_auroc;
      row.exp_auroc = ev.summary.exp_auroc;
      row.multi_signal = ev.summary.fused_auroc;
      row.pred_mae = ev.summary.pred_mae;
      row.pred_mse = ev.summary.pred_mse;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      const double nan = std::nan("");
      row.window_auroc = row.exp_auroc = row.multi_signal = row.pred_mae = row.pred_mse = nan;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

}  // namespace

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  using io::format_double;
  std::string out = "config,description,window_auroc,exp_auroc,multi_signal,pred_mae,pred_mse,status\n";
  for (const auto& r : rows) {
    out += csv_cell(r.config) + ',' + csv_cell(r.description) + ',' + format_double(r.window_auroc) + ',' +
           format_double(r.exp_auroc) + ',' + format_double(r.multi_signal) + ',' + format_double(r.pred_mae) + ',' +
           format_double(r.pred_mse) + ',' + csv_cell(r.status) + '\n';
  }
  io::write_text(path, out);
}

void write_metrics_csv(const MetricSummary& m, double fusion_weight, const std::filesystem::path& path) {
  using io::format_double;
  std::string out =
      "window_auroc,window_auprc,window_f1,window_f1_threshold,exp_auroc,fused_auroc,fusion_weight,pred_mae,pred_mse,"
      "n_windows,n_experiments\n";
  out += format_double(m.window_auroc) + ',' + format_double(m.window_auprc) + ',' + format_double(m.window_f1) + ',' +
         format_double(m.window_f1_threshold) + ',' + format_double(m.exp_auroc) + ',' + format_double(m.fused_auroc) +
         ',' + format_double(fusion_weight) + ',' + format_double(m.pred_mae) + ',' + format_double(m.pred_mse) + ',' +
         std::to_string(m.n_windows) + ',' + std::to_string(m.n_experiments) + '\n';
  io::write_text(path, out);
}

}  // namespace utopya
