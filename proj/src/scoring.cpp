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

#include "utopya/scoring.hpp"

#include "utopya/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace utopya {

namespace {

void check_sizes(const std::vector<double>& s, const std::vector<bool>& y) {
  if (s.size() != y.size()) throw MetricError("scores and labels differ in length");
  for (double v : s) {
    if (std::isnan(v)) throw MetricError("NaN score");
  }
}

// Indices sorted by descending score.
std::vector<std::size_t> order_desc(const std::vector<double>& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return idx;
}

}  // namespace

std::pair<std::int64_t, std::int64_t> auroc_rational(const std::vector<double>& scores, const std::vector<bool>& labels) {
  check_sizes(scores, labels);
  std::int64_t pos = 0, neg = 0;
  for (bool y : labels) (y ? pos : neg)++;
  if (pos == 0 || neg == 0) throw MetricError("AUROC needs both classes");
  // Ascending sweep over tie groups: each positive beats every negative
  // strictly below it and ties the negatives in its own group.
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::int64_t num2 = 0, neg_below = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::int64_t gp = 0, gn = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? gp : gn)++;
      ++j;
    }
    num2 += 2 * gp * neg_below + gp * gn;
    neg_below += gn;
    i = j;
  }
  return {num2, 2 * pos * neg};
}

double auroc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  auto [num, den] = auroc_rational(scores, labels);
  return static_cast<double>(num) / static_cast<double>(den);
}

double auprc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  check_sizes(scores, labels);
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  if (pos == 0) throw MetricError("AUPRC needs at least one positive");
  const auto idx = order_desc(scores);
  double tp = 0, fp = 0, prev_recall = 0, ap = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    const double recall = tp / pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

F1Result f1_at_best(const std::vector<double>& scores, const std::vector<bool>& labels) {
  check_sizes(scores, labels);
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  if (pos == 0) throw MetricError("F1 needs at least one positive");
  const auto idx = order_desc(scores);
  F1Result best{-1.0, 0.0};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    const double here = scores[idx[i]];
    const double threshold = j < idx.size() ? here + (scores[idx[j]] - here) / 2.0
                                            : std::nextafter(here, -std::numeric_limits<double>::infinity());
    const double f1 = 2 * tp / (2 * tp + fp + (pos - tp));
    // Descending sweep visits higher thresholds first; keep the first maximum.
    if (f1 > best.f1) best = {f1, threshold};
    i = j;
  }
  return best;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw MetricError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> normalized_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> ranks(n, 0.0);
  if (n == 0) return ranks;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[idx[j]] == values[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;  // 1-based ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = n > 1 ? (avg - 1.0) / static_cast<double>(n - 1) : 0.0;
    i = j;
  }
  return ranks;
}

std::vector<double> rank_fuse(const std::vector<std::vector<double>>& signals, const std::vector<double>& weights) {
  if (signals.size() != weights.size() || signals.empty()) throw MetricError("rank_fuse: one weight per signal");
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(wsum - 1.0) > 1e-9) throw MetricError("rank_fuse: weights must sum to 1");
  const std::size_t n = signals.front().size();
  if (n < 2) throw MetricError("rank_fuse: need at least two experiments");
  std::vector<double> fused(n, 0.0);
  for (std::size_t s = 0; s < signals.size(); ++s) {
    if (signals[s].size() != n) throw MetricError("rank_fuse: signals differ in length");
    const auto r = normalized_ranks(signals[s]);
    for (std::size_t i = 0; i < n; ++i) fused[i] += weights[s] * r[i];
  }
  return fused;
}

FusionTuning tune_fusion_weight(const std::vector<double>& class_signal, const std::vector<double>& pred_signal,
                                const std::vector<bool>& labels) {
  const auto rc = normalized_ranks(class_signal);
  const auto rp = normalized_ranks(pred_signal);
  if (rc.size() != labels.size() || rp.size() != labels.size()) throw MetricError("tune_fusion_weight: length mismatch");
  FusionTuning best{0.0, -1.0};
  std::pair<std::int64_t, std::int64_t> best_frac{-1, 1};
  std::vector<double> fused(labels.size());
  for (int k = 0; k <= 100; ++k) {
    const double w = k / 100.0;
    for (std::size_t i = 0; i < fused.size(); ++i) fused[i] = w * rc[i] + (1.0 - w) * rp[i];
    const auto frac = auroc_rational(fused, labels);
    // Same denominator for every w, so numerators compare exactly.
    if (frac.first > best_frac.first) {
      best_frac = frac;
      best = {w, static_cast<double>(frac.first) / static_cast<double>(frac.second)};
    }
  }
  return best;
}

std::vector<ExperimentScore> aggregate_experiment(const std::vector<WindowScore>& windows) {
  std::vector<ExperimentScore> out;
  std::map<std::string, std::size_t> pos;
  std::vector<std::vector<double>> mae, recon;
  for (const auto& w : windows) {
    auto [it, inserted] = pos.emplace(w.experiment_id, out.size());
    if (inserted) {
      ExperimentScore e;
      e.experiment_id = w.experiment_id;
      e.label = w.experiment_label;
      e.max_prob = w.anomaly_prob;
      e.has_recon = w.has_recon;
      out.push_back(e);
      mae.emplace_back();
      recon.emplace_back();
    }
    ExperimentScore& e = out[it->second];
    e.max_prob = std::max(e.max_prob, w.anomaly_prob);
    ++e.n_windows;
    mae[it->second].push_back(w.pred_mae);
    if (w.has_recon) recon[it->second].push_back(w.recon_err);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].p95_pred_mae = percentile(mae[i], 0.95);
    if (!recon[i].empty()) out[i].recon_p95 = percentile(recon[i], 0.95);
  }
  return out;
}

Scorecard make_scorecard(std::vector<WindowScore> windows, double fusion_weight, bool three_signal) {
  Scorecard card;
  card.windows = std::move(windows);
  card.experiments = aggregate_experiment(card.windows);
  card.fusion_weight = fusion_weight;
  const bool recon = !card.experiments.empty() && card.experiments.front().has_recon;
  card.three_signal = three_signal && recon;
  if (card.experiments.size() >= 2) {
    std::vector<double> cls, pred, rec;
    for (const auto& e : card.experiments) {
      cls.push_back(e.max_prob);
      pred.push_back(e.p95_pred_mae);
      rec.push_back(e.recon_p95);
    }
    const auto fused = card.three_signal ? rank_fuse({cls, rec, pred}, kThreeSignalWeights)
                                         : rank_fuse({cls, pred}, {fusion_weight, 1.0 - fusion_weight});
    for (std::size_t i = 0; i < fused.size(); ++i) card.experiments[i].fused = fused[i];
  }
  return card;
}

MetricSummary summarize(const Scorecard& card) {
  MetricSummary m;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> prob;
  std::vector<bool> y;
  double mae = 0, mse = 0;
  for (const auto& w : card.windows) {
    prob.push_back(w.anomaly_prob);
    y.push_back(w.label);
    mae += w.pred_mae;
    mse += w.pred_mse;
  }
  m.n_windows = static_cast<int>(card.windows.size());
  m.n_experiments = static_cast<int>(card.experiments.size());
  m.pred_mae = m.n_windows ? mae / m.n_windows : nan;
  m.pred_mse = m.n_windows ? mse / m.n_windows : nan;
  const bool both = std::count(y.begin(), y.end(), true) > 0 && std::count(y.begin(), y.end(), false) > 0;
  m.window_auroc = both ? auroc(prob, y) : nan;
  m.window_auprc = both ? auprc(prob, y) : nan;
  if (both) {
    const auto f = f1_at_best(prob, y);
    m.window_f1 = f.f1;
    m.window_f1_threshold = f.threshold;
  } else {
    m.window_f1 = m.window_f1_threshold = nan;
  }
  std::vector<double> emax, efused;
  std::vector<bool> ey;
  for (const auto& e : card.experiments) {
    emax.push_back(e.max_prob);
    efused.push_back(e.fused);
    ey.push_back(e.label);
  }
  const bool eboth = std::count(ey.begin(), ey.end(), true) > 0 && std::count(ey.begin(), ey.end(), false) > 0;
  m.exp_auroc = eboth ? auroc(emax, ey) : nan;
  m.fused_auroc = eboth ? auroc(efused, ey) : nan;
  return m;
}

void write_scorecard(const Scorecard& card, const std::filesystem::path& dir) {
  using io::format_double;
  std::string w = "experiment_id,t_start,label,experiment_label,anomaly_prob,pred_mae,pred_mse,recon_err\n";
  for (const auto& s : card.windows) {
    w += s.experiment_id + ',' + std::to_string(s.t_start) + ',' + (s.label ? "1" : "0") + ',' +
         (s.experiment_label ? "1" : "0") + ',' + format_double(s.anomaly_prob) + ',' + format_double(s.pred_mae) + ',' +
         format_double(s.pred_mse) + ',' + (s.has_recon ? format_double(s.recon_err) : std::string()) + '\n';
  }
  io::write_text(dir / "scorecard_windows.csv", w);
  std::string e = "experiment_id,label,n_windows,max_prob,p95_pred_mae,recon_p95,fused_score\n";
  for (const auto& s : card.experiments) {
    e += s.experiment_id + ',' + (s.label ? "1" : "0") + ',' + std::to_string(s.n_windows) + ',' +
         format_double(s.max_prob) + ',' + format_double(s.p95_pred_mae) + ',' +
         (s.has_recon ? format_double(s.recon_p95) : std::string()) + ',' + format_double(s.fused) + '\n';
  }
  io::write_text(dir / "scorecard_experiments.csv", e);
}

Scorecard read_window_scores(const std::filesystem::path& windows_csv) {
  const std::string text = io::read_text(windows_csv);
  std::vector<WindowScore> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cells = io::split(line);
    if (cells.size() != 8) throw MetricError("malformed scorecard row");
    WindowScore s;
    s.experiment_id = std::string(cells[0]);
    s.t_start = static_cast<int>(io::parse_double(cells[1]));
    s.label = cells[2] == "1";
    s.experiment_label = cells[3] == "1";
    s.anomaly_prob = io::parse_double(cells[4]);
    s.pred_mae = io::parse_double(cells[5]);
    s.pred_mse = io::parse_double(cells[6]);
    s.has_recon = !cells[7].empty();
    if (s.has_recon) s.recon_err = io::parse_double(cells[7]);
    out.push_back(std::move(s));
  }
  return make_scorecard(std::move(out));
}

}  // namespace utopya
