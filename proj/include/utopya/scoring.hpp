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

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace utopya {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mann-Whitney AUROC with ties credited one half. Throws MetricError when
// either class is missing.
double auroc(const std::vector<double>& scores, const std::vector<bool>& labels);
// Exact form: numerator and denominator in half-pair units, so that
// auroc = num / den with den = 2 * positives * negatives.
std::pair<std::int64_t, std::int64_t> auroc_rational(const std::vector<double>& scores, const std::vector<bool>& labels);

// Average precision: sum over distinct thresholds of (R_k - R_{k-1}) * P_k,
// with tied scores entering together.
double auprc(const std::vector<double>& scores, const std::vector<bool>& labels);

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;  // positive when score > threshold
};
// Best F1 over thresholds between consecutive distinct scores and one just
// below the minimum; ties resolve to the higher threshold.
F1Result f1_at_best(const std::vector<double>& scores, const std::vector<bool>& labels);

// Linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

// Ascending ranks normalised to [0, 1], average rank for ties.
std::vector<double> normalized_ranks(const std::vector<double>& values);

// Weighted average of normalised ranks per signal.
std::vector<double> rank_fuse(const std::vector<std::vector<double>>& signals, const std::vector<double>& weights);

inline constexpr double kDefaultFusionWeight = 0.73;
inline const std::vector<double> kThreeSignalWeights = {0.71, 0.10, 0.19};  // class, recon, pred

struct FusionTuning {
  double weight = 0.0;
  double auroc = 0.0;
};
// Grid search over w in {0, 0.01, ..., 1} for w * rank(class) + (1 - w) * rank(pred);
// ties keep the smaller w.
FusionTuning tune_fusion_weight(const std::vector<double>& class_signal, const std::vector<double>& pred_signal,
                                const std::vector<bool>& labels);

struct WindowScore {
  std::string experiment_id;
  int t_start = 0;
  bool label = false;             // window anomaly label
  bool experiment_label = false;  // record-level flag
  double anomaly_prob = 0.0;
  double pred_mae = 0.0;
  double pred_mse = 0.0;
  double recon_err = 0.0;
  bool has_recon = false;
};

struct ExperimentScore {
  std::string experiment_id;
  bool label = false;
  int n_windows = 0;
  double max_prob = 0.0;
  double p95_pred_mae = 0.0;
  double recon_p95 = 0.0;
  bool has_recon = false;
  double fused = 0.0;
};

// Per-experiment max probability and 95th percentiles, ordered by first
// appearance.
std::vector<ExperimentScore> aggregate_experiment(const std::vector<WindowScore>& windows);

struct Scorecard {
  std::vector<WindowScore> windows;
  std::vector<ExperimentScore> experiments;
  double fusion_weight = kDefaultFusionWeight;
  bool three_signal = false;
};

// Builds experiment rows and fills the fused score (two-signal by default,
// three-signal when reconstruction errors are present and requested).
Scorecard make_scorecard(std::vector<WindowScore> windows, double fusion_weight = kDefaultFusionWeight,
                         bool three_signal = false);

struct MetricSummary {
  double window_auroc = 0.0;
  double window_auprc = 0.0;
  double window_f1 = 0.0;
  double window_f1_threshold = 0.0;
  double exp_auroc = 0.0;    // classification-only experiment AUROC
  double fused_auroc = 0.0;  // multi-signal experiment AUROC
  double pred_mae = 0.0;
  double pred_mse = 0.0;
  int n_windows = 0;
  int n_experiments = 0;
};
MetricSummary summarize(const Scorecard& card);

void write_scorecard(const Scorecard& card, const std::filesystem::path& dir);
Scorecard read_window_scores(const std::filesystem::path& windows_csv);

}  // namespace utopya
