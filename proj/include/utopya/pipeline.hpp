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

#include "utopya/config.hpp"
#include "utopya/scoring.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace utopya {

// Normalised records, their windows and the split that partitions them.
struct PreparedData {
  std::vector<ExperimentRecord> records;
  std::vector<WindowSample> windows;
  SplitAssignment split;

  // "train", "val" or "test".
  WindowSet partition(std::string_view name) const;
  std::vector<const WindowSample*> windows_of(std::string_view name) const;
};

// Validates the split against the corpus (every experiment assigned, no
// unknown ids, operating points intact) before windowing.
PreparedData prepare_data(std::vector<ExperimentRecord> raw, const SplitAssignment& split);
PreparedData load_prepared(const std::filesystem::path& corpus, const std::filesystem::path& split_file);

PretrainResult pretrain_encoder(const PreparedData& data, const RunConfig& cfg, std::uint64_t seed);

struct TrainedModel {
  std::unique_ptr<Model> model;
  History history;
  std::vector<double> pretrain_loss;
};

// Pretrains (unless disabled or `pretrained` is given), then fits.
TrainedModel train_model(const PreparedData& data, const RunConfig& cfg, std::uint64_t seed,
                         const EncoderWeights* pretrained = nullptr, const FitCallbacks& callbacks = {});

struct EvalResult {
  Scorecard card;
  MetricSummary summary;
  double fusion_weight = kDefaultFusionWeight;
  bool tuned = false;
};

// Throws DataError when the partition lacks normal or anomalous windows or
// experiments.
EvalResult evaluate_partition(const Model& model, const PreparedData& data, std::string_view partition,
                              const ScoringConfig& scoring);

// Baseline scores mapped to [0, 1] by s / (1 + s) so they fit the scorecard;
// the map is monotone, so every rank metric is unchanged.
EvalResult evaluate_baseline(baselines::Method method, const PreparedData& data, std::string_view partition,
                             const baselines::BaselineConfig& cfg);

struct AblationConfig {
  std::string name;
  std::string description;
  ModalityMask modalities{};
};
// The eleven modality configurations A1 to A11.
std::vector<AblationConfig> ablation_matrix();
// Selects rows by name ("A1,A7") or returns every row for "all".
std::vector<AblationConfig> select_ablations(std::string_view names);

struct AblationRow {
  std::string config;
  std::string description;
  std::string status = "ok";
  double window_auroc = 0.0;
  double exp_auroc = 0.0;
  double multi_signal = 0.0;
  double pred_mae = 0.0;
  double pred_mse = 0.0;
};

// Runs each configuration with the same seed and shared pretrained encoder;
// a failing configuration yields a row with an error status.
std::vector<AblationRow> run_ablation(const PreparedData& data, const RunConfig& base,
                                      const std::vector<AblationConfig>& configs, std::uint64_t seed);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

void write_metrics_csv(const MetricSummary& m, double fusion_weight, const std::filesystem::path& path);

}  // namespace utopya
