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

#include "utopya/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace utopya {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown for malformed experiment directories and split files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Atom features use a one-hot over {C, O, H, N, other}.
struct MolecularGraph {
  static constexpr int kElementVocabulary = 5;
  std::vector<int> elements;
  std::vector<std::pair<int, int>> edges;

  static int element_index(std::string_view symbol);
  static std::string_view element_symbol(int index);
};

struct ExperimentRecord {
  std::string id;
  std::string operating_point;
  std::string system;
  bool is_anomalous = false;

  Matrix ts;                 // T_total x 29
  std::vector<Phase> phase;  // T_total
  Vector static_tab;         // 602..606 features; empty when absent
  Vector text_emb;           // 384; empty when absent
  std::vector<Vector> img_feats;
  Matrix audio_mel;  // frames x 64; zero rows when absent
  std::vector<MolecularGraph> molecules;
  std::vector<std::pair<int, int>> fault_intervals;

  // Per-channel baseline statistics once normalised (empty otherwise); kept
  // so physically meaningful quantities can be recovered.
  Eigen::RowVectorXd norm_mean;
  Eigen::RowVectorXd norm_scale;

  int length() const { return static_cast<int>(ts.rows()); }
  ModalityMask availability() const;
};

struct WindowSample {
  Matrix x;         // W x 29
  Matrix y_target;  // H x 25
  bool anomaly_label = false;
  Phase phase_label = Phase::normal;
  std::array<int, kPhaseCount> phase_counts{};
  double difficulty = 0.0;
  ModalityMask availability{};
  std::string experiment_id;
  int t_start = 0;
  std::size_t record_index = 0;  // position in the corpus it was cut from
};

struct SplitAssignment {
  std::set<std::string> train, val, test;
  std::map<std::string, std::string> op_map;  // operating point -> partition
  std::uint64_t seed = 0;
};

inline constexpr int kWindow = 120;
inline constexpr int kStride = 30;
inline constexpr int kHorizon = 60;
inline constexpr int kBaselineSteps = 300;
inline constexpr double kSigmaFloor = 1e-6;

// Reads one canonical experiment directory.
ExperimentRecord load_experiment(const std::filesystem::path& dir);
void write_experiment(const ExperimentRecord& rec, const std::filesystem::path& dir);
// Loads every experiment sub-directory, sorted by directory name.
std::vector<ExperimentRecord> load_corpus(const std::filesystem::path& root);

// Throws DataError when an ExperimentRecord invariant does not hold.
void validate_record(const ExperimentRecord& rec);

ExperimentRecord normalize_per_experiment(const ExperimentRecord& rec, int baseline = kBaselineSteps,
                                          double sigma_floor = kSigmaFloor);

// Modal phase over [begin, end) with the severity tie-break.
Phase majority_phase(const std::array<int, kPhaseCount>& counts);

std::vector<WindowSample> make_windows(const ExperimentRecord& rec, int window = kWindow, int stride = kStride,
                                       int horizon = kHorizon, std::size_t record_index = 0);

struct SplitRatios {
  double train = 0.6, val = 0.2, test = 0.2;
};

// Lexicographic split objective; lower is better.
struct SplitScore {
  int infeasible = 1;  // 0 when every partition has >= 1 normal and >= 1 anomalous experiment
  double anomaly_dev = 0.0;
  double size_dev = 0.0;
  auto operator<=>(const SplitScore&) const = default;
};

SplitScore score_split(const std::vector<ExperimentRecord>& records, const SplitAssignment& split,
                       const SplitRatios& ratios);
// Number of operating points per partition for a given total.
std::array<int, 3> partition_sizes(int n_ops, const SplitRatios& ratios);

// Random search over OP shuffles; the first seed is `base_seed`.
SplitAssignment search_split(const std::vector<ExperimentRecord>& records, int n_seeds = 5000,
                             const SplitRatios& ratios = {}, std::uint64_t base_seed = 0);

// Throws DataError when an OP spans partitions, an experiment is unassigned,
// or a partition lacks a normal or an anomalous experiment.
void validate_split(const std::vector<ExperimentRecord>& records, const SplitAssignment& split);

void write_split(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment read_split(const std::filesystem::path& path);

// Audio frames covering [t_start, t_start + window), resampled to `frames` rows.
Matrix audio_segment(const ExperimentRecord& rec, int t_start, int window, int frames);

}  // namespace utopya
