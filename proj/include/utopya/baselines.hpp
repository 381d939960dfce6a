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

#include "utopya/dataset.hpp"
#include "utopya/nn.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace utopya::baselines {

using ag::Index;
using ag::Var;

inline constexpr int kStatsPerChannel = 5;
inline constexpr int kFeatureCount = channels::kInputs * kStatsPerChannel;

// Per channel: mean, population std, min, max and least-squares slope per
// step. Feature index is channel * 5 + statistic.
Eigen::RowVectorXd summary_features(const Matrix& x);
Matrix summary_matrix(const std::vector<const Matrix*>& windows);

// Column-wise standardisation fitted on training rows; columns whose spread
// is below 1e-12 are dropped.
struct Standardizer {
  Eigen::RowVectorXd mean, scale;
  std::vector<Index> keep;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

class PcaMonitor {
 public:
  PcaMonitor(const Matrix& train, double var_keep = 0.95);

  int components() const { return k_; }
  const Eigen::VectorXd& explained_ratio() const { return ratio_; }
  std::vector<double> t2(const Matrix& x) const;
  std::vector<double> spe(const Matrix& x) const;
  // T2 / T2_q99 + SPE / SPE_q99 with both quantiles taken on training data.
  std::vector<double> score(const Matrix& x) const;

 private:
  Standardizer std_;
  Matrix loadings_;  // features x k
  Eigen::VectorXd eig_, ratio_;
  int k_ = 0;
  double t2_q99_ = 1.0, spe_q99_ = 1.0;
};

// Average path length of an unsuccessful search in a binary search tree.
double average_path_length(double n);

class IsolationForest {
 public:
  IsolationForest(const Matrix& train, int trees = 200, int subsample = 256, double contamination = 0.15,
                  std::uint64_t seed = 0);

  std::vector<double> score(const Matrix& x) const;
  double path_length(const Eigen::RowVectorXd& x) const;
  // Training-score quantile at 1 - contamination.
  double threshold() const { return threshold_; }

 private:
  struct Node {
    int feature = -1;
    double split = 0.0;
    int left = -1, right = -1;
    int size = 0;
  };
  struct Tree {
    std::vector<Node> nodes;
  };
  int build(Tree& t, const Matrix& x, std::vector<Index>& rows, int depth, int limit, std::mt19937_64& rng);

  std::vector<Tree> trees_;
  double c_ = 1.0;
  double threshold_ = 0.0;
};

struct NetTraining {
  int epochs = 30;
  int batch = 64;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::uint64_t seed = 0;
};

// Symmetric feed-forward autoencoder with ReLU hidden layers and a linear output.
class FfAutoencoder {
 public:
  FfAutoencoder(int inputs, const std::vector<int>& dims = {256, 128, 64}, std::uint64_t seed = 0);

  Var forward(ag::Tape& tape, const Var& x) const;
  Matrix reconstruct(const Matrix& x) const;
  // Mean squared reconstruction error per row.
  std::vector<double> score(const Matrix& x) const;
  std::vector<double> train(const Matrix& x, const NetTraining& cfg);
  ag::ParamStore& params() { return store_; }

 private:
  ag::ParamStore store_;
  std::vector<nn::Linear> layers_;
};

struct LstmCell {
  nn::Linear gates;  // [x; h] -> 4 * hidden, gate order i, f, g, o
  int hidden = 0;

  LstmCell() = default;
  LstmCell(ag::ParamStore& store, const std::string& name, int inputs, int hidden, ag::Rng& rng);
  std::pair<Var, Var> step(ag::Tape& tape, const Var& x, const Var& h, const Var& c) const;
};

// Sequence-to-sequence LSTM autoencoder: the encoder's final top-layer state
// is repeated as decoder input at every step.
class LstmAutoencoder {
 public:
  LstmAutoencoder(int inputs, int hidden = 64, int layers = 2, std::uint64_t seed = 0);

  // windows stacked as (batch * seq) x inputs.
  Var forward(ag::Tape& tape, const Matrix& x, Index seq) const;
  // Mean per-timestep squared error for each window.
  std::vector<double> score(const std::vector<const Matrix*>& windows, int batch = 64) const;
  std::vector<double> train(const std::vector<const Matrix*>& windows, const NetTraining& cfg);
  ag::ParamStore& params() { return store_; }

 private:
  ag::ParamStore store_;
  std::vector<LstmCell> encoder_, decoder_;
  nn::Linear out_;
  int hidden_ = 0;
};

enum class Method { pca, iforest, ae, lstm };
std::string method_name(Method m);
// Throws std::invalid_argument for an unknown name.
Method parse_method(std::string_view s);

struct BaselineConfig {
  double var_keep = 0.95;
  int trees = 200;
  int subsample = 256;
  double contamination = 0.15;
  std::vector<int> ae_dims{256, 128, 64};
  NetTraining ae{30, 64, 1e-3, 1e-5, 0};
  int lstm_hidden = 64;
  int lstm_layers = 2;
  NetTraining lstm{8, 32, 1e-3, 1e-5, 0};
  bool normal_only = false;
  std::uint64_t seed = 0;
};

// Trains `method` on the training windows and scores the evaluation
// windows; larger is more anomalous.
std::vector<double> run_baseline(Method method, const std::vector<const WindowSample*>& train,
                                 const std::vector<const WindowSample*>& eval, const BaselineConfig& cfg);

}  // namespace utopya::baselines
