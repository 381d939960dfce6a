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

#include <string>
#include <vector>

namespace utopya {

using ag::Index;
using ag::ParamStore;
using ag::Rng;
using ag::Tape;
using ag::Var;

struct TcnConfig {
  int layers = 6;
  int kernel = 3;
  int d_model = 128;
  int inputs = channels::kInputs;
  double dropout = 0.5;

  int receptive_field() const;
};

// Causal temporal convolution stack: a pointwise input projection followed
// by residual blocks out = h + Dropout(ReLU(WeightNorm-DilatedConv(h))).
class TcnEncoder {
 public:
  struct Output {
    Var per_step;  // (batch * seq) x d_model
    Var pooled;    // batch x d_model
  };

  TcnEncoder() = default;
  TcnEncoder(ParamStore& store, const TcnConfig& cfg, Rng& rng, const std::string& prefix = "tcn");

  // x is (batch * seq_len) x inputs, sample-major.
  Output forward(Tape& tape, const Var& x, Index seq_len, Rng& rng, bool training) const;
  const TcnConfig& config() const { return cfg_; }

 private:
  struct Block {
    ag::Parameter* v = nullptr;
    ag::Parameter* g = nullptr;
    ag::Parameter* b = nullptr;
    int dilation = 1;
  };
  TcnConfig cfg_;
  nn::Linear input_;
  std::vector<Block> blocks_;
};

// Four conv(3x3) -> batch-norm -> ReLU -> max-pool blocks over a
// frames x mel image, then global average pooling and a linear map.
class AudioEncoder {
 public:
  static constexpr int kMelBins = 64;
  static constexpr int kMinFrames = 16;

  AudioEncoder() = default;
  AudioEncoder(ParamStore& store, int d_model, Rng& rng, const std::string& prefix = "audio");

  // mel is (batch * frames * 64) x 1.
  Var forward(Tape& tape, const Var& mel, Index batch, Index frames, bool training) const;

 private:
  struct Block {
    ag::Parameter* w = nullptr;
    ag::Parameter* b = nullptr;
    ag::Parameter* gamma = nullptr;
    ag::Parameter* beta = nullptr;
    ag::Parameter* running_mean = nullptr;
    ag::Parameter* running_var = nullptr;
  };
  std::vector<Block> blocks_;
  nn::Linear out_;
};

// Two-layer MLP over the static tabular descriptor padded to a fixed width.
class TabularEncoder {
 public:
  static constexpr int kWidth = 606;
  static constexpr int kHidden = 256;

  TabularEncoder() = default;
  TabularEncoder(ParamStore& store, int d_model, Rng& rng, const std::string& prefix = "tab");
  Var forward(Tape& tape, const Var& x) const;
  // Right-pads with zeros or truncates to kWidth.
  static Eigen::RowVectorXd fit_width(const Vector& raw);

  const nn::Linear& first() const { return l1_; }
  const nn::Linear& second() const { return l2_; }

 private:
  nn::Linear l1_, l2_;
};

// Linear projection of precomputed vectors followed by a mean over each
// sample's vectors (text: one vector, images: up to three).
class VectorEncoder {
 public:
  VectorEncoder() = default;
  VectorEncoder(ParamStore& store, int in_dim, int d_model, Rng& rng, const std::string& prefix);
  // rows holds all vectors stacked; offsets delimit each sample's rows.
  Var forward(Tape& tape, const Var& rows, const std::vector<Index>& offsets) const;
  const nn::Linear& projection() const { return proj_; }

 private:
  nn::Linear proj_;
};

// Symmetric-normalised adjacency with self-loops, D^-1/2 (A + I) D^-1/2.
Matrix normalized_adjacency(const MolecularGraph& g);
// One-hot element features, nodes x 5.
Matrix node_features(const MolecularGraph& g);

// Three graph-convolution layers with ReLU and a mean readout over nodes.
class GcnEncoder {
 public:
  static constexpr int kLayers = 3;

  GcnEncoder() = default;
  GcnEncoder(ParamStore& store, int d_model, Rng& rng, const std::string& prefix = "gcn");

  // Every sample's molecules are merged into one disjoint graph.
  struct GraphBatch {
    Matrix adjacency;  // block diagonal over all samples
    Matrix features;   // total_nodes x 5
    std::vector<Index> offsets;
  };
  static GraphBatch batch(const std::vector<const std::vector<MolecularGraph>*>& samples);

  Var forward(Tape& tape, const GraphBatch& g) const;
  // Node embeddings after every layer (for inspection).
  std::vector<Var> layers(Tape& tape, const GraphBatch& g) const;
  ag::Parameter& weight(int layer) const { return *weights_.at(static_cast<std::size_t>(layer)); }

 private:
  std::vector<ag::Parameter*> weights_;
};

}  // namespace utopya
