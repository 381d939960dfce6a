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

#include "utopya/encoders.hpp"

#include <cmath>
#include <stdexcept>

namespace utopya {

int TcnConfig::receptive_field() const {
  int dil_sum = 0;
  for (int l = 0; l < layers; ++l) dil_sum += 1 << l;
  return 1 + (kernel - 1) * dil_sum;
}

TcnEncoder::TcnEncoder(ParamStore& store, const TcnConfig& cfg, Rng& rng, const std::string& prefix) : cfg_(cfg) {
  input_ = nn::Linear(store, prefix + ".input", cfg.inputs, cfg.d_model, rng, "encoder");
  const double bias_bound = 1.0 / std::sqrt(static_cast<double>(cfg.kernel * cfg.d_model));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string name = prefix + ".block" + std::to_string(l);
    Block b;
    b.dilation = 1 << l;
    Matrix v = nn::normal(cfg.d_model, cfg.kernel * cfg.d_model, 0.01, rng);
    Matrix g = v.rowwise().norm();
    b.v = &store.add(name + ".v", std::move(v), "encoder");
    b.g = &store.add(name + ".g", std::move(g), "encoder");
    b.b = &store.add(name + ".bias", nn::uniform(1, cfg.d_model, bias_bound, rng), "encoder");
    blocks_.push_back(b);
  }
}

TcnEncoder::Output TcnEncoder::forward(Tape& tape, const Var& x, Index seq_len, Rng& rng, bool training) const {
  if (!x.value().allFinite()) throw std::invalid_argument("tcn: non-finite input");
  if (seq_len <= 0 || x.rows() % seq_len != 0) throw std::invalid_argument("tcn: rows must be a multiple of seq_len");
  Var h = input_(tape, x);
  for (const Block& b : blocks_) {
    Var w = ag::weight_norm_rows(tape.param(*b.v), tape.param(*b.g));
    Var taps = ag::causal_taps(h, seq_len, b.dilation, cfg_.kernel);
    Var conv = ag::linear(taps, w, tape.param(*b.b));
    h = ag::add(h, ag::dropout(ag::relu(conv), cfg_.dropout, rng, training));
  }
  return {h, ag::group_mean_rows(h, seq_len)};
}

AudioEncoder::AudioEncoder(ParamStore& store, int d_model, Rng& rng, const std::string& prefix) {
  const int widths[5] = {1, 16, 32, 64, 128};
  for (int l = 0; l < 4; ++l) {
    const std::string name = prefix + ".conv" + std::to_string(l);
    const int cin = widths[l], cout = widths[l + 1];
    const double bound = 1.0 / std::sqrt(9.0 * cin);
    Block b;
    b.w = &store.add(name + ".weight", nn::uniform(cout, 9 * cin, bound, rng));
    b.b = &store.add(name + ".bias", nn::uniform(1, cout, bound, rng));
    b.gamma = &store.add(name + ".bn.gamma", Matrix::Ones(1, cout));
    b.beta = &store.add(name + ".bn.beta", Matrix::Zero(1, cout));
    b.running_mean = &store.add_buffer(name + ".bn.running_mean", Matrix::Zero(1, cout));
    b.running_var = &store.add_buffer(name + ".bn.running_var", Matrix::Ones(1, cout));
    blocks_.push_back(b);
  }
  out_ = nn::Linear(store, prefix + ".out", widths[4], d_model, rng);
}

Var AudioEncoder::forward(Tape& tape, const Var& mel, Index batch, Index frames, bool training) const {
  if (frames < kMinFrames) throw std::invalid_argument("audio segment too short");
  if (mel.rows() != batch * frames * kMelBins || mel.cols() != 1) {
    throw std::invalid_argument("audio: expected (batch*frames*64) x 1 input");
  }
  Var h = mel;
  Index height = frames, width = kMelBins;
  for (const Block& b : blocks_) {
    h = ag::conv2d_3x3(h, tape.param(*b.w), tape.param(*b.b), batch, height, width);
    h = ag::batch_norm(h, tape.param(*b.gamma), tape.param(*b.beta), *b.running_mean, *b.running_var, training);
    h = ag::relu(h);
    h = ag::maxpool2x2(h, batch, height, width);
    height /= 2;
    width /= 2;
  }
  return out_(tape, ag::global_avg_pool(h, height * width));
}

TabularEncoder::TabularEncoder(ParamStore& store, int d_model, Rng& rng, const std::string& prefix) {
  l1_ = nn::Linear(store, prefix + ".fc1", kWidth, kHidden, rng);
  l2_ = nn::Linear(store, prefix + ".fc2", kHidden, d_model, rng);
}

Var TabularEncoder::forward(Tape& tape, const Var& x) const { return l2_(tape, ag::relu(l1_(tape, x))); }

Eigen::RowVectorXd TabularEncoder::fit_width(const Vector& raw) {
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(kWidth);
  const Index n = std::min<Index>(raw.size(), kWidth);
  out.head(n) = raw.head(n).transpose();
  return out;
}

VectorEncoder::VectorEncoder(ParamStore& store, int in_dim, int d_model, Rng& rng, const std::string& prefix) {
  proj_ = nn::Linear(store, prefix + ".proj", in_dim, d_model, rng);
}

Var VectorEncoder::forward(Tape& tape, const Var& rows, const std::vector<Index>& offsets) const {
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    if (offsets[i + 1] <= offsets[i]) throw std::invalid_argument("vector encoder: empty vector list");
  }
  return ag::segment_mean_rows(proj_(tape, rows), offsets);
}

Matrix normalized_adjacency(const MolecularGraph& g) {
  const auto n = static_cast<Index>(g.elements.size());
  Matrix a = Matrix::Identity(n, n);
  for (auto [u, v] : g.edges) {
    if (u == v) continue;
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

Matrix node_features(const MolecularGraph& g) {
  Matrix f = Matrix::Zero(static_cast<Index>(g.elements.size()), MolecularGraph::kElementVocabulary);
  for (std::size_t i = 0; i < g.elements.size(); ++i) f(static_cast<Index>(i), g.elements[i]) = 1.0;
  return f;
}

GcnEncoder::GcnEncoder(ParamStore& store, int d_model, Rng& rng, const std::string& prefix) {
  int in = MolecularGraph::kElementVocabulary;
  for (int l = 0; l < kLayers; ++l) {
    weights_.push_back(&store.add(prefix + ".layer" + std::to_string(l) + ".weight",
                                  nn::uniform(d_model, in, 1.0 / std::sqrt(static_cast<double>(in)), rng)));
    in = d_model;
  }
}

GcnEncoder::GraphBatch GcnEncoder::batch(const std::vector<const std::vector<MolecularGraph>*>& samples) {
  GraphBatch out;
  Index total = 0;
  for (const auto* mols : samples) {
    for (const auto& g : *mols) total += static_cast<Index>(g.elements.size());
  }
  out.adjacency = Matrix::Zero(total, total);
  out.features = Matrix::Zero(total, MolecularGraph::kElementVocabulary);
  out.offsets.push_back(0);
  Index pos = 0;
  for (const auto* mols : samples) {
    const Index start = pos;
    for (const auto& g : *mols) {
      if (g.elements.empty()) throw std::invalid_argument("gcn: empty graph");
      const auto n = static_cast<Index>(g.elements.size());
      out.adjacency.block(pos, pos, n, n) = normalized_adjacency(g);
      out.features.middleRows(pos, n) = node_features(g);
      pos += n;
    }
    if (pos == start) throw std::invalid_argument("gcn: empty graph");
    out.offsets.push_back(pos);
  }
  return out;
}

std::vector<Var> GcnEncoder::layers(Tape& tape, const GraphBatch& g) const {
  std::vector<Var> out;
  Var a = tape.constant(g.adjacency);
  Var h = tape.constant(g.features);
  for (auto* w : weights_) {
    h = ag::relu(ag::matmul(a, ag::matmul_nt(h, tape.param(*w))));
    out.push_back(h);
  }
  return out;
}

Var GcnEncoder::forward(Tape& tape, const GraphBatch& g) const {
  return ag::segment_mean_rows(layers(tape, g).back(), g.offsets);
}

}  // namespace utopya
