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

#include "utopya/nn.hpp"

#include <cmath>

namespace utopya::nn {

ag::Matrix uniform(Eigen::Index rows, Eigen::Index cols, double bound, ag::Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  ag::Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

ag::Matrix normal(Eigen::Index rows, Eigen::Index cols, double stddev, ag::Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  ag::Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

Linear::Linear(ag::ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, ag::Rng& rng,
               const std::string& group, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = &store.add(name + ".weight", uniform(out, in, bound, rng), group);
  if (with_bias) bias = &store.add(name + ".bias", uniform(1, out, bound, rng), group);
}

ag::Var Linear::operator()(ag::Tape& tape, const ag::Var& x) const {
  ag::Var w = tape.param(*weight);
  ag::Var b = bias != nullptr ? tape.param(*bias) : ag::Var();
  return ag::linear(x, w, b);
}

LayerNorm::LayerNorm(ag::ParamStore& store, const std::string& name, Eigen::Index width, const std::string& group) {
  gamma = &store.add(name + ".gamma", ag::Matrix::Ones(1, width), group);
  beta = &store.add(name + ".beta", ag::Matrix::Zero(1, width), group);
}

ag::Var LayerNorm::operator()(ag::Tape& tape, const ag::Var& x) const {
  return ag::layer_norm(x, tape.param(*gamma), tape.param(*beta));
}

}  // namespace utopya::nn
