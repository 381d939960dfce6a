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

#include "utopya/ops.hpp"

#include <string>

namespace utopya::nn {

// U(-bound, bound) initialiser.
ag::Matrix uniform(Eigen::Index rows, Eigen::Index cols, double bound, ag::Rng& rng);
ag::Matrix normal(Eigen::Index rows, Eigen::Index cols, double stddev, ag::Rng& rng);

// Dense layer y = x W^T + b with the usual 1/sqrt(fan_in) uniform init.
struct Linear {
  ag::Parameter* weight = nullptr;
  ag::Parameter* bias = nullptr;

  Linear() = default;
  Linear(ag::ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, ag::Rng& rng,
         const std::string& group = "head", bool with_bias = true);

  ag::Var operator()(ag::Tape& tape, const ag::Var& x) const;
  Eigen::Index in() const { return weight->value.cols(); }
  Eigen::Index out() const { return weight->value.rows(); }
};

struct LayerNorm {
  ag::Parameter* gamma = nullptr;
  ag::Parameter* beta = nullptr;

  LayerNorm() = default;
  LayerNorm(ag::ParamStore& store, const std::string& name, Eigen::Index width, const std::string& group = "head");
  ag::Var operator()(ag::Tape& tape, const ag::Var& x) const;
};

}  // namespace utopya::nn
