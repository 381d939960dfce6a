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

#include <random>
#include <vector>

namespace utopya {

struct AugmentConfig {
  double p_jitter = 0.5;
  double jitter_min = 0.01;
  double jitter_max = 0.05;
  double p_scale = 0.5;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double p_warp = 0.3;
  int warp_knots = 4;
  double max_warp = 0.1;

  static AugmentConfig disabled() { return {0.0, 0.01, 0.05, 0.0, 0.9, 1.1, 0.0, 4, 0.1}; }
};

// Jitter, per-channel scaling and time warping, each applied independently
// with its own probability. Binary channels are never jittered or scaled and
// are resampled by nearest neighbour under the warp.
Matrix augment(const Matrix& x, std::mt19937_64& rng, const AugmentConfig& cfg = {});

Matrix jitter(const Matrix& x, double sigma, std::mt19937_64& rng);
Matrix scale_channels(const Matrix& x, const std::vector<double>& factors);

// Monotone warp of normalised time [0, 1] -> [0, 1] through interior knots;
// the endpoints are fixed.
class TimeWarp {
 public:
  TimeWarp(int knots, double max_warp, std::mt19937_64& rng);
  TimeWarp(std::vector<double> xs, std::vector<double> ys);
  double operator()(double u) const;

 private:
  void fit();
  std::vector<double> xs_, ys_, slopes_;
};

Matrix time_warp(const Matrix& x, const TimeWarp& warp);

}  // namespace utopya
