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

#include "utopya/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace utopya {

Matrix jitter(const Matrix& x, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, sigma);
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (channels::is_binary(static_cast<int>(c))) continue;
    for (Eigen::Index t = 0; t < x.rows(); ++t) out(t, c) += nd(rng);
  }
  return out;
}

Matrix scale_channels(const Matrix& x, const std::vector<double>& factors) {
  if (static_cast<Eigen::Index>(factors.size()) != x.cols()) throw std::invalid_argument("scale_channels: one factor per channel");
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (!channels::is_binary(static_cast<int>(c))) out.col(c) *= factors[static_cast<std::size_t>(c)];
  }
  return out;
}

TimeWarp::TimeWarp(int knots, double max_warp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> shift(-max_warp, max_warp);
  xs_.push_back(0.0);
  ys_.push_back(0.0);
  for (int k = 1; k <= knots; ++k) {
    const double u = static_cast<double>(k) / (knots + 1);
    xs_.push_back(u);
    ys_.push_back(std::clamp(u + shift(rng), 0.0, 1.0));
  }
  xs_.push_back(1.0);
  ys_.push_back(1.0);
  std::sort(ys_.begin(), ys_.end());
  fit();
}

TimeWarp::TimeWarp(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() != ys_.size() || xs_.size() < 2) throw std::invalid_argument("TimeWarp: need matching knots");
  fit();
}

// Fritsch-Carlson slopes keep the cubic Hermite interpolant monotone.
void TimeWarp::fit() {
  const std::size_t n = xs_.size();
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
  slopes_.assign(n, 0.0);
  slopes_[0] = delta[0];
  slopes_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      slopes_[i] = 0.0;
    } else {
      const double w1 = 2.0 * (xs_[i + 1] - xs_[i]) + (xs_[i] - xs_[i - 1]);
      const double w2 = (xs_[i + 1] - xs_[i]) + 2.0 * (xs_[i] - xs_[i - 1]);
      slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      slopes_[i] = slopes_[i + 1] = 0.0;
      continue;
    }
    const double a = slopes_[i] / delta[i], b = slopes_[i + 1] / delta[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      slopes_[i] = tau * a * delta[i];
      slopes_[i + 1] = tau * b * delta[i];
    }
  }
}

double TimeWarp::operator()(double u) const {
  u = std::clamp(u, xs_.front(), xs_.back());
  std::size_t i = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), u) - xs_.begin());
  i = std::clamp<std::size_t>(i, 1, xs_.size() - 1) - 1;
  const double h = xs_[i + 1] - xs_[i];
  const double t = (u - xs_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * ys_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] + (-2 * t3 + 3 * t2) * ys_[i + 1] +
         (t3 - t2) * h * slopes_[i + 1];
}

Matrix time_warp(const Matrix& x, const TimeWarp& warp) {
  const Eigen::Index T = x.rows();
  Matrix out(T, x.cols());
  if (T == 1) return x;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double pos = std::clamp(warp(static_cast<double>(t) / (T - 1)), 0.0, 1.0) * (T - 1);
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const Eigen::Index hi = std::min(lo + 1, T - 1);
    const double a = pos - lo;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (channels::is_binary(static_cast<int>(c))) {
        out(t, c) = a < 0.5 ? x(lo, c) : x(hi, c);
      } else {
        out(t, c) = (1.0 - a) * x(lo, c) + a * x(hi, c);
      }
    }
  }
  return out;
}

Matrix augment(const Matrix& x, std::mt19937_64& rng, const AugmentConfig& cfg) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out = x;
  if (unit(rng) < cfg.p_jitter) {
    const double sigma = cfg.jitter_min + (cfg.jitter_max - cfg.jitter_min) * unit(rng);
    out = jitter(out, sigma, rng);
  }
  if (unit(rng) < cfg.p_scale) {
    std::vector<double> f(static_cast<std::size_t>(x.cols()));
    for (auto& v : f) v = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * unit(rng);
    out = scale_channels(out, f);
  }
  if (unit(rng) < cfg.p_warp) out = time_warp(out, TimeWarp(cfg.warp_knots, cfg.max_warp, rng));
  return out;
}

}  // namespace utopya
