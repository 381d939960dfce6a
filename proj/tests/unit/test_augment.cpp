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

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace utopya;

namespace {

Matrix ramp_window() {
  Matrix x(120, 29);
  for (int t = 0; t < 120; ++t) {
    for (int c = 0; c < 29; ++c) x(t, c) = channels::is_binary(c) ? (t >= 60 ? 1.0 : 0.0) : std::sin(0.05 * t + c);
  }
  return x;
}

}  // namespace

TEST_CASE("augmentation with zero probabilities is the identity", "[augment]") {
  std::mt19937_64 rng(1);
  const Matrix x = ramp_window();
  for (int i = 0; i < 50; ++i) CHECK(augment(x, rng, AugmentConfig::disabled()) == x);
}

TEST_CASE("jitter noise has the requested spread", "[augment]") {
  const Matrix x = Matrix::Zero(120, 29);
  for (double sigma : {0.01, 0.05}) {
    std::mt19937_64 rng(2);
    double sum = 0, sq = 0;
    long n = 0;
    for (int draw = 0; draw < 100; ++draw) {
      const Matrix y = jitter(x, sigma, rng);
      for (int c = 0; c < 29; ++c) {
        if (channels::is_binary(c)) {
          CHECK(y.col(c).isZero(0.0));
          continue;
        }
        for (int t = 0; t < 120; ++t) {
          sum += y(t, c);
          sq += y(t, c) * y(t, c);
          ++n;
        }
      }
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(sd == Catch::Approx(sigma).epsilon(0.02));
  }

  // Jitter-only augmentation: per-cell std within [0.01, 0.05].
  AugmentConfig only_jitter = AugmentConfig::disabled();
  only_jitter.p_jitter = 1.0;
  std::mt19937_64 rng(3);
  const Matrix base = ramp_window();
  for (int draw = 0; draw < 200; ++draw) {
    const Matrix d = augment(base, rng, only_jitter) - base;
    CHECK_FALSE(d.isZero(0.0));
    double sq = 0;
    long n = 0;
    for (int c = 0; c < 29; ++c) {
      if (channels::is_binary(c)) continue;
      sq += d.col(c).squaredNorm();
      n += 120;
    }
    const double sd = std::sqrt(sq / n);
    CHECK(sd > 0.01 * 0.9);
    CHECK(sd < 0.05 * 1.1);
  }
}

TEST_CASE("scaling skips binary channels", "[augment]") {
  const Matrix x = ramp_window();
  std::vector<double> f(29, 1.1);
  const Matrix y = scale_channels(x, f);
  for (int c = 0; c < 29; ++c) {
    if (channels::is_binary(c)) {
      CHECK(y.col(c) == x.col(c));
    } else {
      CHECK(y.col(c).isApprox(1.1 * x.col(c)));
    }
  }
  CHECK_THROWS_AS(scale_channels(x, {1.0}), std::invalid_argument);
}

TEST_CASE("time warp is monotone with fixed endpoints", "[augment]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    TimeWarp warp(4, 0.1, rng);
    CHECK(warp(0.0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(warp(1.0) == Catch::Approx(1.0).margin(1e-12));
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = warp(i / 1000.0);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
  TimeWarp identity({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0});
  CHECK(identity(0.3) == Catch::Approx(0.3));
}

TEST_CASE("time-warped windows keep their length and endpoints", "[augment]") {
  const Matrix x = ramp_window();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix y = time_warp(x, TimeWarp(4, 0.1, rng));
    REQUIRE(y.rows() == 120);
    REQUIRE(y.cols() == 29);
    CHECK(y.row(0).isApprox(x.row(0), 1e-9));
    CHECK(y.row(119).isApprox(x.row(119), 1e-9));
    for (int c = channels::XV701; c <= channels::XV704; ++c) {
      for (int t = 0; t < 120; ++t) CHECK((y(t, c) == 0.0 || y(t, c) == 1.0));
    }
  }
}

TEST_CASE("augmentation is reproducible from the seed", "[augment]") {
  const Matrix x = ramp_window();
  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 10; ++i) CHECK(augment(x, a) == augment(x, b));
}
