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


#include "utopya/ops.hpp"
#include "utopya/pretrain.hpp"
#include "utopya/simulator.hpp"

#include "gradcheck.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace utopya;

namespace {

std::vector<std::pair<int, int>> runs_of(const std::vector<bool>& m) {
  std::vector<std::pair<int, int>> out;
  int start = -1;
  for (int i = 0; i <= static_cast<int>(m.size()); ++i) {
    const bool on = i < static_cast<int>(m.size()) && m[static_cast<std::size_t>(i)];
    if (on && start < 0) start = i;
    if (!on && start >= 0) {
      out.emplace_back(start, i - start);
      start = -1;
    }
  }
  return out;
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  Rng rng(seed);
  return nn::normal(r, c, 1.0, rng);
}

// Reference NT-Xent with explicit loops.
double nt_xent_oracle(const Matrix& a, const Matrix& b, double tau) {
  const Index n = a.rows();
  Matrix z(2 * n, a.cols());
  z << a, b;
  for (Index i = 0; i < z.rows(); ++i) z.row(i).normalize();
  double total = 0.0;
  for (Index i = 0; i < 2 * n; ++i) {
    const Index pos = i < n ? i + n : i - n;
    double denom = 0.0;
    for (Index k = 0; k < 2 * n; ++k) {
      if (k != i) denom += std::exp(z.row(i).dot(z.row(k)) / tau);
    }
    total += -std::log(std::exp(z.row(i).dot(z.row(pos)) / tau) / denom);
  }
  return total / static_cast<double>(2 * n);
}

}  // namespace

TEST_CASE("block masks are runs of ten to thirty steps", "[pretrain]") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    auto m = block_mask(120, 0.15, 10, 30, rng);
    REQUIRE(m.size() == 120);
    int covered = 0;
    for (auto [start, len] : runs_of(m)) {
      CHECK(len >= 10);
      CHECK(len <= 30);
      covered += len;
    }
    CHECK(covered >= 18);
  }
}

TEST_CASE("masked MSE ignores unmasked cells", "[pretrain]") {
  const Matrix target = random_matrix(6, 3, 1);
  Matrix pred = random_matrix(6, 3, 2);
  const std::vector<bool> mask{false, true, true, false, false, true};
  double expected = 0.0;
  for (int r : {1, 2, 5}) expected += (pred.row(r) - target.row(r)).squaredNorm();
  expected /= 9.0;
  Tape tape;
  Var p = tape.input(pred);
  Var loss = masked_mse(p, target, mask);
  CHECK(loss.scalar() == Catch::Approx(expected).epsilon(1e-12));
  tape.backward(loss);
  const Matrix g = tape.grad(p);
  for (int r : {0, 3, 4}) CHECK(g.row(r).isZero(0.0));

  pred.row(0).array() += 100.0;
  pred.row(4).array() -= 50.0;
  Tape t2;
  CHECK(masked_mse(t2.constant(pred), target, mask).scalar() == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("contrastive loss matches a direct evaluation", "[pretrain]") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix a = random_matrix(4, 6, 10 + s), b = random_matrix(4, 6, 20 + s);
    Tape tape;
    CHECK(nt_xent(tape.constant(a), tape.constant(b), 0.1).scalar() ==
          Catch::Approx(nt_xent_oracle(a, b, 0.1)).epsilon(1e-10));
    auto r = utopya::testing::check_inputs(
        [](Tape&, const std::vector<Var>& x) { return nt_xent(x[0], x[1], 0.5); }, {a, b}, 1e-6, 48, s);
    CHECK(r.rel_error < 1e-4);
  }
  // Identical views give a lower loss than unrelated ones.
  const Matrix a = random_matrix(8, 6, 30);
  Tape tape;
  CHECK(nt_xent(tape.constant(a), tape.constant(a), 0.1).scalar() <
        nt_xent(tape.constant(a), tape.constant(random_matrix(8, 6, 31)), 0.1).scalar());
}

TEST_CASE("pretraining loss decreases", "[pretrain]") {
  std::vector<ExperimentRecord> records;
  std::vector<WindowSample> windows;
  for (int i = 0; i < 3; ++i) {
    sim::PlantConfig c;
    c.seed = 40 + static_cast<std::uint64_t>(i);
    c.duration_s = 600;
    records.push_back(normalize_per_experiment(sim::simulate(c)));
    auto w = make_windows(records.back());
    windows.insert(windows.end(), w.begin(), w.end());
  }
  std::vector<const Matrix*> xs;
  for (const auto& w : windows) xs.push_back(&w.x);
  PretrainConfig cfg;
  cfg.tcn.d_model = 16;
  cfg.tcn.layers = 4;
  cfg.epochs = 5;
  cfg.batch = 8;
  cfg.seed = 1;
  auto res = ssl_pretrain(xs, cfg);
  REQUIRE(res.epoch_loss.size() == 5);
  INFO("first " << res.epoch_loss.front() << " last " << res.epoch_loss.back());
  CHECK(res.epoch_loss.back() < res.epoch_loss.front());
  for (double l : res.epoch_loss) CHECK(std::isfinite(l));
  CHECK(res.weights.count("tcn.input.weight") == 1);
  CHECK(res.weights.count("ssl.recon.weight") == 0);

  // The weights load into a fresh encoder of the same shape.
  ParamStore store;
  Rng rng(3);
  TcnEncoder enc(store, cfg.tcn, rng);
  load_encoder_weights(store, res.weights);
  for (const auto& [name, value] : res.weights) CHECK(store.at(name).value == value);
}

TEST_CASE("loading encoder weights is strict", "[pretrain]") {
  ParamStore store;
  Rng rng(4);
  TcnConfig cfg;
  cfg.d_model = 8;
  cfg.layers = 2;
  TcnEncoder enc(store, cfg, rng);
  EncoderWeights w;
  for (const auto* p : store.all()) w[p->name] = Matrix::Constant(p->value.rows(), p->value.cols(), 0.5);
  load_encoder_weights(store, w);
  CHECK(store.at("tcn.block1.v").value.isConstant(0.5));

  auto missing = w;
  missing.erase("tcn.block1.v");
  CHECK_THROWS(load_encoder_weights(store, missing));
  auto bad = w;
  bad["tcn.block1.v"] = Matrix::Zero(2, 2);
  CHECK_THROWS(load_encoder_weights(store, bad));
}
