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


#include "utopya/fusion.hpp"
#include "utopya/ops.hpp"

#include "gradcheck.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace utopya;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return nn::normal(r, c, scale, rng);
}

FusionConfig small_config() {
  FusionConfig cfg;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.ffn_hidden = 16;
  return cfg;
}

ModalityMask mask_of(std::initializer_list<Modality> ms) {
  ModalityMask m{};
  for (auto k : ms) at(m, k) = true;
  return m;
}

std::array<Var, kModalityCount> embeddings(Tape& tape, Index batch, int d, std::uint64_t seed) {
  std::array<Var, kModalityCount> z;
  for (int k = 0; k < kModalityCount; ++k) z[static_cast<std::size_t>(k)] = tape.constant(random_matrix(batch, d, seed + k));
  return z;
}

void randomize(ParamStore& store, std::uint64_t seed) {
  Rng rng(seed);
  for (auto* p : store.all()) p->value = nn::normal(p->value.rows(), p->value.cols(), 0.4, rng);
}

}  // namespace

TEST_CASE("static context of zero inputs is the layer-norm shift", "[fusion]") {
  ParamStore store;
  Rng rng(1);
  Fusion fusion(store, {}, rng);
  store.at("fusion.context.bias").value.setZero();
  store.at("fusion.context_ln.beta").value = random_matrix(1, 128, 2);
  Tape tape;
  Var zero = tape.constant(Matrix::Zero(2, 128));
  Matrix c = fusion.build_context(tape, zero, zero, zero).value();
  for (Index b = 0; b < 2; ++b) CHECK(c.row(b) == store.at("fusion.context_ln.beta").value.row(0));
}

TEST_CASE("static context is order sensitive and layer-normalized", "[fusion]") {
  ParamStore store;
  Rng rng(3);
  Fusion fusion(store, {}, rng);
  Tape tape;
  Var a = tape.constant(random_matrix(4, 128, 4, 30.0));
  Var b = tape.constant(random_matrix(4, 128, 5, 30.0));
  Var m = tape.constant(random_matrix(4, 128, 6, 30.0));
  Matrix c = fusion.build_context(tape, a, b, m).value();
  CHECK_FALSE(c.isApprox(fusion.build_context(tape, b, a, m).value(), 1e-6));
  // Default gamma 1 and beta 0, so the output is the pre-affine value.
  for (Index r = 0; r < c.rows(); ++r) {
    const double mean = c.row(r).mean();
    const double var = (c.row(r).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("film is the identity at initialization", "[fusion]") {
  ParamStore store;
  Rng rng(7);
  Fusion fusion(store, {}, rng);
  Tape tape;
  for (Modality m : kDynamicModalities) {
    const Matrix z = random_matrix(3, 128, 8 + static_cast<int>(m), 5.0);
    Var c = tape.constant(random_matrix(3, 128, 20));
    CHECK(fusion.film(tape, m, tape.constant(z), c).value() == z);
  }
  CHECK_THROWS_AS(fusion.film(tape, Modality::tab, tape.constant(Matrix::Zero(1, 128)), tape.constant(Matrix::Zero(1, 128))),
                  std::invalid_argument);
}

TEST_CASE("film arithmetic", "[fusion]") {
  ParamStore store;
  Rng rng(9);
  Fusion fusion(store, {}, rng);
  const auto& f = fusion.film_params(Modality::ts);
  Tape tape;
  Var c = tape.constant(random_matrix(1, 128, 10));
  Matrix z(1, 128);
  for (Index i = 0; i < 128; ++i) z(0, i) = i % 2 == 0 ? 1.0 : -1.0;

  f.b_gamma->value.setConstant(2.0);
  f.b_beta->value.setConstant(1.0);
  Matrix out = fusion.film(tape, Modality::ts, tape.constant(z), c).value();
  for (Index i = 0; i < 128; ++i) CHECK(out(0, i) == (i % 2 == 0 ? 3.0 : -1.0));

  f.b_gamma->value.setZero();
  const Matrix shift = random_matrix(1, 128, 11);
  f.b_beta->value = shift;
  CHECK(fusion.film(tape, Modality::ts, tape.constant(z), c).value() == shift);
  CHECK(fusion.film(tape, Modality::ts, tape.constant(-3.0 * z), c).value() == shift);
}

TEST_CASE("single-token attention reduces to the value projection", "[fusion]") {
  ParamStore store;
  Rng rng(12);
  Fusion fusion(store, {}, rng);
  Tape tape;
  Var zi = tape.constant(random_matrix(3, 128, 13));
  Var zj = tape.constant(random_matrix(3, 128, 14));
  Matrix w = fusion.attention_weights(tape, zi, zj);
  REQUIRE(w.cols() == 4);
  CHECK(w.isOnes(1e-15));

  // A zero FFN output layer leaves only the residual path.
  fusion.ffn_out().weight->value.setZero();
  fusion.ffn_out().bias->value.setZero();
  const Matrix out = fusion.cross_attend(tape, zi, zj).value();
  CHECK((out - zi.value()).norm() == 0.0);
}

TEST_CASE("cross attention matches a direct evaluation", "[fusion]") {
  ParamStore store;
  Rng rng(15);
  Fusion fusion(store, small_config(), rng);
  randomize(store, 16);
  const Matrix zi = random_matrix(2, 8, 17), zj = random_matrix(2, 8, 18);
  auto ln = [&](const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
      const double mu = x.row(r).mean();
      const double var = (x.row(r).array() - mu).square().mean();
      out.row(r) = ((x.row(r).array() - mu) / std::sqrt(var + 1e-5)) * store.at("fusion.attn_ln.gamma").value.row(0).array() +
                   store.at("fusion.attn_ln.beta").value.row(0).array();
    }
    return out;
  };
  auto lin = [&](const std::string& n, const Matrix& x) -> Matrix {
    return (x * store.at(n + ".weight").value.transpose()).rowwise() + store.at(n + ".bias").value.row(0);
  };
  const Matrix v = lin("fusion.attn.v", ln(zj));
  const Matrix mha = lin("fusion.attn.o", v);
  const Matrix inner = zi + mha;
  const Matrix expected = zi + lin("fusion.ffn2", lin("fusion.ffn1", inner).cwiseMax(0.0));
  Tape tape;
  CHECK(fusion.cross_attend(tape, tape.constant(zi), tape.constant(zj)).value().isApprox(expected, 1e-12));
}

TEST_CASE("gated fusion of one modality returns it", "[fusion]") {
  ParamStore store;
  Rng rng(19);
  Fusion fusion(store, {}, rng);
  Tape tape;
  const Matrix z = random_matrix(3, 128, 20);
  Var c = tape.constant(random_matrix(3, 128, 21));
  Matrix out = fusion.gated_fuse(tape, {Modality::ts}, {tape.constant(z)}, {{true, true, true}}, c).value();
  CHECK(out.isApprox(z, 1e-7));

  Matrix same = fusion.gated_fuse(tape, {Modality::ts, Modality::audio}, {tape.constant(z), tape.constant(z)},
                                  {{true, true, true}, {true, true, true}}, c)
                    .value();
  CHECK(same.isApprox(z, 1e-7));
}

TEST_CASE("masked modalities do not change the fused output", "[fusion]") {
  ParamStore store;
  Rng rng(22);
  Fusion fusion(store, {}, rng);
  Tape tape;
  Var zt = tape.constant(random_matrix(2, 128, 23));
  Var za = tape.constant(random_matrix(2, 128, 24, 50.0));
  Var zi = tape.constant(random_matrix(2, 128, 25));
  Var c = tape.constant(random_matrix(2, 128, 26));
  Matrix without = fusion.gated_fuse(tape, {Modality::ts, Modality::img}, {zt, zi}, {{true, true}, {true, false}}, c).value();
  Matrix with = fusion.gated_fuse(tape, {Modality::ts, Modality::audio, Modality::img}, {zt, za, zi},
                                  {{true, true}, {false, false}, {true, false}}, c)
                    .value();
  CHECK(with == without);
  CHECK_THROWS_AS(fusion.gated_fuse(tape, {Modality::ts}, {zt}, {{false, true}}, c), std::invalid_argument);
}

TEST_CASE("gated fusion is a convex combination", "[fusion]") {
  ParamStore store;
  Rng rng(27);
  Fusion fusion(store, {}, rng);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Tape tape;
    std::vector<Var> z;
    double max_norm = 0.0;
    for (int k = 0; k < 3; ++k) {
      z.push_back(tape.constant(random_matrix(1, 128, 100 * s + k, 1.0 + k)));
      max_norm = std::max(max_norm, z.back().value().norm());
    }
    Var c = tape.constant(random_matrix(1, 128, 100 * s + 9));
    Matrix out = fusion.gated_fuse(tape, {Modality::ts, Modality::img, Modality::audio}, z, {{true}, {true}, {true}}, c).value();
    CHECK(out.norm() <= max_norm * (1.0 + 1e-6));
  }
}

TEST_CASE("modality dropout respects the time series and inference", "[fusion]") {
  const ModalityMask all = mask_of({Modality::ts, Modality::audio, Modality::img, Modality::tab, Modality::text, Modality::mol});
  Rng rng(28);
  CHECK(modality_dropout(all, rng, 0.2, false) == all);
  const int trials = 100000;
  int audio_drops = 0, ts_drops = 0;
  for (int i = 0; i < trials; ++i) {
    auto m = modality_dropout(all, rng, 0.2, true);
    audio_drops += !at(m, Modality::audio);
    ts_drops += !at(m, Modality::ts);
  }
  CHECK(ts_drops == 0);
  CHECK(std::abs(audio_drops / static_cast<double>(trials) - 0.2) <= 0.01);
  // Unavailable modalities stay unavailable.
  const ModalityMask ts_only = mask_of({Modality::ts});
  for (int i = 0; i < 100; ++i) CHECK(modality_dropout(ts_only, rng, 0.9, true) == ts_only);
}

TEST_CASE("fusion forward is invariant to unavailable partners", "[fusion]") {
  ParamStore store;
  Rng rng(29);
  Fusion fusion(store, small_config(), rng);
  randomize(store, 30);
  Tape tape;
  auto z = embeddings(tape, 2, 8, 31);
  const ModalityMask ts_audio = mask_of({Modality::ts, Modality::audio, Modality::tab});
  const ModalityMask ts_only = mask_of({Modality::ts, Modality::tab});
  // Sample 1 lacks audio; its result must match a batch where nobody has audio.
  Matrix mixed = fusion.forward(tape, z, {ts_audio, ts_only}).fused.value();
  Matrix alone = fusion.forward(tape, z, {ts_only, ts_only}).fused.value();
  CHECK(mixed.row(1).isApprox(alone.row(1), 1e-12));
  CHECK_FALSE(mixed.row(0).isApprox(alone.row(0), 1e-6));
  // The audio embedding value has no effect where audio is masked.
  auto z2 = z;
  z2[static_cast<std::size_t>(Modality::audio)] = tape.constant(random_matrix(2, 8, 99, 10.0));
  CHECK(fusion.forward(tape, z2, {ts_only, ts_only}).fused.value() == alone);
}

TEST_CASE("fusion stack gradients match finite differences", "[fusion]") {
  ParamStore store;
  Rng rng(32);
  Fusion fusion(store, small_config(), rng);
  const std::vector<ModalityMask> avail = {
      mask_of({Modality::ts, Modality::audio, Modality::img, Modality::tab}),
      mask_of({Modality::ts, Modality::img, Modality::text}),
      mask_of({Modality::ts, Modality::mol})};
  std::vector<Matrix> inputs;
  for (int k = 0; k < kModalityCount; ++k) inputs.push_back(random_matrix(3, 8, 40 + k));
  const Matrix probe = random_matrix(3, 8, 50);
  for (std::uint64_t point = 0; point < 10; ++point) {
    randomize(store, 60 + point);
    auto f = [&](Tape& tape, const std::vector<Var>& leaves) {
      std::array<Var, kModalityCount> z;
      for (int k = 0; k < kModalityCount; ++k) z[static_cast<std::size_t>(k)] = leaves[static_cast<std::size_t>(k)];
      auto out = fusion.forward(tape, z, avail);
      return ag::sum_all(ag::mul(out.fused, tape.constant(probe)));
    };
    auto pf = [&](Tape& tape) {
      std::vector<Var> leaves;
      for (const auto& m : inputs) leaves.push_back(tape.constant(m));
      return f(tape, leaves);
    };
    CHECK(utopya::testing::check_params(pf, store.all(), 1e-6, 8, point).rel_error < 1e-4);
    CHECK(utopya::testing::check_inputs(f, inputs, 1e-6, 30, point).rel_error < 1e-4);
  }
}
