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


#include "utopya/dataset.hpp"
#include "utopya/simulator.hpp"

#include <catch_amalgamated.hpp>

#include <map>
#include <set>

using namespace utopya;
using namespace utopya::sim;
namespace ch = utopya::channels;

namespace {

PlantConfig base_config(std::uint64_t seed = 42) {
  PlantConfig cfg;
  cfg.seed = seed;
  cfg.duration_s = 1200;
  return cfg;
}

FaultSpec fault(FaultKind k, int start, int end, double mag) {
  FaultSpec f;
  f.kind = k;
  f.start = start;
  f.end = end;
  f.magnitude = mag;
  return f;
}

double mean_abs(const Matrix& z, int c, int begin, int end) {
  return z.col(c).segment(begin, end - begin).cwiseAbs().mean();
}

}  // namespace

TEST_CASE("simulation is deterministic", "[simulator]") {
  auto cfg = base_config();
  cfg.faults.push_back(fault(FaultKind::heat_drop, 500, 700, 0.8));
  auto a = simulate(cfg);
  auto b = simulate(cfg);
  CHECK(a.ts == b.ts);
  CHECK(a.phase == b.phase);
  CHECK(a.audio_mel == b.audio_mel);
  CHECK(a.static_tab == b.static_tab);
  CHECK(a.text_emb == b.text_emb);
  cfg.seed = 43;
  CHECK_FALSE(simulate(cfg).ts == a.ts);
}

TEST_CASE("fault-free runs are normal with a monotone column profile", "[simulator]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto cfg = base_config(seed);
    cfg.heat_steps.push_back({700, 0.88});
    auto rec = simulate(cfg);
    validate_record(rec);
    CHECK_FALSE(rec.is_anomalous);
    for (auto p : rec.phase) REQUIRE(p == Phase::normal);
    const int t_sd = shutdown_start(cfg.duration_s);
    for (int t = kStartupEnd; t < t_sd; ++t) {
      for (auto [lo, hi] : ch::kTemperaturePairs) REQUIRE(rec.ts(t, lo) >= rec.ts(t, hi));
    }
  }
}

TEST_CASE("full reflux cut zeroes the reflux flow over the fault", "[simulator]") {
  auto cfg = base_config();
  cfg.faults.push_back(fault(FaultKind::reflux_cut, 450, 750, 1.0));
  auto rec = simulate(cfg);
  for (int t = 450; t < 750; ++t) REQUIRE(rec.ts(t, ch::FT703) == 0.0);
  CHECK(rec.ts(449, ch::FT703) > 0.0);
  CHECK(rec.ts(760, ch::FT703) > 0.0);
}

TEST_CASE("fault phases are split ten, seventy and twenty percent", "[simulator]") {
  auto cfg = base_config();
  cfg.faults.push_back(fault(FaultKind::comp_shift, 400, 500, 0.7));
  auto rec = simulate(cfg);
  REQUIRE(rec.is_anomalous);
  REQUIRE(rec.phase.size() == 1200u);
  std::map<Phase, int> n;
  for (int t = 400; t < 500; ++t) ++n[rec.phase[static_cast<std::size_t>(t)]];
  CHECK(n[Phase::blind] == 10);
  CHECK(n[Phase::anomalous] == 70);
  CHECK(n[Phase::recovery] == 20);
  for (int t = 400; t < 410; ++t) CHECK(rec.phase[static_cast<std::size_t>(t)] == Phase::blind);
  for (int t = 480; t < 500; ++t) CHECK(rec.phase[static_cast<std::size_t>(t)] == Phase::recovery);
  CHECK(rec.phase[399] == Phase::normal);
  CHECK(rec.phase[500] == Phase::normal);
  REQUIRE(rec.fault_intervals.size() == 1);
  CHECK(rec.fault_intervals[0] == std::pair{400, 500});
}

TEST_CASE("faults raise the normalized deviation of their channels", "[simulator]") {
  for (auto kind : {FaultKind::reflux_cut, FaultKind::heat_drop, FaultKind::comp_shift, FaultKind::sensor_drift}) {
    for (std::uint64_t seed : {5u, 6u}) {
      auto clean_cfg = base_config(seed);
      auto fault_cfg = clean_cfg;
      fault_cfg.faults.push_back(fault(kind, 500, 800, 0.6));
      const auto clean = normalize_per_experiment(simulate(clean_cfg));
      const auto faulty = normalize_per_experiment(simulate(fault_cfg));
      for (int c : affected_channels(kind)) {
        INFO(fault_name(kind) << " channel " << ch::kNames[static_cast<std::size_t>(c)]);
        CHECK(mean_abs(faulty.ts, c, 500, 800) > mean_abs(clean.ts, c, 500, 800));
      }
    }
  }
}

TEST_CASE("audio energy tracks heating power", "[simulator]") {
  auto low = base_config();
  low.op_params.heat_power = 2.0;
  auto high = low;
  high.op_params.heat_power = 4.0;
  const auto a = simulate(low), b = simulate(high);
  REQUIRE(a.audio_mel.rows() == 300);
  REQUIRE(a.audio_mel.cols() == 64);
  CHECK(b.audio_mel.col(18).mean() > a.audio_mel.col(18).mean());
  CHECK(b.audio_mel.mean() > a.audio_mel.mean());
}

TEST_CASE("static context follows the operating point and system", "[simulator]") {
  auto cfg = base_config();
  cfg.op_params = {3.1, 2.7, 0.45};
  auto rec = simulate(cfg);
  REQUIRE(rec.static_tab.size() >= 602);
  REQUIRE(rec.static_tab.size() <= 606);
  CHECK(rec.static_tab(0) == 3.1);
  CHECK(rec.static_tab(1) == 2.7);
  CHECK(rec.static_tab(2) == 0.45);
  CHECK(rec.text_emb.size() == 384);
  CHECK(rec.text_emb.norm() == Catch::Approx(1.0));
  CHECK_FALSE(rec.molecules.empty());
  cfg.system = "binary_II";
  auto other = simulate(cfg);
  CHECK(other.molecules.size() == 2);
  CHECK(other.static_tab.size() != rec.static_tab.size());
}

TEST_CASE("invalid configurations are rejected", "[simulator]") {
  auto cfg = base_config();
  cfg.duration_s = 500;
  CHECK_THROWS_AS(simulate(cfg), ConfigError);
  cfg = base_config();
  cfg.faults.push_back(fault(FaultKind::heat_drop, 200, 400, 1.0));
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.faults = {fault(FaultKind::heat_drop, 1000, 1300, 1.0)};
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.faults = {fault(FaultKind::heat_drop, 700, 600, 1.0)};
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.faults = {fault(FaultKind::heat_drop, 500, 600, 0.0)};
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.faults = {fault(FaultKind::heat_drop, 500, 600, 0.5)};
  CHECK_NOTHROW(validate_config(cfg));
  CHECK_THROWS_AS(parse_fault("meltdown"), ConfigError);
  CHECK(parse_fault("sensor_drift") == FaultKind::sensor_drift);
}

TEST_CASE("corpus layout and anomaly counts", "[simulator]") {
  CorpusOptions opts;
  opts.duration_s = 600;
  auto corpus = generate_corpus(6, 4, 0.5, 9, opts);
  REQUIRE(corpus.size() == 24);
  int anomalous = 0;
  std::map<std::string, int> normals;
  std::map<std::string, std::vector<double>> params;
  std::set<std::string> ids;
  for (const auto& r : corpus) {
    validate_record(r);
    anomalous += r.is_anomalous;
    normals[r.operating_point] += !r.is_anomalous;
    ids.insert(r.id);
    params[r.operating_point] = {r.static_tab(0), r.static_tab(1), r.static_tab(2)};
  }
  CHECK(anomalous == 12);
  CHECK(ids.size() == 24);
  REQUIRE(normals.size() == 6);
  for (const auto& [op, n] : normals) CHECK(n >= 1);
  std::set<std::vector<double>> distinct;
  for (const auto& [op, p] : params) distinct.insert(p);
  CHECK(distinct.size() == 6);

  for (const auto& r : generate_corpus(3, 2, 0.0, 9, opts)) CHECK_FALSE(r.is_anomalous);
  // Every OP keeps a normal run even at full anomaly fraction.
  for (const auto& r : generate_corpus(3, 2, 1.0, 9, opts)) {
    if (r.id.ends_with("_r0")) CHECK_FALSE(r.is_anomalous);
  }
  CHECK_THROWS_AS(generate_corpus(2, 4, 0.5, 9, opts), ConfigError);
  CHECK_THROWS_AS(generate_corpus(3, 4, 1.5, 9, opts), ConfigError);
}

TEST_CASE("corpus regeneration is identical", "[simulator]") {
  CorpusOptions opts;
  opts.duration_s = 600;
  auto a = generate_corpus(3, 2, 0.5, 17, opts);
  auto b = generate_corpus(3, 2, 0.5, 17, opts);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].ts == b[i].ts);
    CHECK(a[i].phase == b[i].phase);
  }
}
