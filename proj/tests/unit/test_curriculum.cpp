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


#include "utopya/curriculum.hpp"
#include "utopya/dataset.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

using namespace utopya;

namespace {

std::array<int, kPhaseCount> counts(int normal, int blind, int anomalous, int recovery) {
  return {normal, blind, anomalous, recovery};
}

// Reference quantile filter: sort, take the q-th smallest as cutoff, admit all
// windows at or below it.
std::set<std::size_t> oracle_filter(const std::vector<double>& d, double q) {
  std::vector<double> s = d;
  std::sort(s.begin(), s.end());
  std::size_t keep = 0;
  while (static_cast<double>(keep) < q * static_cast<double>(d.size()) - 1e-9) ++keep;
  keep = std::max<std::size_t>(keep, 1);
  const double cutoff = s[keep - 1];
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] <= cutoff) out.insert(i);
  }
  return out;
}

}  // namespace

TEST_CASE("difficulty of pure and mixed windows", "[curriculum]") {
  CHECK(difficulty_of(counts(120, 0, 0, 0)) == 0.0);
  CHECK(difficulty_of(counts(0, 120, 0, 0)) == 0.9);
  CHECK(difficulty_of(counts(0, 0, 120, 0)) == 0.3);
  CHECK(difficulty_of(counts(0, 0, 0, 120)) == 0.6);
  CHECK(difficulty_of(counts(60, 0, 60, 0)) == 0.5);
}

TEST_CASE("mixed requires a minority of at least twenty percent", "[curriculum]") {
  CHECK(difficulty_of(counts(96, 0, 24, 0)) == 0.5);
  CHECK(difficulty_of(counts(97, 0, 23, 0)) == 0.0);
  CHECK(difficulty_of(counts(23, 0, 97, 0)) == 0.3);
  // Non-normal phases only: no normal timesteps, so the majority decides.
  CHECK(difficulty_of(counts(0, 60, 0, 60)) == 0.9);
}

TEST_CASE("difficulty values stay within the schedule map", "[curriculum]") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(0, 40);
  const std::set<double> allowed{0.0, 0.3, 0.5, 0.6, 0.9};
  for (int i = 0; i < 500; ++i) {
    auto c = counts(d(rng), d(rng), d(rng), d(rng));
    CHECK(allowed.count(difficulty_of(c)) == 1);
  }
}

TEST_CASE("stage fractions follow the schedule", "[curriculum]") {
  CurriculumSchedule s;
  CHECK(s.fraction_at(1) == 0.6);
  CHECK(s.fraction_at(5) == 0.6);
  CHECK(s.fraction_at(6) == 0.8);
  CHECK(s.fraction_at(10) == 0.8);
  CHECK(s.fraction_at(11) == 1.0);
  CHECK(s.fraction_at(500) == 1.0);
  for (std::size_t i = 1; i < s.stages.size(); ++i) CHECK(s.stages[i].fraction >= s.stages[i - 1].fraction);
}

TEST_CASE("first stage admits exactly the easy sixty percent", "[curriculum]") {
  std::vector<double> d;
  for (int i = 0; i < 60; ++i) d.push_back(0.0);
  for (int i = 0; i < 15; ++i) d.push_back(0.3);
  for (int i = 0; i < 15; ++i) d.push_back(0.6);
  for (int i = 0; i < 10; ++i) d.push_back(0.9);
  std::shuffle(d.begin(), d.end(), std::mt19937(3));
  auto sub = curriculum_filter(d, 1);
  REQUIRE(sub.size() == 60);
  for (auto i : sub) CHECK(d[i] == 0.0);
  auto second = curriculum_filter(d, 6);
  // The 80% cutoff lands on 0.6, so every 0.6 window comes in.
  CHECK(second.size() == 90);
}

TEST_CASE("late epochs use the full corpus", "[curriculum]") {
  std::vector<double> d{0.9, 0.0, 0.5, 0.3, 0.6, 0.9};
  auto sub = curriculum_filter(d, 11);
  REQUIRE(sub.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(sub[i] == i);
  CHECK(curriculum_filter({}, 1).empty());
}

TEST_CASE("filter matches the quantile oracle and nests across epochs", "[curriculum]") {
  const std::vector<double> levels{0.0, 0.3, 0.5, 0.6, 0.9};
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 200);
    std::vector<double> d;
    for (int i = 0; i < n; ++i) d.push_back(levels[rng() % levels.size()]);
    std::set<std::size_t> prev;
    for (int epoch = 1; epoch <= 12; ++epoch) {
      auto sub = curriculum_filter(d, epoch);
      std::set<std::size_t> got(sub.begin(), sub.end());
      CHECK(got == oracle_filter(d, CurriculumSchedule{}.fraction_at(epoch)));
      CHECK(std::includes(got.begin(), got.end(), prev.begin(), prev.end()));
      CHECK(static_cast<double>(got.size()) >= CurriculumSchedule{}.fraction_at(epoch) * n - 1e-9);
      prev = got;
    }
  }
}

TEST_CASE("filter hits stage fractions exactly with distinct difficulties", "[curriculum]") {
  std::vector<double> d;
  for (int i = 0; i < 100; ++i) d.push_back(i / 100.0);
  std::shuffle(d.begin(), d.end(), std::mt19937(5));
  CHECK(curriculum_filter(d, 1).size() == 60);
  CHECK(curriculum_filter(d, 7).size() == 80);
  CHECK(curriculum_filter(d, 12).size() == 100);
}
