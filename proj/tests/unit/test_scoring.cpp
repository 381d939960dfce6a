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


#include "utopya/scoring.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

using namespace utopya;

namespace {

double auroc_oracle(const std::vector<double>& s, const std::vector<bool>& y) {
  double wins = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!y[i] || y[j]) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

// Average precision from the definition, one threshold per distinct score.
double auprc_oracle(const std::vector<double>& s, const std::vector<bool>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), true));
  double prev_recall = 0, ap = 0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp) += 1;
    }
    const double recall = tp / pos;
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
  }
  return ap;
}

double f1_at(const std::vector<double>& s, const std::vector<bool>& y, double thr) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pred = s[i] > thr;
    if (pred && y[i]) ++tp;
    if (pred && !y[i]) ++fp;
    if (!pred && y[i]) ++fn;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

double f1_oracle(const std::vector<double>& s, const std::vector<bool>& y) {
  double best = 0;
  for (double t : s) best = std::max(best, f1_at(s, y, t - 1e-12));
  return best;
}

struct Random {
  std::vector<double> s;
  std::vector<bool> y;
};

Random random_case(std::uint64_t seed, int n, int levels) {
  std::mt19937_64 rng(seed);
  Random r;
  for (int i = 0; i < n; ++i) {
    r.s.push_back(static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) / levels);
    r.y.push_back(rng() % 3 == 0);
  }
  r.y[0] = true;
  r.y[1] = false;
  return r;
}

WindowScore ws(const std::string& id, bool label, double prob, double mae, bool exp_label) {
  WindowScore w;
  w.experiment_id = id;
  w.label = label;
  w.experiment_label = exp_label;
  w.anomaly_prob = prob;
  w.pred_mae = mae;
  w.pred_mse = mae * mae;
  return w;
}

}  // namespace

TEST_CASE("auroc examples", "[scoring]") {
  CHECK(auroc({0.1, 0.4, 0.35, 0.8}, {false, false, true, true}) == Catch::Approx(0.75));
  CHECK(auroc({0.1, 0.2, 0.8, 0.9}, {false, false, true, true}) == 1.0);
  CHECK(auroc({0.5, 0.5, 0.5, 0.5}, {false, true, false, true}) == 0.5);
  CHECK_THROWS_AS(auroc({0.1, 0.2}, {true, true}), MetricError);
  CHECK_THROWS_AS(auroc({0.1, NAN}, {true, false}), MetricError);
  auto [num, den] = auroc_rational({0.1, 0.4, 0.35, 0.8}, {false, false, true, true});
  CHECK(den == 8);
  CHECK(num == 6);
}

TEST_CASE("auroc matches the pairwise oracle", "[scoring]") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto r = random_case(seed, 5 + static_cast<int>(seed % 40), 1 + static_cast<int>(seed % 7));
    CHECK(auroc(r.s, r.y) == Catch::Approx(auroc_oracle(r.s, r.y)).epsilon(1e-12));
  }
}

TEST_CASE("auroc properties", "[scoring]") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto r = random_case(seed, 30, 1000000);
    std::vector<double> neg, mono;
    for (double v : r.s) {
      neg.push_back(-v);
      mono.push_back(std::exp(3 * v) + 7);
    }
    std::set<double> distinct(r.s.begin(), r.s.end());
    if (distinct.size() == r.s.size()) CHECK(auroc(r.s, r.y) + auroc(neg, r.y) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(auroc(mono, r.y) == auroc(r.s, r.y));
  }
}

TEST_CASE("auprc examples and oracle", "[scoring]") {
  CHECK(auprc({0.9, 0.8, 0.2, 0.1}, {true, true, false, false}) == 1.0);
  CHECK(auprc({0.9, 0.8, 0.2, 0.1, 0.05}, {true, false, false, false, false}) == 1.0);
  CHECK_THROWS_AS(auprc({0.1, 0.2}, {false, false}), MetricError);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto r = random_case(seed, 5 + static_cast<int>(seed % 40), 1 + static_cast<int>(seed % 7));
    CHECK(auprc(r.s, r.y) == Catch::Approx(auprc_oracle(r.s, r.y)).epsilon(1e-12));
  }
  // Random scores approach the prevalence.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s;
  std::vector<bool> y;
  for (int i = 0; i < 10000; ++i) {
    s.push_back(u(rng));
    y.push_back(u(rng) < 0.3);
  }
  const double prevalence = static_cast<double>(std::count(y.begin(), y.end(), true)) / y.size();
  CHECK(std::abs(auprc(s, y) - prevalence) < 0.02);
}

TEST_CASE("best F1 examples and oracle", "[scoring]") {
  auto sep = f1_at_best({0.1, 0.2, 0.8, 0.9}, {false, false, true, true});
  CHECK(sep.f1 == 1.0);
  auto r = f1_at_best({0.9, 0.8, 0.2}, {true, false, false});
  CHECK(r.f1 == 1.0);
  CHECK(r.threshold > 0.8);
  CHECK(r.threshold < 0.9);
  auto all = f1_at_best({0.3, 0.6, 0.2}, {true, true, true});
  CHECK(all.f1 == 1.0);
  CHECK(all.threshold < 0.2);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto c = random_case(seed, 5 + static_cast<int>(seed % 40), 1 + static_cast<int>(seed % 7));
    auto got = f1_at_best(c.s, c.y);
    CHECK(got.f1 == Catch::Approx(f1_oracle(c.s, c.y)).epsilon(1e-12));
    CHECK(f1_at(c.s, c.y, got.threshold) == Catch::Approx(got.f1).epsilon(1e-12));
  }
}

TEST_CASE("percentiles and ranks", "[scoring]") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  std::shuffle(v.begin(), v.end(), std::mt19937(1));
  CHECK(percentile(v, 0.95) == Catch::Approx(95.05).epsilon(1e-12));
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 1.0) == 100.0);
  CHECK(percentile({4.0}, 0.95) == 4.0);
  auto r = normalized_ranks({2, 2, 1, 7});
  CHECK(r == std::vector<double>{0.5, 0.5, 0.0, 1.0});
  CHECK(normalized_ranks({3.0}) == std::vector<double>{0.0});
}

TEST_CASE("rank fusion examples", "[scoring]") {
  const std::vector<double> s1{0.3, 0.1, 0.9, 0.5}, s2{2, 2, 1, 7};
  auto f = rank_fuse({s1, s2}, {0.73, 0.27});
  const std::vector<double> expected{0.73 / 3 + 0.27 * 0.5, 0.27 * 0.5, 0.73, 0.73 * 2 / 3 + 0.27};
  for (std::size_t i = 0; i < 4; ++i) CHECK(f[i] == Catch::Approx(expected[i]).epsilon(1e-12));

  auto only = rank_fuse({s1, s2}, {1.0, 0.0});
  CHECK(only == normalized_ranks(s1));
  const std::vector<double> up{1, 2, 3, 4, 5}, down{5, 4, 3, 2, 1};
  auto flat = rank_fuse({up, down}, {0.5, 0.5});
  for (double x : flat) CHECK(x == Catch::Approx(0.5));

  CHECK_THROWS_AS(rank_fuse({s1, s2}, {0.5, 0.6}), MetricError);
  CHECK_THROWS_AS(rank_fuse({s1}, {0.5, 0.5}), MetricError);
  CHECK_THROWS_AS(rank_fuse({{1.0}, {2.0}}, {0.5, 0.5}), MetricError);

  // Monotone transforms of a signal keep the fused order.
  std::vector<double> t1;
  for (double x : s1) t1.push_back(std::log(x) * 4 + 1);
  CHECK(rank_fuse({t1, s2}, {0.73, 0.27}) == f);
}

TEST_CASE("fusion weight tuning", "[scoring]") {
  const std::vector<bool> y{false, false, false, true, true};
  // Classification perfect, prediction uninformative.
  auto dom = tune_fusion_weight({0.1, 0.2, 0.3, 0.8, 0.9}, {5, 1, 4, 2, 3}, y);
  CHECK(dom.auroc == 1.0);
  CHECK(dom.weight > 0.5);
  // Identical signals: AUROC does not depend on w, the smallest wins.
  const std::vector<double> same{0.4, 0.1, 0.6, 0.5, 0.9};
  CHECK(tune_fusion_weight(same, same, y).weight == 0.0);
  // Only a blend separates the classes: N1 N2 N3 P1 P2.
  const std::vector<double> cls{5, 1, 2, 3, 4}, pred{1, 5, 2, 4, 3};
  const std::vector<bool> yb{false, false, false, true, true};
  auto blend = tune_fusion_weight(cls, pred, yb);
  CHECK(blend.auroc == 1.0);
  CHECK(blend.weight == Catch::Approx(0.41));
  CHECK(auroc(cls, yb) < 1.0);
  CHECK(auroc(pred, yb) < 1.0);
}

TEST_CASE("experiment aggregation", "[scoring]") {
  std::vector<WindowScore> w{ws("a", false, 0.1, 1.0, true), ws("b", false, 0.2, 5.0, false),
                             ws("a", true, 0.9, 2.0, true), ws("a", false, 0.3, 3.0, true)};
  auto e = aggregate_experiment(w);
  REQUIRE(e.size() == 2);
  CHECK(e[0].experiment_id == "a");
  CHECK(e[0].max_prob == 0.9);
  CHECK(e[0].n_windows == 3);
  CHECK(e[0].label);
  CHECK(e[0].p95_pred_mae == Catch::Approx(2.9));
  CHECK(e[1].max_prob == 0.2);
  CHECK(e[1].p95_pred_mae == 5.0);
  CHECK_FALSE(e[1].has_recon);

  std::vector<WindowScore> perm{w[3], w[2], w[1], w[0]};
  auto e2 = aggregate_experiment(perm);
  CHECK(e2[0].max_prob == 0.9);
  CHECK(e2[0].p95_pred_mae == e[0].p95_pred_mae);
}

TEST_CASE("scorecards fuse two or three signals", "[scoring]") {
  std::vector<WindowScore> w;
  const double probs[4] = {0.2, 0.9, 0.4, 0.7};
  const double maes[4] = {1.0, 2.0, 4.0, 3.0};
  const double recs[4] = {0.5, 0.1, 0.2, 0.9};
  for (int i = 0; i < 4; ++i) {
    auto s = ws("e" + std::to_string(i), i % 2 == 1, probs[i], maes[i], i % 2 == 1);
    s.has_recon = true;
    s.recon_err = recs[i];
    w.push_back(s);
  }
  auto two = make_scorecard(w);
  auto expected = rank_fuse({{0.2, 0.9, 0.4, 0.7}, {1, 2, 4, 3}}, {0.73, 0.27});
  for (int i = 0; i < 4; ++i) CHECK(two.experiments[static_cast<std::size_t>(i)].fused == expected[static_cast<std::size_t>(i)]);
  CHECK_FALSE(two.three_signal);
  auto three = make_scorecard(w, 0.73, true);
  CHECK(three.three_signal);
  auto expected3 = rank_fuse({{0.2, 0.9, 0.4, 0.7}, {0.5, 0.1, 0.2, 0.9}, {1, 2, 4, 3}}, kThreeSignalWeights);
  for (int i = 0; i < 4; ++i) CHECK(three.experiments[static_cast<std::size_t>(i)].fused == expected3[static_cast<std::size_t>(i)]);

  for (auto& s : w) s.has_recon = false;
  CHECK_FALSE(make_scorecard(w, 0.73, true).three_signal);

  auto m = summarize(two);
  CHECK(m.n_windows == 4);
  CHECK(m.n_experiments == 4);
  CHECK(m.window_auroc == 1.0);
  CHECK(m.exp_auroc == 1.0);
  CHECK(m.pred_mae == Catch::Approx(2.5));
}

TEST_CASE("single-class summaries report NaN", "[scoring]") {
  auto card = make_scorecard({ws("a", false, 0.1, 1.0, false), ws("b", false, 0.3, 1.0, false)});
  auto m = summarize(card);
  CHECK(std::isnan(m.window_auroc));
  CHECK(std::isnan(m.exp_auroc));
  CHECK(std::isnan(m.window_f1));
  CHECK(m.pred_mae == 1.0);
}

TEST_CASE("scorecard CSV round trip", "[scoring]") {
  std::vector<WindowScore> w{ws("a", false, 0.125, 1.5, false), ws("b", true, 0.875, 0.25, true),
                             ws("b", false, 1.0 / 3.0, 0.1, true)};
  w[1].has_recon = true;
  w[1].recon_err = 0.3;
  auto card = make_scorecard(w);
  auto dir = std::filesystem::temp_directory_path() / "utopya_scorecard_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_scorecard(card, dir);
  CHECK(std::filesystem::exists(dir / "scorecard_experiments.csv"));
  auto back = read_window_scores(dir / "scorecard_windows.csv");
  REQUIRE(back.windows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.windows[i].experiment_id == w[i].experiment_id);
    CHECK(back.windows[i].anomaly_prob == w[i].anomaly_prob);
    CHECK(back.windows[i].pred_mae == w[i].pred_mae);
    CHECK(back.windows[i].label == w[i].label);
    CHECK(back.windows[i].experiment_label == w[i].experiment_label);
    CHECK(back.windows[i].has_recon == w[i].has_recon);
  }
  CHECK(back.windows[1].recon_err == 0.3);
  std::filesystem::remove_all(dir);
}
