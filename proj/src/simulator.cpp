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

#include "utopya/simulator.hpp"

#include "utopya/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace utopya::sim {

namespace ch = channels;

namespace {

constexpr double kLowFlowCutoff = 0.05;
constexpr double kNoiseFraction = 0.005;
constexpr double kNoiseClip = 3.0;  // noise is truncated at 3 sigma

// Nominal measurement range per channel; the sensor noise is a fixed share of it.
constexpr std::array<std::pair<double, double>, ch::kInputs> kRange = {{
    {20, 120}, {20, 120}, {20, 120}, {20, 120}, {20, 120},  // column profile
    {20, 120}, {20, 120}, {20, 120}, {0, 50},   {0, 50},   {20, 120}, {20, 120},
    {0, 2},    {0, 5},    {0, 10},   {0, 5},                // flows
    {0, 20},   {0, 20},   {0, 1},    {0, 1},    {0.9, 1.2},  // pressures, levels
    {0, 1},    {0, 1},    {0, 1},    {0, 1},                // valves
    {0, 6},    {0, 6},    {0, 1},    {0, 2},                // setpoints
}};

constexpr std::array<double, 4> kGapBase = {7.0, 6.0, 8.0, 7.0};

struct FaultState {
  double heat_factor = 1.0;
  double reflux_factor = 1.0;
  double comp_offset = 0.0;
  double drift = 0.0;
  double comp_signature = 0.0;
};

FaultState active_faults(const PlantConfig& cfg, int t) {
  FaultState s;
  for (const auto& f : cfg.faults) {
    if (t < f.start || t >= f.end) continue;
    switch (f.kind) {
      case FaultKind::heat_drop: s.heat_factor *= std::max(0.0, 1.0 - 0.5 * f.magnitude); break;
      case FaultKind::reflux_cut: s.reflux_factor *= std::max(0.0, 1.0 - f.magnitude); break;
      case FaultKind::comp_shift:
        s.comp_offset -= 0.15 * f.magnitude;
        s.comp_signature += f.magnitude;
        break;
      case FaultKind::sensor_drift:
        s.drift += 8.0 * f.magnitude * (t - f.start + 1) / static_cast<double>(f.end - f.start);
        break;
    }
  }
  return s;
}

double heat_setpoint(const PlantConfig& cfg, int t) {
  if (t >= shutdown_start(cfg.duration_s)) return 0.0;
  double h = cfg.op_params.heat_power;
  for (const auto& s : cfg.heat_steps) {
    if (t >= s.time) h = cfg.op_params.heat_power * s.factor;
  }
  return h;
}

Vector gaussian_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

std::uint64_t name_seed(std::string_view s) { return io::fnv1a(s); }

int tab_length(const std::string& system) {
  if (system == "binary_II") return 604;
  if (system == "ternary_III") return 602;
  return 606;
}

MolecularGraph chain(std::initializer_list<const char*> atoms, std::initializer_list<std::pair<int, int>> bonds) {
  MolecularGraph g;
  for (const char* a : atoms) g.elements.push_back(MolecularGraph::element_index(a));
  g.edges.assign(bonds.begin(), bonds.end());
  return g;
}

std::vector<MolecularGraph> system_molecules(const std::string& system) {
  const auto water = chain({"O"}, {});
  if (system == "binary_II") {
    return {chain({"C", "O"}, {{0, 1}}), water};
  }
  if (system == "ternary_III") {
    return {chain({"C", "C", "O", "C"}, {{0, 1}, {1, 2}, {1, 3}}),
            chain({"C", "C", "O", "O", "C", "C"}, {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {4, 5}}), water};
  }
  return {chain({"C", "C", "O"}, {{0, 1}, {1, 2}}), water,
          chain({"C", "C", "C", "C", "O"}, {{0, 1}, {1, 2}, {2, 3}, {3, 4}})};
}

}  // namespace

std::string_view fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::reflux_cut: return "reflux_cut";
    case FaultKind::heat_drop: return "heat_drop";
    case FaultKind::comp_shift: return "comp_shift";
    case FaultKind::sensor_drift: return "sensor_drift";
  }
  return "heat_drop";
}

FaultKind parse_fault(std::string_view s) {
  for (auto k : {FaultKind::reflux_cut, FaultKind::heat_drop, FaultKind::comp_shift, FaultKind::sensor_drift}) {
    if (fault_name(k) == s) return k;
  }
  throw ConfigError("unknown fault kind: " + std::string(s));
}

std::vector<int> affected_channels(FaultKind k) {
  switch (k) {
    case FaultKind::reflux_cut: return {ch::FT703};
    case FaultKind::heat_drop: return {ch::T703};
    case FaultKind::comp_shift: return {ch::T703};
    case FaultKind::sensor_drift: return {ch::T711};
  }
  return {};
}

int shutdown_start(int duration_s) { return duration_s - std::max(60, duration_s / 10); }

void validate_config(const PlantConfig& cfg) {
  if (cfg.duration_s < 600) throw ConfigError("duration_s must be at least 600");
  const auto& op = cfg.op_params;
  if (!(op.reflux_ratio > 0 && op.heat_power > 0 && op.feed_comp > 0 && op.feed_comp < 1)) {
    throw ConfigError("operating parameters out of range");
  }
  for (const auto& f : cfg.faults) {
    if (f.start >= f.end) throw ConfigError("fault start must precede its end");
    if (!(f.magnitude > 0)) throw ConfigError("fault magnitude must be positive");
    if (f.start <= kStartupEnd || f.end > cfg.duration_s) {
      throw ConfigError("fault interval outside (startup_end, duration)");
    }
  }
  for (const auto& s : cfg.heat_steps) {
    if (s.time < 0 || !(s.factor > 0)) throw ConfigError("invalid heat setpoint step");
  }
  if (cfg.n_images < 0 || cfg.n_images > 3) throw ConfigError("n_images must be 0..3");
}

ExperimentRecord simulate(const PlantConfig& cfg) {
  validate_config(cfg);
  const int T = cfg.duration_s;
  const int t_sd = shutdown_start(T);
  const auto& op = cfg.op_params;
  const double Hn = op.heat_power;
  const double Rn = op.reflux_ratio;
  const double amb = cfg.ambient;

  std::mt19937_64 noise_rng(cfg.seed);
  std::mt19937_64 side_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto clipped = [&](std::mt19937_64& r) { return std::clamp(nd(r), -kNoiseClip, kNoiseClip); };

  ExperimentRecord rec;
  rec.id = cfg.id;
  rec.operating_point = cfg.operating_point;
  rec.system = cfg.system;
  rec.ts = Matrix::Zero(T, ch::kInputs);
  rec.phase.assign(static_cast<std::size_t>(T), Phase::normal);

  auto hot_profile = [&](double r, double xc) {
    const double on = std::min(1.0, 2.0 * r);
    return on * (75.0 - 25.0 * xc + 14.0 * r);
  };
  auto gap_target = [&](int k, double r, double reflux, double xc) {
    const double mult = std::clamp(1.0 + 0.3 * (1.0 - r) + 0.08 * (Rn - reflux), 0.9, 3.0);
    return std::min(1.0, 2.0 * r) * (kGapBase[static_cast<std::size_t>(k)] + 4.0 * (0.5 - xc)) * mult;
  };

  // Lag states start a little short of the operating plateau (preheated column).
  double Qa = 0.6 * Hn;
  double T703 = amb + hot_profile(1.0, op.feed_comp) - 6.0;
  std::array<double, 4> gaps{};
  for (int k = 0; k < 4; ++k) gaps[k] = 0.8 * gap_target(k, 1.0, Rn, op.feed_comp);
  double pdi1 = 0.0, pdi2 = 0.0, p301 = 1.013, t701 = amb + 5.0, t704 = T703, t707 = 16.0;
  double t702 = T703 - 30.0, t708 = t702 - 3.0, t710 = T703 - 4.0;
  double ls701 = 0.8, ls702 = 0.05, ft701 = 0.0;
  const double feed_sp = 0.5;

  std::vector<double> trace_q(static_cast<std::size_t>(T)), trace_l(static_cast<std::size_t>(T)),
      trace_sig(static_cast<std::size_t>(T));

  auto lag = [](double& state, double target, double tau) { state += (target - state) / tau; };

  for (int t = 0; t < T; ++t) {
    const FaultState f = active_faults(cfg, t);
    const double u = heat_setpoint(cfg, t);
    lag(Qa, u * f.heat_factor, 15.0);
    const double r = std::max(Qa, 0.0) / Hn;
    const double xc = op.feed_comp + f.comp_offset;
    const double reflux = t < t_sd ? Rn * f.reflux_factor : Rn;

    const double V = 1.2 * std::max(Qa, 0.0);
    const double L = V * reflux / (reflux + 1.0);
    const double D = V - L;

    lag(T703, amb + hot_profile(r, xc), 60.0);
    for (int k = 0; k < 4; ++k) lag(gaps[k], gap_target(k, r, reflux, xc), 40.0);
    lag(pdi1, 2.5 * V, 20.0);
    lag(pdi2, 1.0 * (V + L), 20.0);
    lag(p301, 1.013 + 0.004 * V, 10.0);
    lag(t701, amb + 5.0, 120.0);
    lag(t704, T703 + 6.0 * r, 20.0);
    const double t706 = 15.0 + 0.02 * (amb - 25.0);
    lag(t707, t706 + 0.8 * V, 30.0);
    const double top = T703 - gaps[0] - gaps[1] - gaps[2] - gaps[3];
    lag(t702, top - 10.0, 30.0);
    lag(t708, t702 - 3.0, 60.0);
    lag(t710, T703 - 4.0, 90.0);
    const double feed_on = t < t_sd ? 1.0 : 0.0;
    lag(ft701, feed_sp * feed_on, 10.0);
    ls701 = std::clamp(ls701 - 4e-5 * V + 2e-5 * ft701, 0.0, 1.0);
    ls702 = std::clamp(ls702 + 1e-4 * D, 0.0, 1.0);

    auto row = rec.ts.row(t);
    row(ch::T703) = T703;
    row(ch::T709) = T703 - gaps[0];
    row(ch::T711) = T703 - gaps[0] - gaps[1];
    row(ch::T712) = T703 - gaps[0] - gaps[1] - gaps[2];
    row(ch::T705) = top;
    row(ch::T701) = t701;
    row(ch::T702) = t702;
    row(ch::T704) = t704;
    row(ch::T706) = t706;
    row(ch::T707) = t707;
    row(ch::T708) = t708;
    row(ch::T710) = t710;
    row(ch::FT701) = ft701;
    row(ch::FT702) = D;
    row(ch::FT703) = L;
    row(ch::FT704) = 2.0;
    row(ch::PDI701) = pdi1;
    row(ch::PDI702) = pdi2;
    row(ch::LS701) = ls701;
    row(ch::LS702) = ls702;
    row(ch::P301) = p301;
    row(ch::XV701) = L > kLowFlowCutoff ? 1.0 : 0.0;
    row(ch::XV702) = feed_on;
    row(ch::XV703) = feed_on;
    row(ch::XV704) = 1.0 - feed_on;
    row(ch::HC701) = u;
    row(ch::RR701) = Rn;
    row(ch::XF701) = op.feed_comp;
    row(ch::FC701) = feed_sp * feed_on;

    // Sensor noise on every channel except the valve states. The setpoint
    // read-backs are noisy too, so no channel is constant over the baseline.
    for (int c = 0; c < ch::kInputs; ++c) {
      if (ch::is_binary(c)) continue;
      const double sigma = kNoiseFraction * (kRange[c].second - kRange[c].first);
      row(c) += sigma * clipped(noise_rng);
    }
    row(ch::T711) += f.drift;
    // Flow meters report zero below their low-flow cutoff.
    for (int c : {ch::FT702, ch::FT703}) {
      const double truth = c == ch::FT702 ? D : L;
      if (truth < kLowFlowCutoff) row(c) = 0.0;
    }

    trace_q[static_cast<std::size_t>(t)] = Qa;
    trace_l[static_cast<std::size_t>(t)] = L;
    trace_sig[static_cast<std::size_t>(t)] = f.comp_signature;
  }

  for (const auto& f : cfg.faults) {
    const int n = f.end - f.start;
    const int n_blind = static_cast<int>(std::lround(0.1 * n));
    const int n_rec = static_cast<int>(std::lround(0.2 * n));
    for (int t = f.start; t < f.end; ++t) {
      Phase p = Phase::anomalous;
      if (t < f.start + n_blind) p = Phase::blind;
      else if (t >= f.end - n_rec) p = Phase::recovery;
      rec.phase[static_cast<std::size_t>(t)] = p;
    }
    rec.fault_intervals.emplace_back(f.start, f.end);
  }
  rec.is_anomalous = !cfg.faults.empty();

  // Log-mel frames: a boiling band following the delivered heat, a reflux
  // band following the reflux flow, and a bubble-regime band that responds
  // to composition upsets.
  const int frames = (T + kAudioStride - 1) / kAudioStride;
  rec.audio_mel = Matrix(frames, 64);
  for (int fr = 0; fr < frames; ++fr) {
    const auto t = static_cast<std::size_t>(std::min(fr * kAudioStride + kAudioStride / 2, T - 1));
    const double q = std::max(trace_q[t], 0.0), l = std::max(trace_l[t], 0.0);
    for (int b = 0; b < 64; ++b) {
      const double boil = std::exp(-std::pow((b - 18.0) / 6.0, 2)) * std::log1p(2.0 * q);
      const double flow = std::exp(-std::pow((b - 48.0) / 5.0, 2)) * std::log1p(l);
      const double bubble = std::exp(-std::pow((b - 32.0) / 3.0, 2)) * trace_sig[t];
      rec.audio_mel(fr, b) = -2.0 - 0.03 * b + 1.6 * boil + 1.2 * flow + bubble + 0.15 * nd(side_rng);
    }
  }

  // Static context: tabular descriptors, note embedding, image features, molecules.
  const int n_tab = tab_length(cfg.system);
  rec.static_tab = gaussian_vector(n_tab, name_seed(cfg.system));
  rec.static_tab.head(6) << Rn, Hn, op.feed_comp, amb, feed_sp, Rn * Hn;
  for (Eigen::Index i = 6; i < n_tab; ++i) rec.static_tab(i) += 0.01 * nd(side_rng);

  Vector text = gaussian_vector(384, name_seed(cfg.system)) + 0.7 * gaussian_vector(384, name_seed(cfg.operating_point));
  std::bernoulli_distribution has_note(0.7);
  if (rec.is_anomalous && has_note(side_rng)) {
    text += 1.2 * gaussian_vector(384, name_seed(fault_name(cfg.faults.front().kind)));
  } else {
    text += 0.6 * gaussian_vector(384, name_seed("routine"));
  }
  for (Eigen::Index i = 0; i < text.size(); ++i) text(i) += 0.3 * nd(side_rng);
  rec.text_emb = text / text.norm();

  for (int k = 0; k < cfg.n_images; ++k) {
    Vector img = gaussian_vector(512, name_seed(cfg.system) + 1) + 0.5 * gaussian_vector(512, name_seed(cfg.operating_point) + 1);
    for (Eigen::Index i = 0; i < img.size(); ++i) img(i) += 0.2 * nd(side_rng);
    rec.img_feats.push_back(img);
  }
  rec.molecules = system_molecules(cfg.system);
  return rec;
}

std::vector<PlantConfig> corpus_configs(int n_ops, int runs_per_op, double anomaly_frac, std::uint64_t seed,
                                        const CorpusOptions& opts) {
  if (n_ops < 3) throw ConfigError("need at least 3 operating points");
  if (runs_per_op < 1) throw ConfigError("need at least one run per operating point");
  if (anomaly_frac < 0.0 || anomaly_frac > 1.0) throw ConfigError("anomaly_frac must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * unit(rng); };
  auto uni_int = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  int n_anom = static_cast<int>(std::lround(anomaly_frac * runs_per_op));
  if (runs_per_op >= 2) n_anom = std::min(n_anom, runs_per_op - 1);

  const int T = opts.duration_s;
  const int t_sd = shutdown_start(T);
  const int op_len = t_sd - kStartupEnd;
  int fault_counter = uni_int(0, 3);

  std::vector<PlantConfig> out;
  for (int o = 0; o < n_ops; ++o) {
    char op_name[16];
    std::snprintf(op_name, sizeof(op_name), "op%02d", o);
    const double pick = unit(rng);
    const std::string system = pick < 0.6 ? "ternary_I" : pick < 0.8 ? "binary_II" : "ternary_III";
    OperatingParams params{uni(1.5, 4.0), uni(2.0, 4.0), uni(0.25, 0.6)};
    for (int r = 0; r < runs_per_op; ++r) {
      PlantConfig cfg;
      cfg.seed = rng();
      cfg.duration_s = T;
      cfg.op_params = params;
      cfg.id = std::string(op_name) + "_r" + std::to_string(r);
      cfg.operating_point = op_name;
      cfg.system = system;
      cfg.ambient = 25.0 + 2.0 * (unit(rng) - 0.5) * 2.0;
      cfg.n_images = uni_int(0, 3);
      if (unit(rng) < opts.disturbance_prob) {
        const double factor = unit(rng) < 0.5 ? uni(0.85, 0.95) : uni(1.05, 1.15);
        cfg.heat_steps.push_back({uni_int(kStartupEnd + 50, t_sd - 100), factor});
      }
      if (r >= runs_per_op - n_anom) {
        FaultSpec f;
        f.kind = static_cast<FaultKind>(fault_counter++ % 4);
        const int len = uni_int(op_len / 4, (2 * op_len) / 5);
        f.start = uni_int(kStartupEnd + 50, t_sd - len);
        f.end = f.start + len;
        f.magnitude = f.kind == FaultKind::reflux_cut ? uni(0.4, 1.0) : uni(0.5, 1.0);
        cfg.faults.push_back(f);
      }
      out.push_back(std::move(cfg));
    }
  }
  return out;
}

std::vector<ExperimentRecord> generate_corpus(int n_ops, int runs_per_op, double anomaly_frac, std::uint64_t seed,
                                              const CorpusOptions& opts) {
  std::vector<ExperimentRecord> out;
  for (const auto& cfg : corpus_configs(n_ops, runs_per_op, anomaly_frac, seed, opts)) out.push_back(simulate(cfg));
  return out;
}

}  // namespace utopya::sim
