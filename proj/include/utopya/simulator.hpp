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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Seeded synthetic batch-distillation plant. The dynamics are first-order
// lags integrated with explicit Euler at the 1 s sampling rate; the column
// temperature profile is built from the reboiler temperature minus positive
// stage gaps, so the ordering along the column holds by construction.
namespace utopya::sim {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FaultKind { reflux_cut, heat_drop, comp_shift, sensor_drift };

std::string_view fault_name(FaultKind k);
FaultKind parse_fault(std::string_view s);

struct FaultSpec {
  FaultKind kind = FaultKind::heat_drop;
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  double magnitude = 1.0;
};

struct OperatingParams {
  double reflux_ratio = 2.5;
  double heat_power = 3.0;  // kW
  double feed_comp = 0.4;   // light-key mole fraction
};

// Benign operator action: heat setpoint multiplied by `factor` from `time` on.
struct SetpointStep {
  int time = 0;
  double factor = 1.0;
};

struct PlantConfig {
  std::uint64_t seed = 0;
  int duration_s = 1200;
  OperatingParams op_params;
  std::vector<FaultSpec> faults;

  std::string id = "exp";
  std::string operating_point = "op";
  std::string system = "ternary_I";
  std::vector<SetpointStep> heat_steps;
  double ambient = 25.0;
  int n_images = 1;
};

inline constexpr int kStartupEnd = 300;
inline constexpr int kAudioStride = 4;  // seconds per mel frame

// First timestep of the shutdown decay.
int shutdown_start(int duration_s);

void validate_config(const PlantConfig& cfg);
ExperimentRecord simulate(const PlantConfig& cfg);

struct CorpusOptions {
  int duration_s = 1200;
  // Probability that a run carries a benign heat setpoint step.
  double disturbance_prob = 0.5;
};

// OPs are named op00, op01, ...; experiments <op>_r<k>. Every OP keeps at
// least one normal run whenever it has two or more runs.
std::vector<PlantConfig> corpus_configs(int n_ops, int runs_per_op, double anomaly_frac, std::uint64_t seed,
                                        const CorpusOptions& opts = {});
std::vector<ExperimentRecord> generate_corpus(int n_ops, int runs_per_op, double anomaly_frac, std::uint64_t seed,
                                              const CorpusOptions& opts = {});

// Channels whose response defines each fault's footprint.
std::vector<int> affected_channels(FaultKind k);

}  // namespace utopya::sim
