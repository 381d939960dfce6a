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

#include "utopya/baselines.hpp"
#include "utopya/model.hpp"
#include "utopya/pretrain.hpp"
#include "utopya/trainer.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace utopya {

class ConfigFileError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScoringConfig {
  double fusion_weight = kDefaultFusionWeight;
  bool tune_on_val = false;
  bool three_signal = false;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  PretrainConfig pretrain;
  bool use_pretrain = true;
  ScoringConfig scoring;
  baselines::BaselineConfig baseline;
};

inline constexpr std::string_view kConfigHeader = "utopya-config 1";

// Versioned key=value text. Lines starting with '#' and blank lines are
// ignored; unknown keys and malformed values throw ConfigFileError.
std::string to_text(const RunConfig& cfg);
RunConfig parse_config(std::string_view text);
// Applies key=value overrides on top of an existing config.
void apply_overrides(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv);
std::uint64_t config_hash(const RunConfig& cfg);
std::vector<std::string> config_keys();

// Sets the physics weight to zero.
void disable_physics(RunConfig& cfg);

}  // namespace utopya
