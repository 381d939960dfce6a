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

#include "utopya/types.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace utopya {

struct WindowSample;

struct CurriculumSchedule {
  double normal = 0.0;
  double anomalous = 0.3;
  double mixed = 0.5;
  double recovery = 0.6;
  double blind = 0.9;
  // A window is "mixed" when both normal and non-normal timesteps occur and
  // the minority side covers at least this fraction.
  double mixed_minority = 0.2;

  struct Stage {
    int last_epoch;   // inclusive, 1-based; the final stage ignores it
    double fraction;  // share of windows admitted
  };
  std::vector<Stage> stages{{5, 0.6}, {10, 0.8}, {0, 1.0}};

  double fraction_at(int epoch) const;
  double phase_difficulty(Phase p) const;
};

double difficulty_of(const std::array<int, kPhaseCount>& phase_counts, const CurriculumSchedule& sched = {});
double difficulty_of(const WindowSample& w, const CurriculumSchedule& sched = {});

// Indices of the easiest fraction of windows for a 1-based epoch. All windows
// sharing the cutoff difficulty are admitted.
std::vector<std::size_t> curriculum_filter(const std::vector<double>& difficulties, int epoch,
                                           const CurriculumSchedule& sched = {});

}  // namespace utopya
