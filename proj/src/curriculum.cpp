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

#include <algorithm>
#include <cmath>
#include <numeric>

namespace utopya {

double CurriculumSchedule::fraction_at(int epoch) const {
  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    if (epoch <= stages[i].last_epoch) return stages[i].fraction;
  }
  return stages.empty() ? 1.0 : stages.back().fraction;
}

double CurriculumSchedule::phase_difficulty(Phase p) const {
  switch (p) {
    case Phase::normal: return normal;
    case Phase::anomalous: return anomalous;
    case Phase::recovery: return recovery;
    case Phase::blind: return blind;
  }
  return normal;
}

double difficulty_of(const std::array<int, kPhaseCount>& counts, const CurriculumSchedule& sched) {
  const int total = std::accumulate(counts.begin(), counts.end(), 0);
  if (total == 0) return sched.normal;
  const int n_normal = counts[static_cast<int>(Phase::normal)];
  const int n_other = total - n_normal;
  if (n_normal > 0 && n_other > 0) {
    const double minority = static_cast<double>(std::min(n_normal, n_other)) / total;
    if (minority >= sched.mixed_minority) return sched.mixed;
  }
  return sched.phase_difficulty(majority_phase(counts));
}

double difficulty_of(const WindowSample& w, const CurriculumSchedule& sched) {
  return difficulty_of(w.phase_counts, sched);
}

std::vector<std::size_t> curriculum_filter(const std::vector<double>& difficulties, int epoch,
                                           const CurriculumSchedule& sched) {
  std::vector<std::size_t> out;
  const std::size_t n = difficulties.size();
  if (n == 0) return out;
  const double q = std::clamp(sched.fraction_at(epoch), 0.0, 1.0);
  // The small slack keeps q*n that is integral in exact arithmetic from
  // rounding up one window.
  auto keep = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, n);
  std::vector<double> sorted = difficulties;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep - 1), sorted.end());
  const double cutoff = sorted[keep - 1];
  for (std::size_t i = 0; i < n; ++i) {
    if (difficulties[i] <= cutoff) out.push_back(i);
  }
  return out;
}

}  // namespace utopya
