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

#include "utopya/scoring.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace utopya {

using CurvePoint = std::pair<double, double>;

// (false positive rate, true positive rate) from (0, 0) to (1, 1), one point
// per distinct threshold.
std::vector<CurvePoint> roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels);
// (recall, precision), one point per distinct threshold.
std::vector<CurvePoint> pr_curve(const std::vector<double>& scores, const std::vector<bool>& labels);

std::string curve_svg(const std::vector<CurvePoint>& points, const std::string& title, const std::string& x_label,
                      const std::string& y_label, bool diagonal);
// Overlaid histograms of normal and anomalous scores over [0, 1].
std::string histogram_svg(const std::vector<double>& scores, const std::vector<bool>& labels, int bins,
                          const std::string& title);

// Writes metrics.csv and, when `plots` is set, roc.svg, pr.svg and
// score_hist.svg for the window scores of a scorecard.
void write_report(const Scorecard& card, const std::filesystem::path& dir, bool plots);

}  // namespace utopya
