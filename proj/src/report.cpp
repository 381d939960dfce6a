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

#include "utopya/report.hpp"

#include "utopya/io.hpp"
#include "utopya/pipeline.hpp"

#include <algorithm>
#include <numeric>

namespace utopya {

namespace {

template <class Visit>
void sweep(const std::vector<double>& scores, const std::vector<bool>& labels, Visit&& visit) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    visit(tp, fp);
    i = j;
  }
}

std::pair<double, double> class_counts(const std::vector<bool>& labels) {
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  return {pos, static_cast<double>(labels.size()) - pos};
}

std::string num(double v) { return io::format_double(std::round(v * 100.0) / 100.0); }

constexpr double kW = 360, kH = 300, kL = 50, kT = 30, kPlot = 240;

std::string frame(const std::string& title, const std::string& x_label, const std::string& y_label) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) + "\">\n";
  s += "<rect x=\"" + num(kL) + "\" y=\"" + num(kT) + "\" width=\"" + num(kPlot) + "\" height=\"" + num(kPlot) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(kL + kPlot / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + title + "</text>\n";
  s += "<text x=\"" + num(kL + kPlot / 2) + "\" y=\"" + num(kT + kPlot + 30) +
       "\" text-anchor=\"middle\" font-size=\"11\">" + x_label + "</text>\n";
  s += "<text x=\"15\" y=\"" + num(kT + kPlot / 2) + "\" font-size=\"11\" transform=\"rotate(-90 15 " +
       num(kT + kPlot / 2) + ")\" text-anchor=\"middle\">" + y_label + "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = k / 4.0;
    s += "<text x=\"" + num(kL + v * kPlot) + "\" y=\"" + num(kT + kPlot + 14) +
         "\" text-anchor=\"middle\" font-size=\"9\">" + num(v) + "</text>\n";
    s += "<text x=\"" + num(kL - 4) + "\" y=\"" + num(kT + (1 - v) * kPlot + 3) +
         "\" text-anchor=\"end\" font-size=\"9\">" + num(v) + "</text>\n";
  }
  return s;
}

double px(double x) { return kL + std::clamp(x, 0.0, 1.0) * kPlot; }
double py(double y) { return kT + (1.0 - std::clamp(y, 0.0, 1.0)) * kPlot; }

}  // namespace

std::vector<CurvePoint> roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw MetricError("ROC curve needs both classes");
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  sweep(scores, labels, [&](double tp, double fp) { pts.emplace_back(fp / neg, tp / pos); });
  return pts;
}

std::vector<CurvePoint> pr_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0) throw MetricError("PR curve needs a positive");
  std::vector<CurvePoint> pts;
  sweep(scores, labels, [&](double tp, double fp) { pts.emplace_back(tp / pos, tp / (tp + fp)); });
  return pts;
}

std::string curve_svg(const std::vector<CurvePoint>& points, const std::string& title, const std::string& x_label,
                      const std::string& y_label, bool diagonal) {
  std::string s = frame(title, x_label, y_label);
  if (diagonal) {
    s += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(1)) + "\" y2=\"" + num(py(1)) +
         "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& [x, y] : points) s += num(px(x)) + ',' + num(py(y)) + ' ';
  s += "\"/>\n</svg>\n";
  return s;
}

std::string histogram_svg(const std::vector<double>& scores, const std::vector<bool>& labels, int bins,
                          const std::string& title) {
  std::vector<double> hn(static_cast<std::size_t>(bins), 0.0), ha(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int b = std::clamp(static_cast<int>(scores[i] * bins), 0, bins - 1);
    (labels[i] ? ha : hn)[static_cast<std::size_t>(b)] += 1.0;
  }
  const auto [pos, neg] = class_counts(labels);
  double peak = 1e-12;
  for (int b = 0; b < bins; ++b) {
    if (neg > 0) hn[static_cast<std::size_t>(b)] /= neg;
    if (pos > 0) ha[static_cast<std::size_t>(b)] /= pos;
    peak = std::max({peak, hn[static_cast<std::size_t>(b)], ha[static_cast<std::size_t>(b)]});
  }
  std::string s = frame(title, "score", "fraction of class");
  const double w = kPlot / bins;
  auto bars = [&](const std::vector<double>& h, const char* colour) {
    for (int b = 0; b < bins; ++b) {
      const double height = h[static_cast<std::size_t>(b)] / peak * kPlot;
      s += "<rect x=\"" + num(kL + b * w) + "\" y=\"" + num(kT + kPlot - height) + "\" width=\"" + num(w) +
           "\" height=\"" + num(height) + "\" fill=\"" + colour + "\" fill-opacity=\"0.5\"/>\n";
    }
  };
  bars(hn, "steelblue");
  bars(ha, "firebrick");
  s += "<text x=\"" + num(kL + kPlot + 5) + "\" y=\"" + num(kT + 12) + "\" font-size=\"9\" fill=\"steelblue\">normal</text>\n";
  s += "<text x=\"" + num(kL + kPlot + 5) + "\" y=\"" + num(kT + 24) + "\" font-size=\"9\" fill=\"firebrick\">anomalous</text>\n";
  return s + "</svg>\n";
}

void write_report(const Scorecard& card, const std::filesystem::path& dir, bool plots) {
  const MetricSummary m = summarize(card);
  write_metrics_csv(m, card.fusion_weight, dir / "metrics.csv");
  if (!plots) return;
  std::vector<double> p;
  std::vector<bool> y;
  for (const auto& w : card.windows) {
    p.push_back(w.anomaly_prob);
    y.push_back(w.label);
  }
  const auto [pos, neg] = class_counts(y);
  if (pos > 0 && neg > 0) {
    io::write_text(dir / "roc.svg", curve_svg(roc_curve(p, y), "Window ROC", "false positive rate", "true positive rate", true));
    io::write_text(dir / "pr.svg", curve_svg(pr_curve(p, y), "Window precision-recall", "recall", "precision", false));
  }
  io::write_text(dir / "score_hist.svg", histogram_svg(p, y, 20, "Window anomaly probability"));
}

}  // namespace utopya
