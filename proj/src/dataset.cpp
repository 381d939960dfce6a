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

#include "utopya/curriculum.hpp"
#include "utopya/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace utopya {

namespace {

constexpr int kFormatVersion = 1;
constexpr Eigen::Index kTextDim = 384;
constexpr Eigen::Index kImageDim = 512;
constexpr Eigen::Index kMelBins = 64;
constexpr Eigen::Index kTabMin = 602;
constexpr Eigen::Index kTabMax = 606;

std::vector<std::string_view> lines_of(const std::string& text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
    pos = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

Matrix read_ts(const fs::path& path) {
  const std::string text = io::read_text(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw DataError("empty ts file: " + path.string());
  const auto header = io::split(lines[0]);
  std::vector<int> column_to_channel(header.size(), -1);
  std::vector<bool> seen(channels::kInputs, false);
  for (std::size_t j = 0; j < header.size(); ++j) {
    auto idx = channels::index_of(trim(header[j]));
    if (!idx) continue;  // extra columns are ignored
    if (seen[*idx]) throw DataError("duplicate channel " + std::string(header[j]));
    seen[*idx] = true;
    column_to_channel[j] = *idx;
  }
  for (int c = 0; c < channels::kInputs; ++c) {
    if (!seen[c]) throw DataError("ts file lacks channel " + std::string(channels::kNames[c]));
  }
  Matrix ts(static_cast<Eigen::Index>(lines.size() - 1), channels::kInputs);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = io::split(lines[i]);
    if (cells.size() != header.size()) throw DataError("ragged ts row " + std::to_string(i));
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (column_to_channel[j] >= 0) ts(static_cast<Eigen::Index>(i - 1), column_to_channel[j]) = io::parse_double(cells[j]);
    }
  }
  return ts;
}

std::vector<Phase> read_phase(const fs::path& path) {
  const std::string text = io::read_text(path);
  std::vector<Phase> out;
  bool first = true;
  for (auto line : lines_of(text)) {
    line = trim(line);
    if (first) {
      first = false;
      if (line == "phase") continue;
    }
    auto p = parse_phase(line);
    if (!p) throw DataError("unknown phase label '" + std::string(line) + "'");
    out.push_back(*p);
  }
  return out;
}

MolecularGraph read_graph(const fs::path& path) {
  MolecularGraph g;
  std::istringstream in(io::read_text(path));
  std::string kind;
  while (in >> kind) {
    if (kind == "atom") {
      std::string sym;
      if (!(in >> sym)) throw DataError("truncated atom line in " + path.string());
      g.elements.push_back(MolecularGraph::element_index(sym));
    } else if (kind == "bond") {
      int a = 0, b = 0;
      if (!(in >> a >> b)) throw DataError("truncated bond line in " + path.string());
      g.edges.emplace_back(a, b);
    } else {
      throw DataError("unknown graph line '" + kind + "' in " + path.string());
    }
  }
  return g;
}

std::string graph_text(const MolecularGraph& g) {
  std::string out;
  for (int e : g.elements) {
    out += "atom ";
    out += MolecularGraph::element_symbol(e);
    out += '\n';
  }
  for (auto [a, b] : g.edges) out += "bond " + std::to_string(a) + ' ' + std::to_string(b) + '\n';
  return out;
}

std::vector<fs::path> numbered_files(const fs::path& dir, std::string_view prefix, std::string_view suffix) {
  std::vector<std::pair<int, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= prefix.size() + suffix.size()) continue;
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    const std::string mid = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    if (mid.empty() || !std::all_of(mid.begin(), mid.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    found.emplace_back(std::stoi(mid), entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

}  // namespace

int MolecularGraph::element_index(std::string_view symbol) {
  if (symbol == "C") return 0;
  if (symbol == "O") return 1;
  if (symbol == "H") return 2;
  if (symbol == "N") return 3;
  return 4;
}

std::string_view MolecularGraph::element_symbol(int index) {
  static constexpr std::array<std::string_view, 5> names = {"C", "O", "H", "N", "X"};
  return names.at(static_cast<std::size_t>(index));
}

ModalityMask ExperimentRecord::availability() const {
  ModalityMask m{};
  at(m, Modality::ts) = ts.rows() > 0;
  at(m, Modality::img) = !img_feats.empty();
  at(m, Modality::audio) = audio_mel.rows() > 0;
  at(m, Modality::tab) = static_tab.size() > 0;
  at(m, Modality::text) = text_emb.size() > 0;
  at(m, Modality::mol) = !molecules.empty();
  return m;
}

void validate_record(const ExperimentRecord& rec) {
  const std::string where = " (experiment " + rec.id + ")";
  if (rec.ts.cols() != channels::kInputs) throw DataError("ts must have 29 channels" + where);
  if (rec.ts.rows() < kBaselineSteps) throw DataError("ts shorter than the 300-step baseline" + where);
  if (static_cast<Eigen::Index>(rec.phase.size()) != rec.ts.rows()) throw DataError("length mismatch between ts and phase" + where);
  if (!rec.ts.allFinite()) throw DataError("non-finite ts value" + where);
  for (int c = channels::XV701; c <= channels::XV704; ++c) {
    for (Eigen::Index t = 0; t < rec.ts.rows(); ++t) {
      const double v = rec.ts(t, c);
      if (v != 0.0 && v != 1.0) {
        throw DataError("non-binary value in binary channel " + std::string(channels::kNames[c]) + where);
      }
    }
  }
  const bool any_fault = std::any_of(rec.phase.begin(), rec.phase.end(), [](Phase p) { return p != Phase::normal; });
  if (any_fault != rec.is_anomalous) throw DataError("is_anomalous disagrees with phase labels" + where);
  if (rec.static_tab.size() > 0 && (rec.static_tab.size() < kTabMin || rec.static_tab.size() > kTabMax)) {
    throw DataError("static_tab length must be 602..606" + where);
  }
  if (rec.text_emb.size() > 0 && rec.text_emb.size() != kTextDim) throw DataError("text_emb must have 384 entries" + where);
  if (rec.img_feats.size() > 3) throw DataError("at most 3 image feature vectors" + where);
  for (const auto& v : rec.img_feats) {
    if (v.size() != kImageDim) throw DataError("img_feat must have 512 entries" + where);
  }
  if (rec.audio_mel.rows() > 0 && rec.audio_mel.cols() != kMelBins) throw DataError("audio_mel must have 64 bins" + where);
  for (const auto& g : rec.molecules) {
    if (g.elements.empty()) throw DataError("empty molecular graph" + where);
    const int n = static_cast<int>(g.elements.size());
    for (auto [a, b] : g.edges) {
      if (a < 0 || b < 0 || a >= n || b >= n) throw DataError("bond references a missing atom" + where);
    }
  }
  for (auto [s, e] : rec.fault_intervals) {
    if (s < 0 || e > rec.length() || s >= e) throw DataError("fault interval out of range" + where);
  }
}

ExperimentRecord load_experiment(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw DataError("missing manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(io::read_text(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("bad manifest in " + dir.string() + ": " + e.what());
  }

  ExperimentRecord rec;
  try {
    rec.id = manifest.at("id").get<std::string>();
    rec.operating_point = manifest.at("operating_point").get<std::string>();
    rec.system = manifest.value("system", std::string{});
    rec.is_anomalous = manifest.at("is_anomalous").get<bool>();
    if (manifest.contains("fault_intervals")) {
      for (const auto& iv : manifest["fault_intervals"]) rec.fault_intervals.emplace_back(iv.at(0).get<int>(), iv.at(1).get<int>());
    }
    if (manifest.contains("files")) {
      for (const auto& f : manifest["files"]) {
        const auto name = f.get<std::string>();
        if (!fs::exists(dir / name)) throw DataError("manifest lists missing file " + name + " in " + dir.string());
      }
    }
  } catch (const json::exception& e) {
    throw DataError("bad manifest in " + dir.string() + ": " + e.what());
  }

  if (!fs::exists(dir / "ts.csv")) throw DataError("missing mandatory ts.csv in " + dir.string());
  rec.ts = read_ts(dir / "ts.csv");
  if (!fs::exists(dir / "phase.csv")) throw DataError("missing mandatory phase.csv in " + dir.string());
  rec.phase = read_phase(dir / "phase.csv");

  if (fs::exists(dir / "static.csv")) {
    Matrix m = io::read_numeric_csv(dir / "static.csv");
    if (m.rows() != 1) throw DataError("static.csv must hold one row");
    rec.static_tab = m.row(0).transpose();
  }
  if (fs::exists(dir / "text_emb.f32")) rec.text_emb = io::read_f32(dir / "text_emb.f32");
  for (const auto& p : numbered_files(dir, "img_feat_", ".f32")) rec.img_feats.push_back(io::read_f32(p));
  if (fs::exists(dir / "audio_mel.csv")) rec.audio_mel = io::read_numeric_csv(dir / "audio_mel.csv");
  for (const auto& p : numbered_files(dir, "mol_", ".graph")) rec.molecules.push_back(read_graph(p));

  validate_record(rec);
  return rec;
}

void write_experiment(const ExperimentRecord& rec, const fs::path& dir) {
  validate_record(rec);
  fs::create_directories(dir);
  std::vector<std::string> files = {"ts.csv", "phase.csv"};

  std::string ts;
  for (int c = 0; c < channels::kInputs; ++c) {
    if (c > 0) ts += ',';
    ts += channels::kNames[c];
  }
  ts += '\n';
  for (Eigen::Index t = 0; t < rec.ts.rows(); ++t) {
    ts += io::format_csv_row(rec.ts.row(t));
    ts += '\n';
  }
  io::write_text(dir / "ts.csv", ts);

  std::string phase = "phase\n";
  for (Phase p : rec.phase) {
    phase += phase_name(p);
    phase += '\n';
  }
  io::write_text(dir / "phase.csv", phase);

  if (rec.static_tab.size() > 0) {
    io::write_text(dir / "static.csv", io::format_csv_row(rec.static_tab.transpose()) + "\n");
    files.emplace_back("static.csv");
  }
  if (rec.text_emb.size() > 0) {
    io::write_f32(dir / "text_emb.f32", rec.text_emb);
    files.emplace_back("text_emb.f32");
  }
  for (std::size_t k = 0; k < rec.img_feats.size(); ++k) {
    const std::string name = "img_feat_" + std::to_string(k) + ".f32";
    io::write_f32(dir / name, rec.img_feats[k]);
    files.push_back(name);
  }
  if (rec.audio_mel.rows() > 0) {
    std::string mel;
    for (Eigen::Index f = 0; f < rec.audio_mel.rows(); ++f) {
      mel += io::format_csv_row(rec.audio_mel.row(f));
      mel += '\n';
    }
    io::write_text(dir / "audio_mel.csv", mel);
    files.emplace_back("audio_mel.csv");
  }
  for (std::size_t k = 0; k < rec.molecules.size(); ++k) {
    const std::string name = "mol_" + std::to_string(k) + ".graph";
    io::write_text(dir / name, graph_text(rec.molecules[k]));
    files.push_back(name);
  }

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["id"] = rec.id;
  manifest["operating_point"] = rec.operating_point;
  manifest["system"] = rec.system;
  manifest["is_anomalous"] = rec.is_anomalous;
  manifest["files"] = files;
  json intervals = json::array();
  for (auto [s, e] : rec.fault_intervals) intervals.push_back({s, e});
  manifest["fault_intervals"] = intervals;
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<ExperimentRecord> load_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("corpus directory not found: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<ExperimentRecord> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(load_experiment(d));
  if (out.empty()) throw DataError("no experiments under " + root.string());
  return out;
}

ExperimentRecord normalize_per_experiment(const ExperimentRecord& rec, int baseline, double sigma_floor) {
  if (rec.ts.rows() < baseline) throw DataError("record shorter than the normalisation baseline");
  ExperimentRecord out = rec;
  const Eigen::Index C = rec.ts.cols();
  out.norm_mean = Eigen::RowVectorXd::Zero(C);
  out.norm_scale = Eigen::RowVectorXd::Ones(C);
  for (Eigen::Index c = 0; c < C; ++c) {
    if (channels::is_binary(static_cast<int>(c))) continue;
    const auto base = rec.ts.col(c).head(baseline);
    const double mu = base.mean();
    const double var = (base.array() - mu).square().mean();
    const double sigma = std::max(std::sqrt(var), sigma_floor);
    out.ts.col(c) = (rec.ts.col(c).array() - mu) / sigma;
    out.norm_mean(c) = mu;
    out.norm_scale(c) = sigma;
  }
  return out;
}

Phase majority_phase(const std::array<int, kPhaseCount>& counts) {
  Phase best = Phase::normal;
  int best_count = -1;
  for (int k = 0; k < kPhaseCount; ++k) {
    const Phase p = static_cast<Phase>(k);
    if (counts[k] > best_count || (counts[k] == best_count && phase_severity(p) > phase_severity(best))) {
      best = p;
      best_count = counts[k];
    }
  }
  return best;
}

std::vector<WindowSample> make_windows(const ExperimentRecord& rec, int window, int stride, int horizon,
                                       std::size_t record_index) {
  std::vector<WindowSample> out;
  const int T = rec.length();
  if (T < window + horizon) return out;
  const ModalityMask avail = rec.availability();
  for (int t = 0; t + window + horizon <= T; t += stride) {
    WindowSample w;
    w.x = rec.ts.block(t, 0, window, rec.ts.cols());
    w.y_target = rec.ts.block(t + window, 0, horizon, channels::kTargets);
    for (int s = t; s < t + window; ++s) ++w.phase_counts[static_cast<int>(rec.phase[static_cast<std::size_t>(s)])];
    w.phase_label = majority_phase(w.phase_counts);
    w.anomaly_label = w.phase_label != Phase::normal;
    w.difficulty = difficulty_of(w.phase_counts);
    w.availability = avail;
    w.experiment_id = rec.id;
    w.t_start = t;
    w.record_index = record_index;
    out.push_back(std::move(w));
  }
  return out;
}

std::array<int, 3> partition_sizes(int n_ops, const SplitRatios& r) {
  const int n_val = std::max(1, static_cast<int>(std::lround(r.val * n_ops)));
  const int n_test = std::max(1, static_cast<int>(std::lround(r.test * n_ops)));
  const int n_train = n_ops - n_val - n_test;
  if (n_train < 1) throw DataError("too few operating points for the requested split ratios");
  return {n_train, n_val, n_test};
}

SplitScore score_split(const std::vector<ExperimentRecord>& records, const SplitAssignment& split, const SplitRatios& ratios) {
  const std::array<const std::set<std::string>*, 3> parts = {&split.train, &split.val, &split.test};
  const std::array<double, 3> target = {ratios.train, ratios.val, ratios.test};
  std::array<int, 3> n{}, n_anom{};
  int total = 0, total_anom = 0;
  for (const auto& r : records) {
    for (int p = 0; p < 3; ++p) {
      if (parts[p]->count(r.id)) {
        ++n[p];
        n_anom[p] += r.is_anomalous ? 1 : 0;
      }
    }
    ++total;
    total_anom += r.is_anomalous ? 1 : 0;
  }
  SplitScore s;
  s.infeasible = 0;
  const double overall = total > 0 ? static_cast<double>(total_anom) / total : 0.0;
  for (int p = 0; p < 3; ++p) {
    if (n_anom[p] == 0 || n_anom[p] == n[p]) s.infeasible = 1;
    const double frac = n[p] > 0 ? static_cast<double>(n_anom[p]) / n[p] : 0.0;
    s.anomaly_dev += std::abs(frac - overall);
    s.size_dev += std::abs(static_cast<double>(n[p]) / std::max(total, 1) - target[p]);
  }
  return s;
}

namespace {

std::vector<std::string> sorted_ops(const std::vector<ExperimentRecord>& records) {
  std::set<std::string> ops;
  for (const auto& r : records) ops.insert(r.operating_point);
  return {ops.begin(), ops.end()};
}

SplitAssignment assign(const std::vector<ExperimentRecord>& records, const std::vector<std::string>& order,
                       const std::array<int, 3>& sizes) {
  static constexpr std::array<const char*, 3> names = {"train", "val", "test"};
  SplitAssignment a;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int p = static_cast<int>(i) < sizes[0] ? 0 : (static_cast<int>(i) < sizes[0] + sizes[1] ? 1 : 2);
    a.op_map[order[i]] = names[p];
  }
  for (const auto& r : records) {
    const std::string& p = a.op_map.at(r.operating_point);
    (p == "train" ? a.train : p == "val" ? a.val : a.test).insert(r.id);
  }
  return a;
}

}  // namespace

SplitAssignment search_split(const std::vector<ExperimentRecord>& records, int n_seeds, const SplitRatios& ratios,
                             std::uint64_t base_seed) {
  const auto ops = sorted_ops(records);
  if (ops.size() < 3) throw DataError("split infeasible: need at least 3 distinct operating points");
  const auto sizes = partition_sizes(static_cast<int>(ops.size()), ratios);
  SplitAssignment best;
  SplitScore best_score{2, 0.0, 0.0};
  for (int s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
    std::mt19937_64 rng(seed);
    auto order = ops;
    std::shuffle(order.begin(), order.end(), rng);
    SplitAssignment cand = assign(records, order, sizes);
    const SplitScore score = score_split(records, cand, ratios);
    if (score < best_score) {
      best_score = score;
      best = std::move(cand);
      best.seed = seed;
    }
  }
  if (best_score.infeasible != 0) {
    throw DataError("split infeasible: no assignment gives every partition a normal and an anomalous experiment");
  }
  return best;
}

void validate_split(const std::vector<ExperimentRecord>& records, const SplitAssignment& split) {
  std::map<std::string, std::string> op_part;
  std::array<int, 3> n_norm{}, n_anom{};
  for (const auto& r : records) {
    int p = -1, hits = 0;
    if (split.train.count(r.id)) p = 0, ++hits;
    if (split.val.count(r.id)) p = 1, ++hits;
    if (split.test.count(r.id)) p = 2, ++hits;
    if (hits != 1) throw DataError("experiment " + r.id + " must be in exactly one partition");
    const std::string name = p == 0 ? "train" : p == 1 ? "val" : "test";
    auto [it, inserted] = op_part.emplace(r.operating_point, name);
    if (!inserted && it->second != name) throw DataError("operating point " + r.operating_point + " spans partitions");
    (r.is_anomalous ? n_anom : n_norm)[p]++;
  }
  for (int p = 0; p < 3; ++p) {
    if (n_norm[p] == 0 || n_anom[p] == 0) {
      throw DataError("every partition needs at least one normal and one anomalous experiment");
    }
  }
}

void write_split(const SplitAssignment& split, const fs::path& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["seed"] = split.seed;
  j["train"] = split.train;
  j["val"] = split.val;
  j["test"] = split.test;
  j["op_map"] = split.op_map;
  io::write_text(path, j.dump(2) + "\n");
}

SplitAssignment read_split(const fs::path& path) {
  try {
    const json j = json::parse(io::read_text(path));
    SplitAssignment s;
    s.seed = j.value("seed", std::uint64_t{0});
    s.train = j.at("train").get<std::set<std::string>>();
    s.val = j.at("val").get<std::set<std::string>>();
    s.test = j.at("test").get<std::set<std::string>>();
    s.op_map = j.value("op_map", std::map<std::string, std::string>{});
    return s;
  } catch (const json::exception& e) {
    throw DataError("bad split file " + path.string() + ": " + e.what());
  }
}

Matrix audio_segment(const ExperimentRecord& rec, int t_start, int window, int frames) {
  Matrix out = Matrix::Zero(frames, kMelBins);
  const Eigen::Index F = rec.audio_mel.rows();
  if (F == 0 || rec.length() == 0) return out;
  const double per_step = static_cast<double>(F) / rec.length();
  const double f0 = t_start * per_step;
  const double span = window * per_step;
  for (int r = 0; r < frames; ++r) {
    double pos = f0 + (r + 0.5) * span / frames - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(F - 1));
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const Eigen::Index hi = std::min(lo + 1, F - 1);
    const double a = pos - static_cast<double>(lo);
    out.row(r) = (1.0 - a) * rec.audio_mel.row(lo) + a * rec.audio_mel.row(hi);
  }
  return out;
}

}  // namespace utopya
