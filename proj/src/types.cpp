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

#include "utopya/types.hpp"

#include <stdexcept>

namespace utopya {

std::optional<int> channels::index_of(std::string_view name) {
  for (int i = 0; i < kInputs; ++i) {
    if (kNames[i] == name) return i;
  }
  return std::nullopt;
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::normal: return "normal";
    case Phase::blind: return "blind";
    case Phase::anomalous: return "anomalous";
    case Phase::recovery: return "recovery";
  }
  return "normal";
}

std::optional<Phase> parse_phase(std::string_view s) {
  if (s == "normal") return Phase::normal;
  if (s == "blind") return Phase::blind;
  if (s == "anomalous") return Phase::anomalous;
  if (s == "recovery") return Phase::recovery;
  return std::nullopt;
}

int phase_severity(Phase p) {
  switch (p) {
    case Phase::normal: return 0;
    case Phase::recovery: return 1;
    case Phase::blind: return 2;
    case Phase::anomalous: return 3;
  }
  return 0;
}

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::ts: return "ts";
    case Modality::img: return "img";
    case Modality::audio: return "audio";
    case Modality::tab: return "tab";
    case Modality::text: return "text";
    case Modality::mol: return "mol";
  }
  return "ts";
}

std::optional<Modality> parse_modality(std::string_view s) {
  if (s == "ts") return Modality::ts;
  if (s == "img" || s == "image") return Modality::img;
  if (s == "audio") return Modality::audio;
  if (s == "tab" || s == "tabular") return Modality::tab;
  if (s == "text") return Modality::text;
  if (s == "mol" || s == "gc") return Modality::mol;
  return std::nullopt;
}

std::string mask_to_string(const ModalityMask& m) {
  std::string out;
  for (int i = 0; i < kModalityCount; ++i) {
    if (!m[i]) continue;
    if (!out.empty()) out += ',';
    out += modality_name(static_cast<Modality>(i));
  }
  return out;
}

ModalityMask parse_modality_list(std::string_view csv) {
  ModalityMask mask{};
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t next = csv.find(',', pos);
    if (next == std::string_view::npos) next = csv.size();
    std::string_view token = csv.substr(pos, next - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      auto m = parse_modality(token);
      if (!m) throw std::invalid_argument("unknown modality: " + std::string(token));
      at(mask, *m) = true;
    }
    pos = next + 1;
  }
  if (!at(mask, Modality::ts)) throw std::invalid_argument("modality list must include ts");
  return mask;
}

}  // namespace utopya
