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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace utopya {

// Canonical 29-channel process-variable layout. The first 25 channels are
// prediction targets (21 continuous, then 4 binary valve states); the last
// four are manipulated setpoints used as inputs only.
namespace channels {

inline constexpr int kInputs = 29;
inline constexpr int kTargets = 25;
inline constexpr int kContinuousTargets = 21;
inline constexpr int kBinaryTargets = 4;

inline constexpr std::array<std::string_view, kInputs> kNames = {
    "T703",  "T709",  "T711",  "T712",  "T705",  "T701",  "T702",  "T704",  "T706",  "T707",
    "T708",  "T710",  "FT701", "FT702", "FT703", "FT704", "PDI701", "PDI702", "LS701", "LS702",
    "P301",  "XV701", "XV702", "XV703", "XV704", "HC701", "RR701", "XF701", "FC701"};

// Column temperatures from reboiler liquid to column top.
inline constexpr int T703 = 0, T709 = 1, T711 = 2, T712 = 3, T705 = 4;
inline constexpr int T701 = 5, T702 = 6, T704 = 7, T706 = 8, T707 = 9, T708 = 10, T710 = 11;
inline constexpr int FT701 = 12, FT702 = 13, FT703 = 14, FT704 = 15;
inline constexpr int PDI701 = 16, PDI702 = 17, LS701 = 18, LS702 = 19, P301 = 20;
inline constexpr int XV701 = 21, XV702 = 22, XV703 = 23, XV704 = 24;
inline constexpr int HC701 = 25, RR701 = 26, XF701 = 27, FC701 = 28;

inline constexpr bool is_binary(int c) { return c >= XV701 && c <= XV704; }

// Ordered (lower, upper) pairs along the column height.
inline constexpr std::array<std::pair<int, int>, 4> kTemperaturePairs = {
    std::pair{T703, T709}, std::pair{T709, T711}, std::pair{T711, T712}, std::pair{T712, T705}};

std::optional<int> index_of(std::string_view name);

}  // namespace channels

enum class Phase : std::uint8_t { normal = 0, blind = 1, anomalous = 2, recovery = 3 };
inline constexpr int kPhaseCount = 4;

std::string_view phase_name(Phase p);
std::optional<Phase> parse_phase(std::string_view s);
// Tie-break order for majority votes: normal < recovery < blind < anomalous.
int phase_severity(Phase p);

enum class Modality : std::uint8_t { ts = 0, img = 1, audio = 2, tab = 3, text = 4, mol = 5 };
inline constexpr int kModalityCount = 6;
inline constexpr std::array<Modality, 3> kDynamicModalities = {Modality::ts, Modality::img, Modality::audio};
inline constexpr std::array<Modality, 3> kStaticModalities = {Modality::tab, Modality::text, Modality::mol};

std::string_view modality_name(Modality m);
// Accepts the canonical names plus "gc" as an alias for the molecular graph.
std::optional<Modality> parse_modality(std::string_view s);

// Availability flag per modality, indexed by Modality.
using ModalityMask = std::array<bool, kModalityCount>;

inline bool& at(ModalityMask& m, Modality k) { return m[static_cast<int>(k)]; }
inline bool at(const ModalityMask& m, Modality k) { return m[static_cast<int>(k)]; }

std::string mask_to_string(const ModalityMask& m);
// Parses a comma-separated modality list; throws std::invalid_argument on an
// unknown name or when "ts" is missing.
ModalityMask parse_modality_list(std::string_view csv);

}  // namespace utopya
