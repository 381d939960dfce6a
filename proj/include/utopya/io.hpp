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

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Locale-independent text and binary helpers shared by the file formats.
namespace utopya::io {

// Shortest representation that round-trips exactly.
std::string format_double(double v);
double parse_double(std::string_view s);
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);

// Numeric CSV without header; every row must have the same width.
Eigen::MatrixXd read_numeric_csv(const std::filesystem::path& path, bool skip_header = false);
std::string format_csv_row(const Eigen::Ref<const Eigen::RowVectorXd>& row);

// Raw little-endian float32 vector.
Eigen::VectorXd read_f32(const std::filesystem::path& path);
void write_f32(const std::filesystem::path& path, const Eigen::VectorXd& v);

// FNV-1a, used for config hashes and corpus fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);

}  // namespace utopya::io
