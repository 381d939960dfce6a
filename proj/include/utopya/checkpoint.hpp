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

#include "utopya/autograd.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace utopya {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::string config_text;
  std::map<std::string, ag::Matrix> tensors;
};

// Little-endian layout: "UTPY", u32 version, u64 config hash, u32-prefixed
// config text, u32 tensor count, then per tensor a u32-prefixed name,
// i64 rows, i64 cols and row-major f64 values.
void save_checkpoint(const std::filesystem::path& path, const ag::ParamStore& store, const std::string& config_text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every tensor into the store; names and shapes must match exactly.
void apply_checkpoint(const Checkpoint& ckpt, ag::ParamStore& store);

}  // namespace utopya
