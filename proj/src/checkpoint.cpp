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

#include "utopya/checkpoint.hpp"

#include "utopya/io.hpp"

#include <bit>
#include <cstring>

namespace utopya {

namespace {

constexpr char kMagic[4] = {'U', 'T', 'P', 'Y'};

template <class T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ag::ParamStore& store, const std::string& config_text) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, io::fnv1a(config_text));
  put_string(out, config_text);
  const auto params = store.all();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const ag::Parameter* p : params) {
    put_string(out, p->name);
    put<std::int64_t>(out, p->value.rows());
    put<std::int64_t>(out, p->value.cols());
    for (ag::Index r = 0; r < p->value.rows(); ++r) {
      for (ag::Index c = 0; c < p->value.cols(); ++c) put<double>(out, p->value(r, c));
    }
  }
  io::write_text(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader in(io::read_text(path));
  char magic[4];
  for (char& c : magic) c = in.get<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not a checkpoint: " + path.string());
  Checkpoint ck;
  ck.version = in.get<std::uint32_t>();
  if (ck.version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version");
  ck.config_hash = in.get<std::uint64_t>();
  ck.config_text = in.get_string();
  if (io::fnv1a(ck.config_text) != ck.config_hash) throw CheckpointError("checkpoint config hash mismatch");
  const auto n = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = in.get_string();
    const auto rows = in.get<std::int64_t>();
    const auto cols = in.get<std::int64_t>();
    if (rows < 0 || cols < 0) throw CheckpointError("negative tensor shape");
    ag::Matrix m(rows, cols);
    for (ag::Index r = 0; r < rows; ++r) {
      for (ag::Index c = 0; c < cols; ++c) m(r, c) = in.get<double>();
    }
    ck.tensors.emplace(std::move(name), std::move(m));
  }
  if (!in.done()) throw CheckpointError("trailing bytes in checkpoint");
  return ck;
}

void apply_checkpoint(const Checkpoint& ckpt, ag::ParamStore& store) {
  const auto params = store.all();
  if (params.size() != ckpt.tensors.size()) throw CheckpointError("checkpoint tensor count differs from model");
  for (ag::Parameter* p : params) {
    auto it = ckpt.tensors.find(p->name);
    if (it == ckpt.tensors.end()) throw CheckpointError("checkpoint lacks tensor " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      throw CheckpointError("checkpoint tensor shape differs: " + p->name);
    }
    p->value = it->second;
  }
}

}  // namespace utopya
