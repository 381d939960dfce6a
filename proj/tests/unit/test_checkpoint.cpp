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
#include "utopya/nn.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>

using namespace utopya;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("utopya_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void fill(ag::ParamStore& store, std::uint64_t seed) {
  ag::Rng rng(seed);
  store.add("a.weight", nn::normal(3, 4, 1.0, rng), "head");
  store.add("b.bias", nn::normal(1, 5, 1.0, rng), "encoder");
}

}  // namespace

TEST_CASE("checkpoint round trip is exact", "[checkpoint]") {
  const auto dir = temp_dir("ckpt_roundtrip");
  ag::ParamStore src;
  fill(src, 1);
  src.at("a.weight").value(0, 0) = 0.1 + 0.2;
  save_checkpoint(dir / "m.ckpt", src, "utopya-config 1\nx=1\n");
  const Checkpoint ck = load_checkpoint(dir / "m.ckpt");
  CHECK(ck.version == kCheckpointVersion);
  CHECK(ck.config_text == "utopya-config 1\nx=1\n");
  CHECK(ck.config_hash == io::fnv1a(ck.config_text));
  REQUIRE(ck.tensors.size() == 2);

  ag::ParamStore dst;
  fill(dst, 2);
  apply_checkpoint(ck, dst);
  CHECK(dst.at("a.weight").value == src.at("a.weight").value);
  CHECK(dst.at("b.bias").value == src.at("b.bias").value);

  save_checkpoint(dir / "again.ckpt", dst, ck.config_text);
  CHECK(io::read_text(dir / "m.ckpt") == io::read_text(dir / "again.ckpt"));
}

TEST_CASE("checkpoint rejects corrupt files", "[checkpoint]") {
  const auto dir = temp_dir("ckpt_corrupt");
  ag::ParamStore src;
  fill(src, 3);
  save_checkpoint(dir / "m.ckpt", src, "cfg");
  const std::string bytes = io::read_text(dir / "m.ckpt");

  io::write_text(dir / "trunc.ckpt", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(dir / "trunc.ckpt"), CheckpointError);

  io::write_text(dir / "extra.ckpt", bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(dir / "extra.ckpt"), CheckpointError);

  std::string magic = bytes;
  magic[0] = 'X';
  io::write_text(dir / "magic.ckpt", magic);
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.ckpt"), CheckpointError);

  std::string text = bytes;
  text[4 + 4 + 8 + 4] = 'C';
  io::write_text(dir / "hash.ckpt", text);
  CHECK_THROWS_AS(load_checkpoint(dir / "hash.ckpt"), CheckpointError);
}

TEST_CASE("checkpoint application is strict", "[checkpoint]") {
  const auto dir = temp_dir("ckpt_strict");
  ag::ParamStore src;
  fill(src, 4);
  save_checkpoint(dir / "m.ckpt", src, "cfg");
  const Checkpoint ck = load_checkpoint(dir / "m.ckpt");

  ag::ParamStore extra;
  fill(extra, 5);
  extra.add("c.weight", ag::Matrix::Zero(2, 2), "head");
  CHECK_THROWS_AS(apply_checkpoint(ck, extra), CheckpointError);

  ag::ParamStore renamed;
  ag::Rng rng(6);
  renamed.add("a.weight", nn::normal(3, 4, 1.0, rng), "head");
  renamed.add("b.gamma", nn::normal(1, 5, 1.0, rng), "encoder");
  CHECK_THROWS_AS(apply_checkpoint(ck, renamed), CheckpointError);

  ag::ParamStore reshaped;
  reshaped.add("a.weight", ag::Matrix::Zero(4, 3), "head");
  reshaped.add("b.bias", ag::Matrix::Zero(1, 5), "encoder");
  CHECK_THROWS_AS(apply_checkpoint(ck, reshaped), CheckpointError);
}
