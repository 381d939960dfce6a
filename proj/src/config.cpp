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

#include "utopya/config.hpp"

#include "utopya/io.hpp"

#include <charconv>
#include <functional>

namespace utopya {

namespace {

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

double to_double(std::string_view key, std::string_view v) {
  try {
    return io::parse_double(v);
  } catch (const std::exception&) {
    throw ConfigFileError("config key " + std::string(key) + ": not a number: " + std::string(v));
  }
}

long long to_int(std::string_view key, std::string_view v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigFileError("config key " + std::string(key) + ": not an integer: " + std::string(v));
  }
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigFileError("config key " + std::string(key) + ": not an unsigned integer: " + std::string(v));
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigFileError("config key " + std::string(key) + ": not a boolean: " + std::string(v));
}

template <class Get>
Field real(std::string key, Get member) {
  return {key, [member](const RunConfig& c) { return io::format_double(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = to_double(key, v); }};
}

template <class Get>
Field integer(std::string key, Get member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, std::string_view v) {
            member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_int(key, v));
          }};
}

template <class Get>
Field unsigned64(std::string key, Get member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = to_u64(key, v); }};
}

template <class Get>
Field flag(std::string key, Get member) {
  return {key, [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "1" : "0"); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = to_bool(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"model.modalities", [](const RunConfig& c) { return mask_to_string(c.model.modalities); },
                 [](RunConfig& c, std::string_view v) {
                   try {
                     c.model.modalities = parse_modality_list(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigFileError(e.what());
                   }
                 }});
    f.push_back(flag("model.use_recon", [](RunConfig& c) -> bool& { return c.model.use_recon; }));
    f.push_back(integer("model.audio_frames", [](RunConfig& c) -> int& { return c.model.audio_frames; }));
    f.push_back(integer("model.tcn.layers", [](RunConfig& c) -> int& { return c.model.tcn.layers; }));
    f.push_back(integer("model.tcn.kernel", [](RunConfig& c) -> int& { return c.model.tcn.kernel; }));
    f.push_back(integer("model.d_model", [](RunConfig& c) -> int& { return c.model.tcn.d_model; }));
    f.push_back(real("model.tcn.dropout", [](RunConfig& c) -> double& { return c.model.tcn.dropout; }));
    f.push_back(real("model.heads.dropout", [](RunConfig& c) -> double& { return c.model.heads.dropout; }));
    f.push_back(integer("model.heads.hidden", [](RunConfig& c) -> int& { return c.model.heads.hidden; }));
    f.push_back(integer("model.heads.class_hidden", [](RunConfig& c) -> int& { return c.model.heads.class_hidden; }));
    f.push_back(integer("model.fusion.heads", [](RunConfig& c) -> int& { return c.model.fusion.heads; }));
    f.push_back(integer("model.fusion.ffn_hidden", [](RunConfig& c) -> int& { return c.model.fusion.ffn_hidden; }));
    f.push_back(real("model.fusion.modality_dropout", [](RunConfig& c) -> double& { return c.model.fusion.modality_dropout; }));

    f.push_back(real("loss.w_pred", [](RunConfig& c) -> double& { return c.model.loss.w_pred; }));
    f.push_back(real("loss.w_class", [](RunConfig& c) -> double& { return c.model.loss.w_class; }));
    f.push_back(real("loss.w_recon", [](RunConfig& c) -> double& { return c.model.loss.w_recon; }));
    f.push_back(real("loss.w_phys", [](RunConfig& c) -> double& { return c.model.loss.w_phys; }));
    f.push_back(real("loss.lambda_smooth", [](RunConfig& c) -> double& { return c.model.loss.lambda_smooth; }));
    f.push_back(real("loss.lambda_mono", [](RunConfig& c) -> double& { return c.model.loss.lambda_mono; }));
    f.push_back(real("loss.focal_gamma", [](RunConfig& c) -> double& { return c.model.loss.focal_gamma; }));
    f.push_back(real("loss.w_plus", [](RunConfig& c) -> double& { return c.model.loss.w_plus; }));
    f.push_back(real("loss.margin", [](RunConfig& c) -> double& { return c.model.loss.margin; }));

    f.push_back(real("train.lr", [](RunConfig& c) -> double& { return c.train.lr; }));
    f.push_back(real("train.weight_decay", [](RunConfig& c) -> double& { return c.train.weight_decay; }));
    f.push_back(real("train.beta1", [](RunConfig& c) -> double& { return c.train.beta1; }));
    f.push_back(real("train.beta2", [](RunConfig& c) -> double& { return c.train.beta2; }));
    f.push_back(real("train.warmup_epochs", [](RunConfig& c) -> double& { return c.train.warmup_epochs; }));
    f.push_back(real("train.t_max", [](RunConfig& c) -> double& { return c.train.t_max; }));
    f.push_back(real("train.lr_min", [](RunConfig& c) -> double& { return c.train.lr_min; }));
    f.push_back(real("train.warmup_start", [](RunConfig& c) -> double& { return c.train.warmup_start; }));
    f.push_back(real("train.clip_norm", [](RunConfig& c) -> double& { return c.train.clip_norm; }));
    f.push_back(integer("train.batch", [](RunConfig& c) -> int& { return c.train.batch; }));
    f.push_back(integer("train.accum", [](RunConfig& c) -> int& { return c.train.accum; }));
    f.push_back(integer("train.patience", [](RunConfig& c) -> int& { return c.train.patience; }));
    f.push_back(real("train.encoder_ft_lr", [](RunConfig& c) -> double& { return c.train.encoder_ft_lr; }));
    f.push_back(integer("train.freeze_epochs", [](RunConfig& c) -> int& { return c.train.freeze_epochs; }));
    f.push_back(integer("train.max_epochs", [](RunConfig& c) -> int& { return c.train.max_epochs; }));
    f.push_back(integer("train.eval_batch", [](RunConfig& c) -> int& { return c.train.eval_batch; }));
    f.push_back(unsigned64("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
    f.push_back(flag("train.curriculum", [](RunConfig& c) -> bool& { return c.train.use_curriculum; }));
    f.push_back(flag("train.augment", [](RunConfig& c) -> bool& { return c.train.use_augment; }));
    f.push_back(flag("train.modality_dropout", [](RunConfig& c) -> bool& { return c.train.use_modality_dropout; }));

    f.push_back(flag("pretrain.enabled", [](RunConfig& c) -> bool& { return c.use_pretrain; }));
    f.push_back(integer("pretrain.epochs", [](RunConfig& c) -> int& { return c.pretrain.epochs; }));
    f.push_back(integer("pretrain.batch", [](RunConfig& c) -> int& { return c.pretrain.batch; }));
    f.push_back(real("pretrain.lr", [](RunConfig& c) -> double& { return c.pretrain.lr; }));
    f.push_back(real("pretrain.mask_ratio", [](RunConfig& c) -> double& { return c.pretrain.mask_ratio; }));
    f.push_back(real("pretrain.temperature", [](RunConfig& c) -> double& { return c.pretrain.temperature; }));
    f.push_back(real("pretrain.contrastive_weight", [](RunConfig& c) -> double& { return c.pretrain.contrastive_weight; }));

    f.push_back(real("score.fusion_weight", [](RunConfig& c) -> double& { return c.scoring.fusion_weight; }));
    f.push_back(flag("score.tune_on_val", [](RunConfig& c) -> bool& { return c.scoring.tune_on_val; }));
    f.push_back(flag("score.three_signal", [](RunConfig& c) -> bool& { return c.scoring.three_signal; }));

    f.push_back(flag("baseline.normal_only", [](RunConfig& c) -> bool& { return c.baseline.normal_only; }));
    f.push_back(integer("baseline.ae_epochs", [](RunConfig& c) -> int& { return c.baseline.ae.epochs; }));
    f.push_back(integer("baseline.lstm_epochs", [](RunConfig& c) -> int& { return c.baseline.lstm.epochs; }));
    f.push_back(integer("baseline.trees", [](RunConfig& c) -> int& { return c.baseline.trees; }));
    return f;
  }();
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigFileError("unknown config key: " + std::string(key));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string to_text(const RunConfig& cfg) {
  std::string out(kConfigHeader);
  out += '\n';
  for (const auto& f : fields()) out += f.key + '=' + f.get(cfg) + '\n';
  return out;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  bool header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kConfigHeader) throw ConfigFileError("config must start with '" + std::string(kConfigHeader) + "'");
      header = true;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigFileError("config line lacks '=': " + std::string(line));
    const std::string_view key = trim(line.substr(0, eq));
    field(key).set(cfg, trim(line.substr(eq + 1)));
  }
  if (!header) throw ConfigFileError("empty config");
  return cfg;
}

void apply_overrides(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) field(k).set(cfg, v);
}

std::uint64_t config_hash(const RunConfig& cfg) { return io::fnv1a(to_text(cfg)); }

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

void disable_physics(RunConfig& cfg) { cfg.model.loss.w_phys = 0.0; }

}  // namespace utopya
