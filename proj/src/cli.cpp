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

#include "utopya/cli.hpp"

#include "utopya/checkpoint.hpp"
#include "utopya/io.hpp"
#include "utopya/pipeline.hpp"
#include "utopya/report.hpp"
#include "utopya/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>

namespace utopya {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Manifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  json inputs = json::object();
  json outputs = json::object();
  json extra = json::object();
};

void write_manifest(const Manifest& m, const fs::path& out, std::chrono::steady_clock::time_point start) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json j;
  j["command"] = m.command;
  j["config_hash"] = io::hex64(m.config_hash);
  j["seed"] = m.seed;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["code_version"] = kVersion;
  j["wall_time_s"] = wall;
  for (auto& [k, v] : m.extra.items()) j[k] = v;
  io::write_text(out / "run_manifest.json", j.dump(2) + "\n");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("UTOPYA_SEED")) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("UTOPYA_SEED is not an unsigned integer");
    return v;
  }
  return 0;
}

struct ConfigFlags {
  std::string config_file;
  std::string modalities;
  bool no_physics = false;
  bool no_curriculum = false;
  bool no_pretrain = false;
  int epochs = 0;
  std::vector<std::string> set;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool model_flags) {
  cmd->add_option("--config", f.config_file, "Key=value config file");
  cmd->add_option("--set", f.set, "Override a config key (key=value)");
  cmd->add_option("--epochs", f.epochs, "Maximum training epochs");
  if (!model_flags) return;
  cmd->add_option("--modalities", f.modalities, "Comma-separated modalities (ts,img,audio,tab,text,mol; gc = mol)");
  cmd->add_flag("--no-physics", f.no_physics, "Disable the physics-informed loss");
  cmd->add_flag("--no-curriculum", f.no_curriculum, "Disable curriculum sampling");
  cmd->add_flag("--no-pretrain", f.no_pretrain, "Skip self-supervised pretraining");
}

RunConfig build_config(const ConfigFlags& f) {
  RunConfig cfg;
  try {
    if (!f.config_file.empty()) cfg = parse_config(io::read_text(f.config_file));
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& s : f.set) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value: " + s);
      kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    apply_overrides(cfg, kv);
    if (!f.modalities.empty()) cfg.model.modalities = parse_modality_list(f.modalities);
  } catch (const ConfigFileError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (f.no_physics) disable_physics(cfg);
  if (f.no_curriculum) cfg.train.use_curriculum = false;
  if (f.no_pretrain) cfg.use_pretrain = false;
  if (f.epochs > 0) {
    cfg.train.max_epochs = f.epochs;
    cfg.baseline.ae.epochs = f.epochs;
    cfg.baseline.lstm.epochs = f.epochs;
  }
  return cfg;
}

bool dir_has_entries(const fs::path& p) { return fs::exists(p) && !fs::is_empty(p); }

void save_scores(const EvalResult& ev, const fs::path& out, bool plots) {
  write_scorecard(ev.card, out);
  write_report(ev.card, out, plots);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Multimodal anomaly detection for batch distillation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::optional<std::uint64_t> seed_flag;
  std::string corpus, split_file, out;

  // gen
  int ops = 6, runs = 4, duration = 1200;
  double anomaly_frac = 0.5;
  bool force = false;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus");
  gen->add_option("--ops", ops, "Operating points")->check(CLI::PositiveNumber);
  gen->add_option("--runs", runs, "Runs per operating point")->check(CLI::PositiveNumber);
  gen->add_option("--anomaly-frac", anomaly_frac, "Fraction of anomalous runs")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--duration", duration, "Run length in seconds");
  gen->add_option("--seed", seed_flag, "Seed (falls back to UTOPYA_SEED)");
  gen->add_option("--out", out, "Output corpus directory")->required();
  gen->add_flag("--force", force, "Overwrite a non-empty output directory");

  // split
  int split_seeds = 5000;
  double r_train = 0.6, r_val = 0.2, r_test = 0.2;
  auto* split = app.add_subcommand("split", "Search a leak-free operating-point split");
  split->add_option("--corpus", corpus, "Corpus directory")->required();
  split->add_option("--out", out, "Output directory")->required();
  split->add_option("--seeds", split_seeds, "Number of shuffles to try")->check(CLI::PositiveNumber);
  split->add_option("--train", r_train, "Train ratio");
  split->add_option("--val", r_val, "Validation ratio");
  split->add_option("--test", r_test, "Test ratio");
  split->add_option("--seed", seed_flag, "Base seed");

  ConfigFlags cflags;
  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Self-supervised encoder pretraining");
  pre->add_option("--corpus", corpus, "Corpus directory")->required();
  pre->add_option("--split", split_file, "split.json from the split command")->required();
  pre->add_option("--out", out, "Output directory")->required();
  pre->add_option("--seed", seed_flag, "Seed (falls back to UTOPYA_SEED)");
  add_config_flags(pre, cflags, false);

  // train
  std::string encoder_ckpt;
  auto* train = app.add_subcommand("train", "Train the multimodal model");
  train->add_option("--corpus", corpus, "Corpus directory")->required();
  train->add_option("--split", split_file, "split.json from the split command")->required();
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--seed", seed_flag, "Seed (falls back to UTOPYA_SEED)");
  train->add_option("--encoder", encoder_ckpt, "Pretrained encoder checkpoint");
  add_config_flags(train, cflags, true);

  // eval
  std::string checkpoint, partition = "test";
  std::optional<double> fusion_weight;
  bool tune_on_val = false, three_signal = false, plots = false;
  auto* eval = app.add_subcommand("eval", "Score a partition with a trained checkpoint");
  eval->add_option("--corpus", corpus, "Corpus directory")->required();
  eval->add_option("--split", split_file, "split.json from the split command")->required();
  eval->add_option("--checkpoint", checkpoint, "model.ckpt from train")->required();
  eval->add_option("--out", out, "Output directory")->required();
  eval->add_option("--partition", partition, "Partition to score")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--fusion-weight", fusion_weight)->check(CLI::Range(0.0, 1.0));
  eval->add_flag("--tune-on-val", tune_on_val, "Tune the fusion weight on the validation set");
  eval->add_flag("--three-signal", three_signal, "Fuse reconstruction error as a third signal");
  eval->add_flag("--plots", plots, "Write ROC, PR and histogram images");

  // ablate
  std::string configs = "all";
  auto* ablate = app.add_subcommand("ablate", "Run the modality ablation matrix");
  ablate->add_option("--corpus", corpus, "Corpus directory")->required();
  ablate->add_option("--split", split_file, "split.json from the split command")->required();
  ablate->add_option("--out", out, "Output directory")->required();
  ablate->add_option("--seed", seed_flag, "Seed (falls back to UTOPYA_SEED)");
  ablate->add_option("--configs", configs, "Comma-separated config names or 'all'");
  add_config_flags(ablate, cflags, true);

  // baseline
  std::string method;
  auto* base = app.add_subcommand("baseline", "Train and score a baseline detector");
  base->add_option("--method", method)->required()->check(CLI::IsMember({"pca", "iforest", "ae", "lstm"}));
  base->add_option("--corpus", corpus, "Corpus directory")->required();
  base->add_option("--split", split_file, "split.json from the split command")->required();
  base->add_option("--out", out, "Output directory")->required();
  base->add_option("--seed", seed_flag, "Seed (falls back to UTOPYA_SEED)");
  base->add_option("--partition", partition, "Partition to score")->check(CLI::IsMember({"train", "val", "test"}));
  add_config_flags(base, cflags, false);

  // report
  std::string scorecard;
  bool no_plots = false;
  auto* report = app.add_subcommand("report", "Summarise a window scorecard");
  report->add_option("--scorecard", scorecard, "scorecard_windows.csv")->required();
  report->add_option("--out", out, "Output directory")->required();
  report->add_flag("--no-plots", no_plots, "Skip the SVG images");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const fs::path out_dir(out);
    Manifest man;
    man.outputs["root"] = out;

    if (gen->parsed()) {
      const std::uint64_t seed = resolve_seed(seed_flag);
      if (dir_has_entries(out_dir)) {
        if (!force) throw std::runtime_error("output directory is not empty (use --force): " + out);
        fs::remove_all(out_dir);
      }
      sim::CorpusOptions opts;
      opts.duration_s = duration;
      const auto records = sim::generate_corpus(ops, runs, anomaly_frac, seed, opts);
      for (const auto& r : records) write_experiment(r, out_dir / r.id);
      man.command = "gen";
      man.seed = seed;
      man.extra["ops"] = ops;
      man.extra["runs"] = runs;
      man.extra["anomaly_frac"] = anomaly_frac;
      man.extra["duration_s"] = duration;
      man.extra["experiments"] = records.size();
      write_manifest(man, out_dir, start);
      std::cout << "wrote " << records.size() << " experiments to " << out << "\n";
      return kExitOk;
    }

    if (split->parsed()) {
      const std::uint64_t seed = resolve_seed(seed_flag);
      const auto records = load_corpus(corpus);
      SplitRatios ratios{r_train, r_val, r_test};
      const auto s = search_split(records, split_seeds, ratios, seed);
      write_split(s, out_dir / "split.json");
      man.command = "split";
      man.seed = seed;
      man.inputs["corpus"] = corpus;
      man.outputs["split"] = (out_dir / "split.json").string();
      man.extra["chosen_seed"] = s.seed;
      write_manifest(man, out_dir, start);
      std::cout << "split: " << s.train.size() << " train, " << s.val.size() << " val, " << s.test.size()
                << " test experiments\n";
      return kExitOk;
    }

    if (pre->parsed()) {
      const std::uint64_t seed = resolve_seed(seed_flag);
      RunConfig cfg = build_config(cflags);
      if (cflags.epochs > 0) cfg.pretrain.epochs = cflags.epochs;
      const PreparedData data = load_prepared(corpus, split_file);
      const PretrainResult pr = pretrain_encoder(data, cfg, seed);
      ag::ParamStore store;
      for (const auto& [name, value] : pr.weights) store.add(name, value, "encoder");
      save_checkpoint(out_dir / "encoder.ckpt", store, to_text(cfg));
      std::string losses = "epoch,loss\n";
      for (std::size_t e = 0; e < pr.epoch_loss.size(); ++e) {
        losses += std::to_string(e + 1) + ',' + io::format_double(pr.epoch_loss[e]) + '\n';
      }
      io::write_text(out_dir / "pretrain_loss.csv", losses);
      man.command = "pretrain";
      man.seed = seed;
      man.config_hash = config_hash(cfg);
      man.inputs = {{"corpus", corpus}, {"split", split_file}};
      man.outputs["encoder"] = (out_dir / "encoder.ckpt").string();
      write_manifest(man, out_dir, start);
      return kExitOk;
    }

    if (train->parsed()) {
      const std::uint64_t seed = resolve_seed(seed_flag);
      RunConfig cfg = build_config(cflags);
      cfg.train.seed = seed;
      const PreparedData data = load_prepared(corpus, split_file);
      std::optional<EncoderWeights> enc;
      if (!encoder_ckpt.empty()) enc = load_checkpoint(encoder_ckpt).tensors;
      TrainedModel tm = train_model(data, cfg, seed, enc ? &*enc : nullptr,
                                    {nullptr, [](const EpochRecord& r) {
                                       std::cout << "epoch " << r.epoch << " loss " << r.train_total << " val_auroc "
                                                 << r.val_auroc << "\n";
                                     }});
      const std::string text = to_text(cfg);
      save_checkpoint(out_dir / "model.ckpt", tm.model->params(), text);
      io::write_text(out_dir / "config.txt", text);
      write_history_csv(tm.history, out_dir / "history.csv");
      man.command = "train";
      man.seed = seed;
      man.config_hash = config_hash(cfg);
      man.inputs = {{"corpus", corpus}, {"split", split_file}};
      if (!encoder_ckpt.empty()) man.inputs["encoder"] = encoder_ckpt;
      man.outputs["checkpoint"] = (out_dir / "model.ckpt").string();
      man.outputs["history"] = (out_dir / "history.csv").string();
      man.extra["best_epoch"] = tm.history.best_epoch;
      man.extra["selection_note"] = tm.history.selection_note;
      try {
        EvalResult ev = evaluate_partition(*tm.model, data, "test", cfg.scoring);
        save_scores(ev, out_dir, false);
        man.outputs["metrics"] = (out_dir / "metrics.csv").string();
      } catch (const DataError& e) {
        man.extra["test_metrics"] = std::string("skipped: ") + e.what();
      }
      write_manifest(man, out_dir, start);
      return kExitOk;
    }

    if (eval->parsed()) {
      const Checkpoint ck = load_checkpoint(checkpoint);
      RunConfig cfg = parse_config(ck.config_text);
      if (fusion_weight) cfg.scoring.fusion_weight = *fusion_weight;
      if (tune_on_val) cfg.scoring.tune_on_val = true;
      if (three_signal) cfg.scoring.three_signal = true;
      const PreparedData data = load_prepared(corpus, split_file);
      Model model(cfg.model, 0);
      apply_checkpoint(ck, model.params());
      EvalResult ev = evaluate_partition(model, data, partition, cfg.scoring);
      save_scores(ev, out_dir, plots);
      man.command = "eval";
      man.seed = cfg.train.seed;
      man.config_hash = ck.config_hash;
      man.inputs = {{"corpus", corpus}, {"split", split_file}, {"checkpoint", checkpoint}};
      man.extra["partition"] = partition;
      man.extra["fusion_weight"] = ev.fusion_weight;
      man.extra["fusion_weight_tuned"] = ev.tuned;
      write_manifest(man, out_dir, start);
      std::cout << "window AUROC " << ev.summary.window_auroc << ", experiment AUROC " << ev.summary.exp_auroc
                << ", multi-signal AUROC " << ev.summary.fused_auroc << "\n";
      return kExitOk;
    }

    if (ablate->parsed()) {
      const std::uint64_t seed = resolve_seed(seed_flag);
      RunConfig cfg = build_config(cflags);
      std::vector<AblationConfig> matrix;
      try {
        matrix = select_ablations(configs);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const PreparedData data = load_prepared(corpus, split_file);
      const auto rows = run_ablation(data, cfg, matrix, seed);
      write_ablation_csv(rows, out_dir / "ablation.csv");
      man.command = "ablate";
      man.seed = seed;
      man.config_hash = config_hash(cfg);
      man.inputs = {{"corpus", corpus}, {"split", split_file}};
      man.outputs["table"] = (out_dir / "ablation.csv").string();
      write_manifest(man, out_dir, start);
      return kExitOk;
    }

    if (base->parsed()) {
      const std::uint64_t seed = resolve_seed(seed_flag);
      RunConfig cfg = build_config(cflags);
      cfg.baseline.seed = seed;
      const PreparedData data = load_prepared(corpus, split_file);
      EvalResult ev = evaluate_baseline(baselines::parse_method(method), data, partition, cfg.baseline);
      save_scores(ev, out_dir, false);
      man.command = "baseline";
      man.seed = seed;
      man.config_hash = config_hash(cfg);
      man.inputs = {{"corpus", corpus}, {"split", split_file}};
      man.extra["method"] = method;
      man.extra["partition"] = partition;
      write_manifest(man, out_dir, start);
      std::cout << method << " window AUROC " << ev.summary.window_auroc << "\n";
      return kExitOk;
    }

    if (report->parsed()) {
      const Scorecard card = read_window_scores(scorecard);
      write_report(card, out_dir, !no_plots);
      man.command = "report";
      man.inputs["scorecard"] = scorecard;
      write_manifest(man, out_dir, start);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace utopya
