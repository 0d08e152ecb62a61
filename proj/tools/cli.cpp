// Copyright 2026 The hoi-relparse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "hoi/checkpoint.hpp"
#include "hoi/config.hpp"
#include "hoi/errors.hpp"
#include "hoi/evaluation.hpp"
#include "hoi/fusion.hpp"
#include "hoi/io.hpp"
#include "hoi/synth.hpp"
#include "hoi/training.hpp"

namespace hoi::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--set", c.sets, "Override a config key, e.g. --set train.iterations=500");
  cmd->add_option("--seed", c.seed, "Seed for data, model and training");
  cmd->add_option("--out", c.out, "Output directory");
}

RunConfig resolve(const Common& c) {
  std::vector<std::string> sets = c.sets;
  if (c.seed) {
    for (const char* key : {"synth.seed", "model.seed", "train.seed"}) {
      sets.push_back(std::string(key) + "=" + std::to_string(*c.seed));
    }
  }
  if (!c.out.empty()) sets.push_back("paths.out=\"" + c.out + "\"");
  std::optional<fs::path> file;
  if (!c.config.empty()) file = c.config;
  return load_run_config(file, sets);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory '" + dir.string() + "'");
}

std::pair<int, int> parse_pair(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const int h = std::stoi(text.substr(0, colon), &a);
    const int o = std::stoi(text.substr(colon + 1), &b);
    if (a != colon || b != text.size() - colon - 1) throw std::invalid_argument(text);
    return {h, o};
  } catch (const std::exception&) {
    throw ConfigError("--dump-attention expects HUMAN_ID:OBJECT_ID, got '" + text + "'");
  }
}

std::size_t appearance_width(std::span<const Scene> scenes, std::size_t fallback) {
  for (const auto& s : scenes) {
    if (!s.humans.empty()) return s.humans.front().appearance.size();
    if (!s.objects.empty()) return s.objects.front().appearance.size();
  }
  return fallback;
}

// Rejects scenes whose vocabulary or feature width the model cannot score.
void check_compatible(std::span<const Scene> scenes, const Model& model) {
  const auto& kb = model.knowledge();
  for (const auto& s : scenes) {
    validate_scene(s, model.config().appearance_dim);
    for (const auto& o : s.objects) {
      if (o.class_id >= kb.num_object_classes()) {
        throw DataError("scene " + std::to_string(s.scene_id) + " uses object class " +
                        std::to_string(o.class_id) + " but the checkpoint has " +
                        std::to_string(kb.num_object_classes()) + " classes");
      }
    }
    for (const auto& g : s.gt_triplets) {
      if (g.verb >= kb.num_verbs() || g.object_class >= kb.num_object_classes()) {
        throw DataError("scene " + std::to_string(s.scene_id) + " has a ground-truth triplet outside the checkpoint's vocabulary (V=" +
                        std::to_string(kb.num_verbs()) + ", O=" + std::to_string(kb.num_object_classes()) + ")");
      }
    }
  }
}

bool detection_order(const ScoredTriplet& a, const ScoredTriplet& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.scene_id, a.human_id, a.object_id, a.verb) <
         std::tie(b.scene_id, b.human_id, b.object_id, b.verb);
}

int cmd_generate(const Common& common, std::ostream& out) {
  const RunConfig config = resolve(common);
  const SyntheticDataset data = generate_dataset(config.synth);
  ensure_dir(config.out_dir);
  write_scenes(config.out_dir / "train.jsonl", data.train);
  write_scenes(config.out_dir / "val.jsonl", data.val);
  write_scenes(config.out_dir / "test.jsonl", data.test);
  write_knowledge(config.out_dir / "knowledge.json", data.world.kb);
  write_text(config.out_dir / "config.json", run_config_to_json(config) + "\n");
  out << "wrote " << data.train.size() << " train, " << data.val.size() << " val, " << data.test.size()
      << " test scenes to " << config.out_dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const Common& common, const std::string& data_dir, const std::string& resume,
              std::ostream& out) {
  RunConfig config = resolve(common);
  std::vector<Scene> train_scenes, val_scenes;
  KnowledgeBase kb;
  if (!data_dir.empty()) {
    const fs::path dir = data_dir;
    config.data_dir = dir;
    kb = read_knowledge(dir / "knowledge.json");
    train_scenes = read_scenes(dir / "train.jsonl");
    if (fs::exists(dir / "val.jsonl")) val_scenes = read_scenes(dir / "val.jsonl");
    config.model.appearance_dim = appearance_width(train_scenes, config.model.appearance_dim);
  } else {
    SyntheticDataset data = generate_dataset(config.synth);
    kb = data.world.kb;
    train_scenes = std::move(data.train);
    val_scenes = std::move(data.val);
  }
  if (train_scenes.empty()) throw DataError("training set is empty");

  std::optional<Model> model;
  std::optional<SgdOptimizer> optimizer;
  std::size_t start = 0;
  if (!resume.empty()) {
    const Checkpoint ck = load_checkpoint(resume);
    Model fresh(config.model, kb, config.model_seed);
    restore_parameters(fresh, ck);
    model.emplace(std::move(fresh));
    optimizer = optimizer_from_checkpoint(ck);
    start = ck.iteration;
    if (start >= config.train.iterations) {
      throw ConfigError("checkpoint is already at iteration " + std::to_string(start) +
                        ", nothing left of " + std::to_string(config.train.iterations));
    }
  } else {
    model.emplace(config.model, kb, config.model_seed);
  }
  if (!optimizer) optimizer.emplace(config.train.learning_rate, config.train.momentum, config.train.weight_decay);
  check_compatible(train_scenes, *model);
  check_compatible(val_scenes, *model);

  ensure_dir(config.out_dir);
  const fs::path metrics_path = config.out_dir / "metrics.csv";
  const bool append = start > 0 && fs::exists(metrics_path);
  std::ofstream metrics(metrics_path, append ? std::ios::app : std::ios::trunc);
  if (!metrics) throw DataError("cannot write '" + metrics_path.string() + "'");
  if (!append) metrics << metrics_csv_header() << "\n";

  TrainHooks hooks;
  hooks.on_log = [&](const MetricsRow& row) {
    metrics << metrics_csv_row(row) << "\n";
    metrics.flush();
    char line[160];
    std::snprintf(line, sizeof line, "iter %6zu  loss %.6f  (int %.4f  s_c %.4f  s_r %.4f)  lr %g\n",
                  row.iteration, row.loss, row.interactiveness_loss, row.s_c_loss, row.s_r_loss, row.lr);
    out << line;
  };
  hooks.on_best = [&](std::size_t iteration, double val) {
    save_checkpoint(config.out_dir / "best.ckpt", *model, &*optimizer, iteration, config.synth.seed);
    out << "validation loss " << val << " at iteration " << iteration << " (best so far)\n";
  };
  const TrainResult result =
      train(*model, *optimizer, train_scenes, val_scenes, config.train, start, hooks);
  save_checkpoint(config.out_dir / "final.ckpt", *model, &*optimizer, result.iteration, config.synth.seed);
  write_text(config.out_dir / "config.json", run_config_to_json(config) + "\n");
  const MetricsRow final_loss = dataset_loss(*model, train_scenes, config.train.thresholds);
  char line[128];
  std::snprintf(line, sizeof line, "final training loss %.6f after %zu iterations\n", final_loss.loss,
                result.iteration);
  out << line;
  if (!val_scenes.empty()) {
    std::snprintf(line, sizeof line, "validation loss %.17g\n",
                  dataset_loss(*model, val_scenes, config.train.thresholds).loss);
    out << line;
  }
  return kExitOk;
}

InferenceConfig inference_config(const RunConfig& config, std::optional<double> t_human,
                                 std::optional<double> t_object, std::optional<double> suppression) {
  InferenceConfig inf = config.inference;
  if (t_human) inf.thresholds.human = *t_human;
  if (t_object) inf.thresholds.object = *t_object;
  if (suppression) inf.suppression_threshold = *suppression;
  for (double v : {inf.thresholds.human, inf.thresholds.object, inf.suppression_threshold}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("thresholds must lie in [0, 1]");
  }
  return inf;
}

int cmd_eval(const Common& common, const std::string& checkpoint, const std::string& scenes_path,
             const std::string& detections_path, std::ostream& out) {
  const RunConfig config = resolve(common);
  if (scenes_path.empty()) throw ConfigError("eval needs --scenes");
  if (checkpoint.empty() == detections_path.empty()) {
    throw ConfigError("eval needs exactly one of --checkpoint and --detections");
  }
  const std::vector<Scene> scenes = read_scenes(scenes_path);
  std::vector<ScoredTriplet> detections;
  if (!detections_path.empty()) {
    detections = read_detections(detections_path);
  } else {
    const Model model = model_from_checkpoint(load_checkpoint(checkpoint));
    check_compatible(scenes, model);
    for (const auto& s : scenes) {
      auto r = detect(s, model, config.inference);
      detections.insert(detections.end(), r.triplets.begin(), r.triplets.end());
    }
  }
  const ApReport report = evaluate_detections(std::move(detections), scenes);
  out << format_report(report);
  if (!common.out.empty()) {
    ensure_dir(config.out_dir);
    write_text(config.out_dir / "report.json", report_to_json(report) + "\n");
  }
  return kExitOk;
}

int cmd_infer(const Common& common, const std::string& checkpoint, const std::string& scenes_path,
              std::optional<double> t_human, std::optional<double> t_object,
              std::optional<double> suppression, const std::string& dump, std::ostream& out) {
  const RunConfig config = resolve(common);
  const InferenceConfig inf = inference_config(config, t_human, t_object, suppression);
  if (checkpoint.empty() || scenes_path.empty()) throw ConfigError("infer needs --checkpoint and --scenes");
  DetectOptions options;
  if (!dump.empty()) {
    options.dump_pair = parse_pair(dump);
    if (common.out.empty()) throw ConfigError("--dump-attention needs --out for the CSV files");
  }
  const std::vector<Scene> scenes = read_scenes(scenes_path);
  const Model model = model_from_checkpoint(load_checkpoint(checkpoint));
  check_compatible(scenes, model);

  std::vector<ScoredTriplet> all;
  std::map<std::pair<int, std::size_t>, std::string> dumps;  // (scene, layer) -> csv body
  for (const auto& s : scenes) {
    const DetectResult r = detect(s, model, inf, options);
    all.insert(all.end(), r.triplets.begin(), r.triplets.end());
    for (const auto& rec : r.attention_dump) {
      char line[128];
      std::snprintf(line, sizeof line, "%d,%zu,%d,%.17g\n", rec.verb, rec.head, rec.instance_id, rec.weight);
      dumps[{s.scene_id, rec.layer}] += line;
    }
  }
  std::stable_sort(all.begin(), all.end(), detection_order);
  if (common.out.empty()) {
    for (const auto& t : all) out << triplet_to_json(t) << "\n";
    return kExitOk;
  }
  ensure_dir(config.out_dir);
  write_detections(config.out_dir / "detections.jsonl", all);
  out << "wrote " << all.size() << " detections to " << (config.out_dir / "detections.jsonl").string() << "\n";
  if (options.dump_pair) {
    if (dumps.empty()) {
      out << "pair " << dump << " produced no decoder attention (not proposed, suppressed, or no decoder layers)\n";
    }
    for (const auto& [key, body] : dumps) {
      const fs::path file = config.out_dir / ("attention_scene" + std::to_string(key.first) + "_h" +
                                              std::to_string(options.dump_pair->first) + "_o" +
                                              std::to_string(options.dump_pair->second) + "_layer" +
                                              std::to_string(key.second) + ".csv");
      write_text(file, "verb,head,instance_id,attention_weight\n" + body);
      out << "wrote " << file.string() << "\n";
    }
  }
  return kExitOk;
}

int cmd_inspect(const std::string& checkpoint, std::ostream& out) {
  if (checkpoint.empty()) throw ConfigError("inspect needs --checkpoint");
  const Checkpoint ck = load_checkpoint(checkpoint);
  const ModelConfig& c = ck.config;
  char line[256];
  std::snprintf(line, sizeof line, "format version %u, checksum %08x\n", ck.version, ck.checksum);
  out << line;
  out << "encoder_layers " << c.encoder_layers << "\ndecoder_layers " << c.decoder_layers << "\nmodel_dim "
      << c.model_dim << "\nheads " << c.heads << "\nnum_verbs " << ck.kb.num_verbs()
      << "\nnum_object_classes " << ck.kb.num_object_classes() << "\nappearance_dim " << c.appearance_dim
      << "\nhidden_dim " << c.hidden_dim << "\nknowledge_augmentation "
      << (c.knowledge_augmentation ? "on" : "off") << "\niteration " << ck.iteration << "\nmodel_seed "
      << ck.model_seed << "\ndata_seed " << ck.data_seed << "\n";
  std::size_t total = 0;
  for (const auto& [name, t] : ck.tensors) {
    out << "tensor " << name << " " << shape_string(t.shape()) << "\n";
    total += t.numel();
  }
  out << "optimizer state " << (ck.optimizer ? "present" : "absent") << "\n";
  out << "parameter count " << total << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Human-object interaction relation parsing: data, training, inference and evaluation"};
  app.require_subcommand(1);

  Common common;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset and its knowledge base");
  add_common(generate, common);

  auto* train = app.add_subcommand("train", "Train a model and write checkpoints and metrics");
  add_common(train, common);
  std::string data_dir, resume;
  train->add_option("--data", data_dir, "Dataset directory from 'generate' (default: synthesize in memory)");
  train->add_option("--resume", resume, "Checkpoint to continue from");

  auto* eval = app.add_subcommand("eval", "Report role AP per verb and mAP");
  add_common(eval, common);
  std::string checkpoint, scenes, detections;
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint");
  eval->add_option("--scenes", scenes, "Scene file with ground truth");
  eval->add_option("--detections", detections, "Evaluate a detection file instead of running a model");

  auto* infer = app.add_subcommand("infer", "Detect interactions and write JSON-lines triplets");
  add_common(infer, common);
  std::optional<double> t_human, t_object, suppression;
  std::string dump;
  infer->add_option("--checkpoint", checkpoint, "Model checkpoint");
  infer->add_option("--scenes", scenes, "Scene file");
  infer->add_option("--t-human", t_human, "Human detection score threshold");
  infer->add_option("--t-object", t_object, "Object detection score threshold");
  infer->add_option("--suppression-threshold", suppression, "Interactiveness threshold");
  infer->add_option("--dump-attention", dump, "Write decoder attention CSVs for pair HUMAN_ID:OBJECT_ID");

  auto* inspect = app.add_subcommand("inspect", "List checkpoint hyperparameters and tensors");
  inspect->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (generate->parsed()) return cmd_generate(common, out);
    if (train->parsed()) return cmd_train(common, data_dir, resume, out);
    if (eval->parsed()) return cmd_eval(common, checkpoint, scenes, detections, out);
    if (infer->parsed()) {
      return cmd_infer(common, checkpoint, scenes, t_human, t_object, suppression, dump, out);
    }
    if (inspect->parsed()) return cmd_inspect(checkpoint, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}

}  // namespace hoi::cli
