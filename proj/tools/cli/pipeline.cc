// Copyright 2026 The SSV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ssv/cli/cli.h"
#include "ssv/error.h"
#include "stages.h"

namespace ssv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Settings the driver applies on top of the per-stage defaults so the whole
// run fits on a single laptop core. Values from a user config win.
json desk_overrides() {
  return {
      {"ae", {{"epochs", 100}, {"learning_rate", 1.0}, {"neighbor_k", 9}}},
      {"double",
       {{"profile", "tiny"},
        {"learning_rate", 1e-3},
        {"epochs", 6},
        {"max_samples_per_epoch", 256}}},
      {"triple",
       {{"profile", "tiny"},
        {"learning_rate", 1e-3},
        {"epochs", 6},
        {"max_samples_per_epoch", 192}}},
  };
}

json merge_sections(json base, const json& patch) {
  for (const auto& [section, values] : patch.items()) {
    if (values.is_object() && base.contains(section) && base[section].is_object()) {
      for (const auto& [k, v] : values.items()) base[section][k] = v;
    } else {
      base[section] = values;
    }
  }
  return base;
}

struct Step {
  std::string label;
  std::vector<std::string> args;
};

std::vector<Step> plan(const fs::path& w, const json& p, const std::string& config,
                       std::uint64_t seed, std::size_t threads) {
  auto P = [&](const std::string& rel) { return (w / rel).string(); };
  const std::vector<std::string> common{"--config", config, "--seed", std::to_string(seed),
                                        "--threads", std::to_string(threads)};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), common.begin(), common.end());
    return a;
  };
  const std::size_t train_spk = p.at("train_speakers");
  const std::size_t eval_first = p.at("heldout_speakers").get<bool>() ? train_spk : 0;
  std::vector<Step> s;
  s.push_back({"synthesize training corpus",
               with({"synth-corpus", "--out", P("corpus/train"), "--speakers",
                     std::to_string(train_spk), "--utts", p.at("train_utts").dump(), "--trials", "0"})});
  s.push_back({"synthesize evaluation corpus",
               with({"synth-corpus", "--out", P("corpus/eval"), "--speakers",
                     p.at("eval_speakers").dump(), "--first-speaker", std::to_string(eval_first),
                     "--utts", p.at("eval_utts").dump(), "--first-utt",
                     p.at("heldout_speakers").get<bool>() ? "0" : p.at("train_utts").dump(),
                     "--trials", p.at("trials").dump(), "--trial-lists", "val", "test"})});
  s.push_back({"featurize training corpus",
               with({"featurize", "--manifest", P("corpus/train/manifest.jsonl"), "--out",
                     P("features/train")})});
  s.push_back({"featurize evaluation corpus",
               with({"featurize", "--manifest", P("corpus/eval/manifest.jsonl"), "--out",
                     P("features/eval")})});
  s.push_back({"mine pairs and triplets",
               with({"mine", "--vectors", P("corpus/train/vectors.jsonl"), "--manifest",
                     P("corpus/train/manifest.jsonl"), "--out", P("mining")})});
  s.push_back({"train autoencoder (System-1)",
               with({"train-ae", "--vectors", P("corpus/train/vectors.jsonl"), "--out",
                     P("models/ae.ckpt")})});
  s.push_back({"extract ae-vectors",
               with({"extract-ae", "--model", P("models/ae.ckpt"), "--vectors",
                     P("corpus/eval/vectors.jsonl"), "--out", P("vectors/eval_ae.jsonl")})});
  s.push_back({"train double-branch model (System-2)",
               with({"train-double", "--pairs", P("mining/pairs.txt"), "--features",
                     P("features/train"), "--out", P("models/double.ckpt")})});
  s.push_back({"train triple-branch model (System-3)",
               with({"train-triple", "--triplets", P("mining/triplets.txt"), "--features",
                     P("features/train"), "--out", P("models/triple.ckpt")})});
  s.push_back({"extract triple-branch embeddings",
               with({"extract-embeddings", "--model", P("models/triple.ckpt"), "--features",
                     P("features/eval"), "--manifest", P("corpus/eval/manifest.jsonl"), "--out",
                     P("vectors/eval_triple.jsonl")})});
  for (const std::string split : {"val", "test"}) {
    const auto trials = P("corpus/eval/" + split + ".trials.txt");
    s.push_back({"score System-1 on " + split,
                 with({"score", "--trials", trials, "--vectors", P("vectors/eval_ae.jsonl"),
                       "--name", "system1", "--out", P("scores/system1." + split + ".txt")})});
    s.push_back({"score System-2 on " + split,
                 with({"score", "--trials", trials, "--double-model", P("models/double.ckpt"),
                       "--features", P("features/eval"), "--name", "system2", "--out",
                       P("scores/system2." + split + ".txt")})});
    s.push_back({"score System-3 on " + split,
                 with({"score", "--trials", trials, "--vectors", P("vectors/eval_triple.jsonl"),
                       "--name", "system3", "--out", P("scores/system3." + split + ".txt")})});
  }
  s.push_back({"tune fusion weights on val",
               with({"tune-fusion", "--trials", P("corpus/eval/val.trials.txt"), "--s1",
                     P("scores/system1.val.txt"), "--s2", P("scores/system2.val.txt"), "--s3",
                     P("scores/system3.val.txt"), "--out", P("fusion/tuning.json")})});
  for (const std::string split : {"val", "test"}) {
    s.push_back({"fuse " + split,
                 with({"fuse", "--s1", P("scores/system1." + split + ".txt"), "--s2",
                       P("scores/system2." + split + ".txt"), "--s3",
                       P("scores/system3." + split + ".txt"), "--weights", P("fusion/tuning.json"),
                       "--out", P("scores/fusion." + split + ".txt")})});
  }
  for (const std::string split : {"val", "test"}) {
    for (const std::string sys : {"system1", "system2", "system3", "fusion"}) {
      s.push_back({"evaluate " + sys + " on " + split,
                   with({"evaluate", "--trials", P("corpus/eval/" + split + ".trials.txt"),
                         "--scores", P("scores/" + sys + "." + split + ".txt"), "--name", sys,
                         "--out", P("metrics/" + sys + "." + split + ".json")})});
    }
  }
  return s;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read", p.string());
  return json::parse(in);
}

void run_pipeline(const Globals& g, const PipelineOptions& opt, std::ostream& err) {
  if (opt.out_dir.empty()) throw ContractViolation("pipeline needs --out");
  const fs::path w = opt.out_dir;
  const json merged = merge_sections(merge_sections(default_config(), desk_overrides()), g.file_config);
  const json& p = merged.at("pipeline");
  for (const auto& [k, v] : p.items()) {
    if (!default_config().at("pipeline").contains(k)) {
      throw ContractViolation("config: unknown key 'pipeline." + k + "'");
    }
  }
  const auto config_path = (w / "pipeline.config.json").string();
  const auto steps = plan(w, p, config_path, g.seed, g.threads);

  if (opt.dry_run) {
    *g.out << "pipeline plan (" << steps.size() << " steps, nothing written):\n";
    for (std::size_t i = 0; i < steps.size(); ++i) {
      *g.out << std::setw(3) << i + 1 << ". " << steps[i].label << "\n     ssv";
      for (const auto& a : steps[i].args) *g.out << " " << a;
      *g.out << "\n";
    }
    return;
  }

  fs::create_directories(w);
  write_json(config_path, merged);
  StageRun run("pipeline", g, merged);
  run.input(config_path);
  const auto start = std::chrono::steady_clock::now();
  json timings = json::array();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream sink;
    const int rc = cli::run(steps[i].args, sink, err);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rc != kExitOk) {
      err << "pipeline: step " << i + 1 << " (" << steps[i].label << ") failed with exit code "
          << rc << "\n";
      throw StageFailed(rc);
    }
    timings.push_back({{"step", steps[i].label}, {"seconds", secs}});
    *g.out << "[" << std::fixed << std::setprecision(1)
           << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
           << "s] " << steps[i].label << " (" << secs << "s)\n";
    *g.out << std::defaultfloat;
  }

  const std::pair<const char*, const char*> systems[] = {{"system1", "System-1 (ae-vectors)"},
                                                         {"system2", "System-2 (double-branch)"},
                                                         {"system3", "System-3 (triple-branch)"},
                                                         {"fusion", "Fusion"}};
  json rows = json::array();
  for (const auto& [key, label] : systems) {
    rows.push_back({{"system", key},
                    {"label", label},
                    {"val", read_json(w / "metrics" / (std::string(key) + ".val.json"))},
                    {"test", read_json(w / "metrics" / (std::string(key) + ".test.json"))}});
  }
  const auto tuning = read_json(w / "fusion" / "tuning.json");
  const auto dbl = read_json(w / "models" / "double.ckpt.report.json");
  const auto tri = read_json(w / "models" / "triple.ckpt.report.json");
  const auto ae = read_json(w / "models" / "ae.ckpt.report.json");
  const json metrics = {{"rows", rows},
                        {"fusion_weights", tuning.at("best")},
                        {"double_final_bce", dbl.at("counters").at("final_loss")},
                        {"triple_final_loss", tri.at("counters").at("final_loss")},
                        {"ae_loss_ratio", ae.at("counters").value("loss_ratio", 0.0)}};
  const auto metrics_path = (w / "metrics.json").string();
  write_json(metrics_path, metrics);
  run.artifact(metrics_path);
  run.counters() = {{"steps", timings}};
  run.finish(report_path_for_dir(w.string(), "pipeline"));

  *g.out << "\n" << std::left << std::setw(28) << "system" << std::setw(12) << "val EER"
         << std::setw(12) << "test EER" << "test minDCF\n";
  for (const auto& r : rows) {
    *g.out << std::setw(28) << r.at("label").get<std::string>() << std::setw(12)
           << r.at("val").at("eer").get<double>() << std::setw(12)
           << r.at("test").at("eer").get<double>() << r.at("test").at("min_dcf").get<double>()
           << "\n";
  }
}

}  // namespace

StageCommand register_pipeline(CLI::App& app, Globals& g, std::ostream& err) {
  auto opt = std::make_shared<PipelineOptions>();
  CLI::App* sc = app.add_subcommand("pipeline", "Run every stage end to end on a synthetic corpus");
  sc->add_option("--out", opt->out_dir, "work directory")->required();
  sc->add_flag("--dry-run", opt->dry_run, "print the stage plan without writing anything");
  return {sc, [&g, opt, &err] { run_pipeline(g, *opt, err); }};
}

}  // namespace ssv::cli
