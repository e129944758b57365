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

#include "ssv/cli/cli.h"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "common.h"
#include "ssv/autoencoder/autoencoder.h"
#include "ssv/error.h"
#include "ssv/eval/eval.h"
#include "ssv/features/corpus.h"
#include "ssv/features/mel.h"
#include "ssv/siamese/encoder.h"
#include "ssv/siamese/training.h"
#include "ssv/vectorspace/mining.h"
#include "stages.h"

namespace ssv::cli {

using nlohmann::json;

json default_config() {
  const feat::SynthConfig synth;
  const feat::MelParams mel;
  const vs::MiningConfig mining;
  const ae::AETrainConfig ae;
  const eval::DcfParams dcf;
  const eval::FusionWeights fw;
  json siamese = siamese::SiameseTrainConfig{}.to_json();
  siamese.erase("seed");
  siamese["profile"] = "full";
  siamese["mel_bins"] = feat::kMelBins;
  json dbl = siamese;
  dbl.erase("margin");
  dbl["zero_final_layer"] = true;
  return {
      {"seed", 0},
      {"threads", 0},
      {"synth",
       {{"num_speakers", synth.num_speakers},
        {"first_speaker", synth.first_speaker},
        {"utts_per_speaker", synth.utts_per_speaker},
        {"first_utt", 0},
        {"duration_s", synth.duration_s},
        {"sample_rate", synth.sample_rate},
        {"snr_db", synth.snr_db},
        {"vector_dim", synth.vector_dim},
        {"centroid_scale", synth.centroid_scale},
        {"vector_noise_sigma", synth.vector_noise_sigma},
        {"trials", 0},
        {"trial_lists", {"trials"}}}},
      {"features",
       {{"num_bins", mel.num_bins},
        {"window_ms", mel.window_ms},
        {"hop_ms", mel.hop_ms},
        {"f_min", mel.f_min},
        {"f_max", mel.f_max},
        {"log_floor", mel.log_floor},
        {"mean_normalize", mel.mean_normalize}}},
      {"mining",
       {{"k", mining.k},
        {"client_threshold", mining.client_threshold},
        {"impostor_threshold", mining.impostor_threshold},
        {"impostor_rule", vs::to_string(mining.impostor_rule)},
        {"triplet_rule", vs::to_string(mining.triplet_rule)},
        {"split_fraction", 0.5}}},
      {"ae",
       {{"epochs", ae.epochs},
        {"learning_rate", ae.optimizer.learning_rate},
        {"lr_decay", ae.optimizer.lr_decay},
        {"batch_size", ae.optimizer.batch_size},
        {"neighbor_k", ae.neighbor_k},
        {"length_normalize", ae.length_normalize},
        {"layer_sizes", ae.layer_sizes}}},
      {"double", dbl},
      {"triple", siamese},
      {"eval",
       {{"c_miss", dcf.c_miss},
        {"c_fa", dcf.c_fa},
        {"p_target", dcf.p_target},
        {"alpha", fw.alpha},
        {"beta", fw.beta},
        {"grid_step", 0.01},
        {"min_max_normalize", false}}},
      {"pipeline",
       {{"train_speakers", 20},
        {"train_utts", 10},
        {"eval_speakers", 20},
        {"eval_utts", 8},
        {"heldout_speakers", true},
        {"trials", 200}}},
  };
}

namespace {

std::uint64_t parse_seed(const std::string& s, const char* where) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ContractViolation(std::string(where) + ": seed must be a non-negative integer, got '" +
                            s + "'");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised speaker verification pipeline", "ssv"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.out = &out;
  std::optional<std::string> seed_flag;
  std::optional<std::size_t> threads_flag;
  app.add_option("--config", g.config_path, "JSON config with per-stage sections");
  app.add_option("--seed", seed_flag, "seed (overrides SSV_SEED and the config)");
  app.add_option("--threads", threads_flag, "worker threads (default: all cores)");

  auto cmds = register_stages(app, g);
  cmds.push_back(register_pipeline(app, g, err));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (!g.config_path.empty()) g.file_config = load_config_file(g.config_path);
    const json& fc = g.file_config;
    if (fc.contains("seed")) g.seed = fc.at("seed").get<std::uint64_t>();
    if (const char* env = std::getenv("SSV_SEED"); env && *env) g.seed = parse_seed(env, "SSV_SEED");
    if (seed_flag) g.seed = parse_seed(*seed_flag, "--seed");
    std::size_t threads = fc.value("threads", std::size_t{0});
    if (threads_flag) threads = *threads_flag;
    g.threads = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());

    CLI::App* chosen = app.get_subcommands().front();
    for (auto& c : cmds) {
      if (c.app == chosen) c.action();
    }
    return kExitOk;
  } catch (const StageFailed& e) {
    return e.code();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const ContractViolation& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ShapeError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DegenerateInputError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    err << "invalid: config: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace ssv::cli
