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

#include "stages.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <set>

#include "common.h"
#include "ssv/autoencoder/autoencoder.h"
#include "ssv/cli/cli.h"
#include "ssv/error.h"
#include "ssv/eval/eval.h"
#include "ssv/features/corpus.h"
#include "ssv/features/mel.h"
#include "ssv/parallel.h"
#include "ssv/siamese/grad_suite.h"
#include "ssv/siamese/models.h"
#include "ssv/siamese/training.h"
#include "ssv/vectorspace/mining.h"
#include "ssv/vectorspace/split.h"

namespace ssv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

// Section conversions. Every key is present after resolve_section.

feat::SynthConfig synth_from(const json& j, std::uint64_t seed) {
  feat::SynthConfig c;
  c.num_speakers = j.at("num_speakers");
  c.first_speaker = j.at("first_speaker");
  c.utts_per_speaker = j.at("utts_per_speaker");
  c.duration_s = j.at("duration_s");
  c.sample_rate = j.at("sample_rate");
  c.snr_db = j.at("snr_db");
  c.vector_dim = j.at("vector_dim");
  c.centroid_scale = j.at("centroid_scale");
  c.vector_noise_sigma = j.at("vector_noise_sigma");
  c.seed = seed;
  return c;
}

feat::MelParams mel_from(const json& j) {
  feat::MelParams p;
  p.num_bins = j.at("num_bins");
  p.window_ms = j.at("window_ms");
  p.hop_ms = j.at("hop_ms");
  p.f_min = j.at("f_min");
  p.f_max = j.at("f_max");
  p.log_floor = j.at("log_floor");
  p.mean_normalize = j.at("mean_normalize");
  return p;
}

vs::MiningConfig mining_from(const json& j, std::size_t threads) {
  vs::MiningConfig c;
  c.k = j.at("k");
  c.client_threshold = j.at("client_threshold");
  c.impostor_threshold = j.at("impostor_threshold");
  c.impostor_rule = vs::impostor_rule_from_string(j.at("impostor_rule"));
  c.triplet_rule = vs::triplet_rule_from_string(j.at("triplet_rule"));
  c.threads = threads;
  c.validate();
  return c;
}

ae::AETrainConfig ae_from(const json& j, std::uint64_t seed) {
  ae::AETrainConfig c;
  c.epochs = j.at("epochs");
  c.optimizer.learning_rate = j.at("learning_rate");
  c.optimizer.lr_decay = j.at("lr_decay");
  c.optimizer.batch_size = j.at("batch_size");
  c.neighbor_k = j.at("neighbor_k");
  c.length_normalize = j.at("length_normalize");
  c.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  c.seed = seed;
  c.optimizer.validate();
  if (c.neighbor_k == 0) throw ContractViolation("ae.neighbor_k must be positive");
  return c;
}

siamese::SiameseTrainConfig siamese_from(const json& j, std::uint64_t seed) {
  auto c = siamese::SiameseTrainConfig::from_json(j);
  c.seed = seed;
  c.validate();
  return c;
}

siamese::EncoderProfile profile_from(const json& j) {
  return siamese::EncoderProfile::by_name(j.at("profile"), j.at("mel_bins"));
}

eval::DcfParams dcf_from(const json& j) {
  eval::DcfParams p{j.at("c_miss"), j.at("c_fa"), j.at("p_target")};
  p.validate();
  return p;
}

std::vector<std::string> manifest_ids(const feat::Manifest& m) {
  std::vector<std::string> ids;
  for (const auto& e : m) ids.push_back(e.id);
  return ids;
}

std::vector<std::string> pair_ids(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::set<std::string> s;
  for (const auto& [a, b] : pairs) {
    s.insert(a);
    s.insert(b);
  }
  return {s.begin(), s.end()};
}

std::vector<std::pair<std::string, std::string>> trial_pairs(const std::vector<eval::Trial>& t) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& x : t) out.emplace_back(x.enroll_id, x.test_id);
  return out;
}

json history_json(const std::vector<double>& loss) {
  json j = {{"epochs", loss.size()}, {"loss", loss}};
  if (!loss.empty()) {
    j["first_loss"] = loss.front();
    j["final_loss"] = loss.back();
  }
  return j;
}

template <typename T>
void flag(CLI::App* sc, const std::string& name, const std::string& key, json& o,
          const std::string& help) {
  sc->add_option_function<T>(name, [&o, key](const T& v) { o[key] = v; }, help);
}

// Per-subcommand state that outlives argument parsing.
struct Args {
  json overrides = json::object();
  std::map<std::string, std::string> paths;
  std::string name;
  bool flag = false;
};

CLI::App* path_opt(CLI::App* sc, Args& a, const std::string& key, const std::string& help,
                   bool required = true) {
  auto* opt = sc->add_option("--" + key, a.paths[key], help);
  if (required) opt->required();
  return sc;
}

// ---------------------------------------------------------------- stages

void synth_corpus(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "synth", a.overrides);
  const auto sc = synth_from(cfg, g.seed);
  const std::size_t first_utt = cfg.at("first_utt");
  const fs::path out = a.paths.at("out");
  StageRun run("synth-corpus", g, cfg);

  const auto corpus = feat::synth_corpus(sc, first_utt);
  feat::write_corpus(corpus, out.string(), "manifest.jsonl", "vectors.jsonl");
  json wavs = json::object();
  for (const auto& u : corpus) wavs[u.id] = file_sha256(join(out / "wav", u.id + ".wav"));
  run.artifact(join(out, "manifest.jsonl"), {{"wav_sha256", sha256_hex(wavs.dump())}});
  run.artifact(join(out, "vectors.jsonl"));

  const std::size_t n_trials = cfg.at("trials");
  const auto lists = cfg.at("trial_lists").get<std::vector<std::string>>();
  if (n_trials > 0) {
    if (lists.empty() || lists.size() > sc.utts_per_speaker) {
      throw ContractViolation("synth.trial_lists needs 1.." + std::to_string(sc.utts_per_speaker) +
                              " names");
    }
    std::map<std::string, std::string> speaker_of;
    for (const auto& u : corpus) speaker_of[u.id] = u.speaker;
    // List l draws on the l-th contiguous block of each speaker's utterances,
    // so the lists share speakers but no utterances.
    for (std::size_t l = 0; l < lists.size(); ++l) {
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const std::size_t u = i % sc.utts_per_speaker;
        if (u * lists.size() / sc.utts_per_speaker == l) ids.push_back(corpus[i].id);
      }
      const auto trials = eval::make_balanced_trials(ids, speaker_of, n_trials, g.seed + 101 + l);
      const auto path = join(out, lists[l] + ".trials.txt");
      eval::write_trials(path, trials);
      run.artifact(path);
    }
  }
  run.counters() = {{"utterances", corpus.size()},
                    {"speakers", sc.num_speakers},
                    {"trial_lists", n_trials > 0 ? lists.size() : 0},
                    {"trials_per_list", n_trials}};
  run.finish(report_path_for_dir(out.string(), "synth-corpus"));
  *g.out << "wrote " << corpus.size() << " utterances to " << out.string() << "\n";
}

void featurize(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "features", a.overrides);
  const auto params = mel_from(cfg);
  const auto& manifest_path = a.paths.at("manifest");
  require_file(manifest_path);
  const auto manifest = feat::read_manifest(manifest_path);
  for (const auto& e : manifest) require_file(e.path);
  const fs::path out = a.paths.at("out");
  fs::create_directories(out);
  StageRun run("featurize", g, cfg);
  run.input(manifest_path);

  std::vector<std::size_t> frames(manifest.size());
  parallel_for(manifest.size(), g.threads, [&](std::size_t i) {
    const auto audio = feat::read_wav(manifest[i].path);
    const auto spec = feat::mel_spectrogram(audio, params, manifest[i].id);
    feat::write_feature_file(siamese::FeatureStore::path_for(out.string(), manifest[i].id),
                             spec.values);
    frames[i] = spec.frames();
  });
  json index = {{"params", cfg}, {"utterances", json::array()}};
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto path = siamese::FeatureStore::path_for(out.string(), manifest[i].id);
    index["utterances"].push_back(
        {{"id", manifest[i].id}, {"frames", frames[i]}, {"sha256", file_sha256(path)}});
  }
  const auto index_path = join(out, "index.json");
  write_json(index_path, index);
  run.artifact(index_path);
  const auto [lo, hi] = std::minmax_element(frames.begin(), frames.end());
  run.counters() = {{"utterances", manifest.size()},
                    {"min_frames", manifest.empty() ? 0 : *lo},
                    {"max_frames", manifest.empty() ? 0 : *hi}};
  run.finish(report_path_for_dir(out.string(), "featurize"));
  *g.out << "featurized " << manifest.size() << " utterances into " << out.string() << "\n";
}

void mine(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "mining", a.overrides);
  const auto mc = mining_from(cfg, g.threads);
  const auto &vec_path = a.paths.at("vectors"), &manifest_path = a.paths.at("manifest");
  require_file(vec_path);
  require_file(manifest_path);
  const auto vectors = vs::read_vectors(vec_path);
  const auto manifest = feat::read_manifest(manifest_path);
  const fs::path out = a.paths.at("out");
  StageRun run("mine", g, cfg);
  run.input(vec_path);
  run.input(manifest_path);

  const auto infos = feat::utterance_infos(manifest);
  const auto split = vs::split_subsets(infos, cfg.at("split_fraction"), g.seed);
  const auto subset_a = vs::select_vectors(vectors, split.subset_a);
  const auto subset_b = vs::select_vectors(vectors, split.subset_b);
  auto artifacts = vs::build_pairs_and_triplets(vs::mine_all(subset_a, subset_b, mc), mc);

  fs::create_directories(out);
  const auto split_path = join(out, "split.json");
  write_json(split_path, {{"subset_a", split.subset_a}, {"subset_b", split.subset_b}});
  run.artifact(split_path);
  const auto pairs_path = join(out, "pairs.txt"), triplets_path = join(out, "triplets.txt");
  vs::write_pairs(pairs_path, artifacts.pairs);
  run.artifact(pairs_path);
  vs::write_triplets(triplets_path, artifacts.triplets);
  run.artifact(triplets_path);
  json lists = json::array();
  for (const auto& m : artifacts.neighbor_lists) {
    json c = json::array(), i = json::array();
    for (const auto& s : m.clients) c.push_back({s.id, s.score});
    for (const auto& s : m.impostors) i.push_back({s.id, s.score});
    lists.push_back({{"anchor", m.anchor_id}, {"clients", c}, {"impostors", i}});
  }
  const auto lists_path = join(out, "neighbors.json");
  write_json(lists_path, lists);
  run.artifact(lists_path);

  // Ground-truth labels only measure the mined sets; mining never sees them.
  std::optional<vs::PurityStats> stats;
  const auto speakers = feat::speaker_map(manifest);
  if (speakers.size() == manifest.size()) stats = vs::purity(artifacts, speakers);
  run.counters() = vs::mining_report(artifacts, stats);
  run.counters()["subset_a"] = split.subset_a.size();
  run.counters()["subset_b"] = split.subset_b.size();
  run.finish(report_path_for_dir(out.string(), "mine"));
  *g.out << "mined " << artifacts.pairs.size() << " pairs and " << artifacts.triplets.size()
         << " triplets into " << out.string() << "\n";
}

void train_ae(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "ae", a.overrides);
  const auto tc = ae_from(cfg, g.seed);
  const auto& vec_path = a.paths.at("vectors");
  require_file(vec_path);
  const auto vectors = vs::read_vectors(vec_path);
  const auto& out = a.paths.at("out");
  StageRun run("train-ae", g, cfg);
  run.input(vec_path);

  const auto pairs = ae::build_training_pairs(vectors, tc.neighbor_k);
  auto result = ae::train_ae(vectors, pairs, tc);
  ensure_parent_dir(out);
  ae::save_ae_model(out, result.model, result.loss_history);
  run.artifact(out);
  run.counters() = history_json(result.loss_history);
  run.counters()["pairs"] = pairs.size();
  const auto& h = result.loss_history;
  if (!h.empty() && h.front() > 0.0) run.counters()["loss_ratio"] = h.back() / h.front();
  run.finish(report_path_for_file(out));
  *g.out << "trained autoencoder on " << pairs.size() << " pairs, final loss "
         << (h.empty() ? 0.0 : h.back()) << "\n";
}

void extract_ae(const Globals& g, const Args& a) {
  const json cfg = json::object();
  const auto &model_path = a.paths.at("model"), &vec_path = a.paths.at("vectors");
  require_file(model_path);
  require_file(vec_path);
  const auto model = ae::load_ae_model(model_path);
  const auto vectors = vs::read_vectors(vec_path);
  const auto& out = a.paths.at("out");
  StageRun run("extract-ae", g, cfg);
  run.input(model_path);
  run.input(vec_path);
  const auto result = ae::extract_ae_vectors(model, vectors, g.threads);
  ensure_parent_dir(out);
  vs::write_vectors(out, result);
  run.artifact(out);
  run.counters() = {{"vectors", result.size()}};
  run.finish(report_path_for_file(out));
  *g.out << "extracted " << result.size() << " ae-vectors\n";
}

void train_double(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "double", a.overrides);
  const auto tc = siamese_from(cfg, g.seed);
  const auto profile = profile_from(cfg);
  const auto &pairs_path = a.paths.at("pairs"), &feat_dir = a.paths.at("features");
  require_file(pairs_path);
  require_dir(feat_dir);
  const auto pairs = vs::read_pairs(pairs_path);
  std::vector<std::pair<std::string, std::string>> ids;
  for (const auto& p : pairs) ids.emplace_back(p.anchor_id, p.other_id);
  const auto store = siamese::FeatureStore::load(feat_dir, pair_ids(ids));
  const auto& out = a.paths.at("out");
  StageRun run("train-double", g, cfg);
  run.input(pairs_path);
  run.input(join(feat_dir, "index.json"));

  siamese::DoubleBranchModel model(profile, g.seed, cfg.at("zero_final_layer"));
  const auto history = siamese::train_double(model, pairs, store, tc);
  ensure_parent_dir(out);
  siamese::save_double(out, model, cfg);
  run.artifact(out);
  run.counters() = history_json(history.loss);
  run.counters()["pairs"] = pairs.size();
  run.finish(report_path_for_file(out));
  *g.out << "trained double-branch model, final BCE "
         << (history.loss.empty() ? 0.0 : history.loss.back()) << "\n";
}

void train_triple(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "triple", a.overrides);
  const auto tc = siamese_from(cfg, g.seed);
  const auto profile = profile_from(cfg);
  const auto &trip_path = a.paths.at("triplets"), &feat_dir = a.paths.at("features");
  require_file(trip_path);
  require_dir(feat_dir);
  const auto triplets = vs::read_triplets(trip_path);
  std::set<std::string> id_set;
  for (const auto& t : triplets) id_set.insert({t.anchor_id, t.client_id, t.impostor_id});
  const auto store = siamese::FeatureStore::load(feat_dir, {id_set.begin(), id_set.end()});
  const auto& out = a.paths.at("out");
  StageRun run("train-triple", g, cfg);
  run.input(trip_path);
  run.input(join(feat_dir, "index.json"));

  siamese::TripleBranchModel model(profile, g.seed, tc.margin);
  const auto history = siamese::train_triple(model, triplets, store, tc);
  ensure_parent_dir(out);
  siamese::save_triple(out, model, cfg);
  run.artifact(out);
  run.counters() = history_json(history.loss);
  run.counters()["active_fraction"] = history.active_fraction;
  run.counters()["triplets"] = triplets.size();
  run.finish(report_path_for_file(out));
  *g.out << "trained triple-branch model, final loss "
         << (history.loss.empty() ? 0.0 : history.loss.back()) << "\n";
}

void extract_embeddings(const Globals& g, const Args& a) {
  const json cfg = json::object();
  const auto &model_path = a.paths.at("model"), &feat_dir = a.paths.at("features"),
             &manifest_path = a.paths.at("manifest");
  require_file(model_path);
  require_dir(feat_dir);
  require_file(manifest_path);
  const auto model = siamese::load_triple(model_path);
  const auto ids = manifest_ids(feat::read_manifest(manifest_path));
  const auto store = siamese::FeatureStore::load(feat_dir, ids);
  const auto& out = a.paths.at("out");
  StageRun run("extract-embeddings", g, cfg);
  run.input(model_path);
  run.input(manifest_path);
  run.input(join(feat_dir, "index.json"));
  const auto vectors = siamese::extract_embeddings(model, store, ids, g.threads);
  ensure_parent_dir(out);
  vs::write_vectors(out, vectors);
  run.artifact(out);
  run.counters() = {{"embeddings", vectors.size()}, {"dim", model.profile().embedding_dim}};
  run.finish(report_path_for_file(out));
  *g.out << "extracted " << vectors.size() << " embeddings\n";
}

void score(const Globals& g, const Args& a) {
  const auto& trials_path = a.paths.at("trials");
  const auto &vec_path = a.paths.at("vectors"), &model_path = a.paths.at("double-model"),
             &feat_dir = a.paths.at("features");
  if (vec_path.empty() == model_path.empty()) {
    throw ContractViolation("score needs exactly one of --vectors or --double-model");
  }
  require_file(trials_path);
  const auto trials = eval::read_trials(trials_path);
  const auto& out = a.paths.at("out");
  const json cfg = {{"system", a.name}, {"method", vec_path.empty() ? "double-branch" : "cosine"}};
  StageRun run("score", g, cfg);
  run.input(trials_path);
  eval::ScoreSet set;
  if (!vec_path.empty()) {
    require_file(vec_path);
    run.input(vec_path);
    set = eval::score_trials(vs::read_vectors(vec_path), trials, a.name);
  } else {
    require_file(model_path);
    require_dir(feat_dir);
    run.input(model_path);
    run.input(join(feat_dir, "index.json"));
    const auto model = siamese::load_double(model_path);
    const auto pairs = trial_pairs(trials);
    const auto store = siamese::FeatureStore::load(feat_dir, pair_ids(pairs));
    set.system_name = a.name;
    set.trials = trials;
    set.scores = siamese::double_branch_scores(model, store, pairs, g.threads);
  }
  ensure_parent_dir(out);
  eval::write_scores(out, set);
  run.artifact(out);
  run.counters() = {{"trials", set.size()}};
  run.finish(report_path_for_file(out));
  *g.out << "scored " << set.size() << " trials\n";
}

eval::ScoreSet labeled_scores(const std::string& scores_path, const std::string& trials_path,
                              const std::string& name) {
  require_file(scores_path);
  require_file(trials_path);
  return eval::attach_labels(eval::read_scores(scores_path, name), eval::read_trials(trials_path));
}

void evaluate(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "eval", a.overrides);
  const auto params = dcf_from(cfg);
  const auto &trials_path = a.paths.at("trials"), &scores_path = a.paths.at("scores");
  const auto set = labeled_scores(scores_path, trials_path, a.name);
  const std::string out = a.paths.at("out").empty() ? scores_path + ".metrics.json" : a.paths.at("out");
  StageRun run("evaluate", g, cfg);
  run.input(trials_path);
  run.input(scores_path);
  auto metrics = eval::metrics_json(set, params);
  metrics["trials"] = set.size();
  write_json(out, metrics);
  run.artifact(out);
  run.counters() = metrics;
  run.finish(report_path_for_file(out));
  *g.out << metrics.dump() << "\n";
}

void fuse(const Globals& g, const Args& a) {
  json cfg = resolve_section(g, "eval", a.overrides);
  const auto& weights_path = a.paths.at("weights");
  StageRun run("fuse", g, cfg);
  eval::FusionWeights w{cfg.at("alpha"), cfg.at("beta")};
  if (!weights_path.empty()) {
    require_file(weights_path);
    run.input(weights_path);
    const auto j = json::parse(read_text(weights_path));
    w = {j.at("best").at("alpha"), j.at("best").at("beta")};
  }
  w.validate();
  eval::ScoreSet s[3];
  const char* keys[3] = {"s1", "s2", "s3"};
  for (int i = 0; i < 3; ++i) {
    require_file(a.paths.at(keys[i]));
    run.input(a.paths.at(keys[i]));
    s[i] = eval::read_scores(a.paths.at(keys[i]), keys[i]);
  }
  const auto fused = eval::fuse_scores(s[0], s[1], s[2], w, cfg.at("min_max_normalize"));
  const auto& out = a.paths.at("out");
  ensure_parent_dir(out);
  eval::write_scores(out, fused);
  run.artifact(out, {{"alpha", w.alpha}, {"beta", w.beta}});
  run.counters() = {{"trials", fused.size()}, {"alpha", w.alpha}, {"beta", w.beta}};
  run.finish(report_path_for_file(out));
  *g.out << "fused " << fused.size() << " trials with alpha " << w.alpha << " beta " << w.beta
         << "\n";
}

void tune_fusion(const Globals& g, const Args& a) {
  const json cfg = resolve_section(g, "eval", a.overrides);
  const auto params = dcf_from(cfg);
  const auto& trials_path = a.paths.at("trials");
  StageRun run("tune-fusion", g, cfg);
  run.input(trials_path);
  eval::ScoreSet s[3];
  const char* keys[3] = {"s1", "s2", "s3"};
  for (int i = 0; i < 3; ++i) {
    s[i] = labeled_scores(a.paths.at(keys[i]), trials_path, keys[i]);
    run.input(a.paths.at(keys[i]));
  }
  const auto t = eval::tune_fusion(s[0], s[1], s[2], cfg.at("grid_step"), params,
                                   cfg.at("min_max_normalize"), g.threads);
  json surface = json::array();
  for (const auto& p : t.surface) surface.push_back({p.alpha, p.beta, p.eer, p.min_dcf});
  const json result = {{"best", {{"alpha", t.best.alpha}, {"beta", t.best.beta}}},
                       {"eer", t.eer},
                       {"min_dcf", t.min_dcf},
                       {"grid_step", cfg.at("grid_step")},
                       {"surface_columns", {"alpha", "beta", "eer", "min_dcf"}},
                       {"surface", surface}};
  const auto& out = a.paths.at("out");
  write_json(out, result);
  run.artifact(out);
  run.counters() = {{"alpha", t.best.alpha}, {"beta", t.best.beta}, {"eer", t.eer},
                    {"min_dcf", t.min_dcf}, {"cells", t.surface.size()}};
  run.finish(report_path_for_file(out));
  *g.out << "best alpha " << t.best.alpha << " beta " << t.best.beta << " eer " << t.eer << "\n";
}

constexpr double kGradTolerance = 1e-3;

void gradcheck(const Globals& g, const Args& a) {
  const json cfg = {{"tolerance", kGradTolerance}};
  StageRun run("gradcheck", g, cfg);
  siamese::GradSuiteOptions opt;
  opt.seed = g.seed;
  const auto cases = siamese::run_grad_suite(opt);
  json rows = json::array();
  bool ok = true;
  for (const auto& c : cases) {
    const bool pass = c.max_relative_error < kGradTolerance;
    ok = ok && pass;
    rows.push_back({{"name", c.name},
                    {"max_relative_error", c.max_relative_error},
                    {"coordinates", c.coordinates},
                    {"seconds", c.seconds},
                    {"pass", pass}});
    *g.out << (pass ? "ok   " : "FAIL ") << c.name << " " << c.max_relative_error << "\n";
  }
  run.counters() = {{"cases", rows}, {"pass", ok}};
  if (!a.paths.at("out").empty()) {
    fs::create_directories(a.paths.at("out"));
    run.finish(report_path_for_dir(a.paths.at("out"), "gradcheck"));
  }
  if (!ok) throw ContractViolation("gradient check exceeded tolerance " + std::to_string(kGradTolerance));
}

}  // namespace

std::vector<StageCommand> register_stages(CLI::App& app, Globals& g) {
  std::vector<StageCommand> cmds;
  auto add = [&](const std::string& name, const std::string& help, auto&& setup, auto&& body) {
    auto args = std::make_shared<Args>();
    CLI::App* sc = app.add_subcommand(name, help);
    setup(sc, *args);
    cmds.push_back({sc, [&g, args, body] { body(g, *args); }});
  };

  add("synth-corpus", "Write a synthetic labeled corpus (wavs, manifest, vectors, trial lists)",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "out", "output directory");
        flag<std::size_t>(sc, "--speakers", "num_speakers", a.overrides, "number of speakers");
        flag<std::size_t>(sc, "--first-speaker", "first_speaker", a.overrides, "first speaker number");
        flag<std::size_t>(sc, "--utts", "utts_per_speaker", a.overrides, "utterances per speaker");
        flag<std::size_t>(sc, "--first-utt", "first_utt", a.overrides, "first utterance number");
        flag<double>(sc, "--duration", "duration_s", a.overrides, "seconds per utterance");
        flag<double>(sc, "--snr-db", "snr_db", a.overrides, "signal to noise ratio");
        flag<double>(sc, "--centroid-scale", "centroid_scale", a.overrides, "speaker centroid spread");
        flag<double>(sc, "--vector-noise", "vector_noise_sigma", a.overrides, "per-utterance vector noise");
        flag<std::size_t>(sc, "--trials", "trials", a.overrides, "trials per list (0: none)");
        flag<std::vector<std::string>>(sc, "--trial-lists", "trial_lists", a.overrides,
                                       "names of the trial lists");
      },
      synth_corpus);

  add("featurize", "Log-mel spectrograms for every manifest entry",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "manifest", "manifest JSON-lines file");
        path_opt(sc, a, "out", "feature directory");
        flag<std::size_t>(sc, "--mel-bins", "num_bins", a.overrides, "mel bins");
        flag<bool>(sc, "--mean-normalize", "mean_normalize", a.overrides, "subtract per-bin means");
      },
      featurize);

  add("mine", "Mine client/impostor pairs and triplets from speaker vectors",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "vectors", "vector file");
        path_opt(sc, a, "manifest", "manifest used for the subset split");
        path_opt(sc, a, "out", "output directory");
        flag<std::size_t>(sc, "--k", "k", a.overrides, "neighbours per anchor");
        flag<double>(sc, "--client-threshold", "client_threshold", a.overrides, "client cosine threshold");
        flag<double>(sc, "--impostor-threshold", "impostor_threshold", a.overrides,
                     "impostor cosine threshold");
        flag<std::string>(sc, "--impostor-rule", "impostor_rule", a.overrides,
                          "hardest_top_k or top_k_below_threshold");
        flag<std::string>(sc, "--triplet-rule", "triplet_rule", a.overrides,
                          "round_robin or cross_product");
        flag<double>(sc, "--split-fraction", "split_fraction", a.overrides, "share of subset A");
      },
      mine);

  add("train-ae", "Train the nearest-neighbour autoencoder",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "vectors", "training vectors");
        path_opt(sc, a, "out", "model checkpoint");
        flag<std::size_t>(sc, "--epochs", "epochs", a.overrides, "epochs");
        flag<double>(sc, "--lr", "learning_rate", a.overrides, "learning rate");
        flag<std::size_t>(sc, "--batch-size", "batch_size", a.overrides, "mini-batch size");
        flag<std::size_t>(sc, "--neighbor-k", "neighbor_k", a.overrides, "neighbours per vector");
      },
      train_ae);

  add("extract-ae", "Map vectors through a trained autoencoder",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "model", "autoencoder checkpoint");
        path_opt(sc, a, "vectors", "input vectors");
        path_opt(sc, a, "out", "output vectors");
      },
      extract_ae);

  auto siamese_flags = [](CLI::App* sc, Args& a) {
    path_opt(sc, a, "features", "feature directory");
    path_opt(sc, a, "out", "model checkpoint");
    flag<std::string>(sc, "--profile", "profile", a.overrides, "full or tiny");
    flag<std::size_t>(sc, "--mel-bins", "mel_bins", a.overrides, "mel bins of the features");
    flag<std::size_t>(sc, "--epochs", "epochs", a.overrides, "epochs");
    flag<double>(sc, "--lr", "learning_rate", a.overrides, "learning rate");
    flag<std::size_t>(sc, "--batch-size", "batch_size", a.overrides, "mini-batch size");
    flag<std::size_t>(sc, "--crop", "crop", a.overrides, "training crop frames");
    flag<std::size_t>(sc, "--max-samples", "max_samples_per_epoch", a.overrides,
                      "samples drawn per epoch (0: all)");
  };
  add("train-double", "Train the double-branch siamese model with BCE",
      [siamese_flags](CLI::App* sc, Args& a) {
        path_opt(sc, a, "pairs", "mined pairs file");
        siamese_flags(sc, a);
      },
      train_double);
  add("train-triple", "Train the triple-branch siamese model with the triplet loss",
      [siamese_flags](CLI::App* sc, Args& a) {
        path_opt(sc, a, "triplets", "mined triplets file");
        siamese_flags(sc, a);
        flag<double>(sc, "--margin", "margin", a.overrides, "triplet margin");
      },
      train_triple);

  add("extract-embeddings", "Triple-branch embeddings for every manifest entry",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "model", "triple-branch checkpoint");
        path_opt(sc, a, "features", "feature directory");
        path_opt(sc, a, "manifest", "utterances to embed");
        path_opt(sc, a, "out", "output vectors");
      },
      extract_embeddings);

  add("score", "Score a trial list by cosine or with the double-branch model",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "trials", "trial list");
        path_opt(sc, a, "out", "score file");
        path_opt(sc, a, "vectors", "vectors for cosine scoring", false);
        path_opt(sc, a, "double-model", "double-branch checkpoint", false);
        path_opt(sc, a, "features", "feature directory for --double-model", false);
        sc->add_option("--name", a.name, "system name")->default_val("system");
      },
      score);

  add("evaluate", "EER and minDCF of a labeled score file",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "trials", "labeled trial list");
        path_opt(sc, a, "scores", "score file");
        path_opt(sc, a, "out", "metrics JSON (default: <scores>.metrics.json)", false);
        sc->add_option("--name", a.name, "system name")->default_val("system");
        flag<double>(sc, "--p-target", "p_target", a.overrides, "target prior");
        flag<double>(sc, "--c-miss", "c_miss", a.overrides, "miss cost");
        flag<double>(sc, "--c-fa", "c_fa", a.overrides, "false alarm cost");
      },
      evaluate);

  add("fuse", "Weighted score-level fusion of three systems",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "s1", "System-1 scores");
        path_opt(sc, a, "s2", "System-2 scores");
        path_opt(sc, a, "s3", "System-3 scores");
        path_opt(sc, a, "out", "fused score file");
        path_opt(sc, a, "weights", "tune-fusion result to take weights from", false);
        flag<double>(sc, "--alpha", "alpha", a.overrides, "alpha");
        flag<double>(sc, "--beta", "beta", a.overrides, "beta");
      },
      fuse);

  add("tune-fusion", "Grid search of the fusion weights on labeled trials",
      [](CLI::App* sc, Args& a) {
        path_opt(sc, a, "trials", "labeled trial list");
        path_opt(sc, a, "s1", "System-1 scores");
        path_opt(sc, a, "s2", "System-2 scores");
        path_opt(sc, a, "s3", "System-3 scores");
        path_opt(sc, a, "out", "result JSON");
        flag<double>(sc, "--grid-step", "grid_step", a.overrides, "grid step");
      },
      tune_fusion);

  add("gradcheck", "Finite-difference check of every layer and model",
      [](CLI::App* sc, Args& a) { path_opt(sc, a, "out", "report directory", false); },
      gradcheck);
  return cmds;
}

}  // namespace ssv::cli
