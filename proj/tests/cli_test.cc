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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "ssv/cli/cli.h"
#include "ssv/eval/eval.h"
#include "ssv/features/corpus.h"
#include "ssv/vectorspace/mining.h"
#include "ssv/vectorspace/split.h"
#include "test_util.h"

namespace ssv::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json load(const std::string& path) { return json::parse(slurp(path)); }

// Small labeled corpus written through the CLI.
class CliCorpus : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto r = call({"synth-corpus", "--out", dir.file("corpus"), "--speakers", "6", "--utts",
                         "4", "--duration", "0.3", "--trials", "20", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::string corpus(const std::string& name) { return dir.file("corpus/" + name); }
  ssv::testing::TempDir dir{"cli"};
};

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_F(CliCorpus, SynthWritesArtifactsWithSidecars) {
  EXPECT_TRUE(fs::exists(corpus("manifest.jsonl")));
  EXPECT_TRUE(fs::exists(corpus("wav/spk005-u003.wav")));
  const auto meta = load(corpus("vectors.jsonl.meta.json"));
  EXPECT_EQ(meta.at("seed"), 3);
  EXPECT_EQ(meta.at("sha256"), file_sha256(corpus("vectors.jsonl")));
  EXPECT_EQ(meta.at("config").at("num_speakers"), 6);
  const auto trials = eval::read_trials(corpus("trials.trials.txt"));
  EXPECT_EQ(trials.size(), 20u);
  const auto report = load(corpus("synth-corpus.report.json"));
  EXPECT_EQ(report.at("counters").at("utterances"), 24);
  EXPECT_TRUE(report.contains("wall_seconds"));
}

TEST_F(CliCorpus, MineMatchesLibrary) {
  const auto r = call({"mine", "--vectors", corpus("vectors.jsonl"), "--manifest",
                       corpus("manifest.jsonl"), "--out", dir.file("mine"), "--k", "5",
                       "--client-threshold", "0.5", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto vectors = vs::read_vectors(corpus("vectors.jsonl"));
  const auto manifest = feat::read_manifest(corpus("manifest.jsonl"));
  const auto split = vs::split_subsets(feat::utterance_infos(manifest), 0.5, 3);
  vs::MiningConfig mc;
  mc.k = 5;
  mc.client_threshold = 0.5;
  const auto a = vs::select_vectors(vectors, split.subset_a),
             b = vs::select_vectors(vectors, split.subset_b);
  const auto lib = vs::build_pairs_and_triplets(vs::mine_all(a, b, mc), mc);
  EXPECT_EQ(vs::read_pairs(dir.file("mine/pairs.txt")), lib.pairs);
  EXPECT_EQ(vs::read_triplets(dir.file("mine/triplets.txt")), lib.triplets);
  const auto report = load(dir.file("mine/mine.report.json")).at("counters");
  EXPECT_EQ(report.at("positive_pairs"), lib.counts.positive_pairs);
  EXPECT_EQ(report.at("triplets"), lib.counts.triplets);
  EXPECT_TRUE(report.contains("purity"));
  // Client lists agree with a brute-force ranking of subset A.
  std::size_t positives = 0;
  for (const auto& anchor : a) positives += oracle::clients(anchor, a, 5, 0.5).size();
  EXPECT_EQ(report.at("positive_pairs"), positives);
}

TEST_F(CliCorpus, EvaluateMatchesOracle) {
  const auto trials = eval::read_trials(corpus("trials.trials.txt"));
  ASSERT_EQ(call({"score", "--trials", corpus("trials.trials.txt"), "--vectors",
                  corpus("vectors.jsonl"), "--out", dir.file("s.txt")})
                .code,
            0);
  const auto r = call({"evaluate", "--trials", corpus("trials.trials.txt"), "--scores",
                       dir.file("s.txt"), "--out", dir.file("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto vectors = vs::read_vectors(corpus("vectors.jsonl"));
  std::map<std::string, std::vector<double>> by_id;
  for (const auto& v : vectors) by_id[v.id] = v.values;
  std::vector<double> tgt, non;
  for (const auto& t : trials) {
    // Scores go through the "%.6f" file format.
    const double s = std::stod(eval::format_scores(eval::ScoreSet{
        "", {t}, {oracle::cosine(by_id[t.enroll_id], by_id[t.test_id])}}).substr(
        t.enroll_id.size() + t.test_id.size() + 2));
    (*t.label ? tgt : non).push_back(s);
  }
  const auto m = load(dir.file("m.json"));
  EXPECT_NEAR(m.at("eer").get<double>(), oracle::eer(tgt, non), 1e-9);
  EXPECT_NEAR(m.at("min_dcf").get<double>(), oracle::min_dcf(tgt, non, 0.05, 1, 1), 1e-9);
  EXPECT_NE(r.out.find("\"eer\""), std::string::npos);
}

TEST_F(CliCorpus, RerunsAreBitwiseIdentical) {
  for (const char* out : {"m1", "m2"}) {
    ASSERT_EQ(call({"mine", "--vectors", corpus("vectors.jsonl"), "--manifest",
                    corpus("manifest.jsonl"), "--out", dir.file(out), "--seed", "9"})
                  .code,
              0);
  }
  for (const char* f : {"pairs.txt", "triplets.txt", "split.json", "pairs.txt.meta.json"}) {
    EXPECT_EQ(slurp(dir.file(std::string("m1/") + f)), slurp(dir.file(std::string("m2/") + f))) << f;
  }
  ASSERT_EQ(call({"synth-corpus", "--out", dir.file("corpus2"), "--speakers", "6", "--utts", "4",
                  "--duration", "0.3", "--trials", "20", "--seed", "3"})
                .code,
            0);
  for (const char* f : {"vectors.jsonl", "manifest.jsonl.meta.json", "trials.trials.txt"}) {
    EXPECT_EQ(file_sha256(corpus(f)), file_sha256(dir.file(std::string("corpus2/") + f))) << f;
  }
}

TEST_F(CliCorpus, FeaturizeWritesIndex) {
  const auto r = call({"featurize", "--manifest", corpus("manifest.jsonl"), "--out",
                       dir.file("feat"), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto index = load(dir.file("feat/index.json"));
  ASSERT_EQ(index.at("utterances").size(), 24u);
  // 0.3 s at 16 kHz: 1 + (4800 - 400) / 160 frames.
  EXPECT_EQ(index.at("utterances")[0].at("frames"), 28);
  EXPECT_TRUE(fs::exists(dir.file("feat/spk000-u000.mspc")));
}

TEST_F(CliCorpus, MissingInputExitsTwo) {
  const auto r = call({"mine", "--vectors", dir.file("nope.jsonl"), "--manifest",
                       corpus("manifest.jsonl"), "--out", dir.file("m")});
  EXPECT_EQ(r.code, kExitMissingInput);
  EXPECT_NE(r.err.find("nope.jsonl"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.file("m")));
  EXPECT_EQ(call({"evaluate", "--trials", dir.file("none.txt"), "--scores", dir.file("s.txt")}).code,
            kExitMissingInput);
}

TEST_F(CliCorpus, ValidationFailureExitsThree) {
  EXPECT_EQ(call({"mine", "--vectors", corpus("vectors.jsonl"), "--manifest",
                  corpus("manifest.jsonl"), "--out", dir.file("m"), "--client-threshold", "1.5"})
                .code,
            kExitInvalid);
  EXPECT_EQ(call({"mine", "--vectors", corpus("vectors.jsonl"), "--manifest",
                  corpus("manifest.jsonl"), "--out", dir.file("m"), "--impostor-rule", "bogus"})
                .code,
            kExitInvalid);
  EXPECT_EQ(call({"no-such-command"}).code, kExitInvalid);
  EXPECT_EQ(call({"mine", "--vectors", corpus("vectors.jsonl")}).code, kExitInvalid);
  {
    std::ofstream f(dir.file("bad.json"));
    f << R"({"mining": {"kk": 3}})";
  }
  EXPECT_EQ(call({"mine", "--config", dir.file("bad.json"), "--vectors", corpus("vectors.jsonl"),
                  "--manifest", corpus("manifest.jsonl"), "--out", dir.file("m")})
                .code,
            kExitInvalid);
  {
    std::ofstream f(dir.file("broken.json"));
    f << "{ not json";
  }
  EXPECT_EQ(call({"gradcheck", "--config", dir.file("broken.json")}).code, kExitInvalid);
}

TEST_F(CliCorpus, FlagsOverrideConfigAndEnvOverridesSeed) {
  {
    std::ofstream f(dir.file("c.json"));
    f << R"({"seed": 4, "mining": {"k": 3, "client_threshold": 0.2}})";
  }
  auto mine = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> a{"mine", "--config", dir.file("c.json"), "--vectors",
                               corpus("vectors.jsonl"), "--manifest", corpus("manifest.jsonl"),
                               "--out", dir.file(out)};
    a.insert(a.end(), extra.begin(), extra.end());
    return call(a);
  };
  ASSERT_EQ(mine("a", {"--k", "5"}).code, 0);
  auto meta = load(dir.file("a/pairs.txt.meta.json"));
  EXPECT_EQ(meta.at("config").at("k"), 5);
  EXPECT_EQ(meta.at("config").at("client_threshold"), 0.2);
  EXPECT_EQ(meta.at("seed"), 4);
  ::setenv("SSV_SEED", "11", 1);
  ASSERT_EQ(mine("b", {}).code, 0);
  EXPECT_EQ(load(dir.file("b/pairs.txt.meta.json")).at("seed"), 11);
  ASSERT_EQ(mine("c", {"--seed", "12"}).code, 0);
  EXPECT_EQ(load(dir.file("c/pairs.txt.meta.json")).at("seed"), 12);
  ::setenv("SSV_SEED", "x", 1);
  EXPECT_EQ(mine("d", {}).code, kExitInvalid);
  ::unsetenv("SSV_SEED");
}

TEST_F(CliCorpus, FuseAndTuneFusion) {
  const auto trials = corpus("trials.trials.txt");
  ASSERT_EQ(call({"score", "--trials", trials, "--vectors", corpus("vectors.jsonl"), "--out",
                  dir.file("s1.txt")})
                .code,
            0);
  const auto r = call({"tune-fusion", "--trials", trials, "--s1", dir.file("s1.txt"), "--s2",
                       dir.file("s1.txt"), "--s3", dir.file("s1.txt"), "--out", dir.file("t.json"),
                       "--grid-step", "0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = load(dir.file("t.json"));
  EXPECT_EQ(t.at("surface").size(), 121u);
  ASSERT_EQ(call({"fuse", "--s1", dir.file("s1.txt"), "--s2", dir.file("s1.txt"), "--s3",
                  dir.file("s1.txt"), "--weights", dir.file("t.json"), "--out", dir.file("f.txt")})
                .code,
            0);
  // Equal inputs fuse to themselves.
  EXPECT_EQ(slurp(dir.file("f.txt")), slurp(dir.file("s1.txt")));
  EXPECT_EQ(call({"fuse", "--s1", dir.file("s1.txt"), "--s2", dir.file("s1.txt"), "--s3",
                  dir.file("s1.txt"), "--alpha", "2", "--out", dir.file("g.txt")})
                .code,
            kExitInvalid);
}

TEST(CliPipeline, DryRunWritesNothing) {
  ssv::testing::TempDir dir("dry");
  const auto r = call({"pipeline", "--out", dir.file("w"), "--dry-run"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("train-triple"), std::string::npos);
  EXPECT_NE(r.out.find("tune-fusion"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.file("w")));
}

TEST(CliHelp, HelpExitsZero) {
  const auto r = call({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("featurize"), std::string::npos);
}

}  // namespace
}  // namespace ssv::cli
