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

#include <cmath>

#include <gtest/gtest.h>

#include "ssv/error.h"
#include "ssv/nncore/losses.h"
#include "ssv/siamese/encoder.h"
#include "ssv/siamese/grad_suite.h"
#include "ssv/siamese/models.h"
#include "ssv/siamese/training.h"
#include "test_util.h"

namespace ssv::siamese {
namespace {

using ssv::testing::random_tensor;

TEST(Encoder, FullProfileShapes) {
  const Encoder enc(EncoderProfile::full(), 1);
  Encoder::Trace t;
  const auto out = enc.forward(random_tensor({80, 350}, 2, 1.0), &t);
  const nn::Shape blocks[3] = {{128, 80, 350}, {256, 40, 175}, {512, 20, 87}};
  const nn::Shape pooled[3] = {{128, 40, 175}, {256, 20, 87}, {512, 10, 43}};
  for (int b = 0; b < 3; ++b) {
    EXPECT_EQ(t.pool_in[b].shape(), blocks[b]);
    EXPECT_EQ(t.pool_out[b].shape(), pooled[b]);
  }
  EXPECT_EQ(t.sap_in.shape(), (nn::Shape{5120, 43}));
  EXPECT_EQ(t.sap.output.shape(), (nn::Shape{5120}));
  EXPECT_EQ(t.fc1_out.shape(), (nn::Shape{1024}));
  EXPECT_EQ(out.shape(), (nn::Shape{400}));
  for (double v : out.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Encoder, RejectsBadInput) {
  const Encoder enc(EncoderProfile::tiny(8), 1);
  EXPECT_THROW(enc.forward(random_tensor({9, 40}, 1, 1.0)), ShapeError);
  EXPECT_THROW(enc.forward(random_tensor({8, kMinFrames - 1}, 1, 1.0)), ShapeError);
  EXPECT_NO_THROW(enc.forward(random_tensor({8, kMinFrames}, 1, 1.0)));
}

TEST(Encoder, VariableLengthAndDeterministicInit) {
  const Encoder a(EncoderProfile::tiny(16), 3), b(EncoderProfile::tiny(16), 3);
  for (std::size_t len : {8u, 31u, 100u}) {
    const auto x = random_tensor({16, len}, len, 1.0);
    EXPECT_EQ(a.forward(x), b.forward(x));
    EXPECT_EQ(a.forward(x).size(), EncoderProfile::tiny(16).embedding_dim);
  }
  const Encoder c(EncoderProfile::tiny(16), 4);
  const auto x = random_tensor({16, 20}, 9, 1.0);
  EXPECT_NE(a.forward(x), c.forward(x));
}

TEST(Profile, JsonRoundTripAndValidation) {
  const auto p = EncoderProfile::tiny(80);
  const auto q = EncoderProfile::from_json(p.to_json());
  EXPECT_EQ(q.name, p.name);
  EXPECT_EQ(q.channels, p.channels);
  EXPECT_EQ(q.frame_dim(), p.frame_dim());
  EXPECT_EQ(EncoderProfile::full().frame_dim(), 5120u);
  auto bad = p;
  bad.mel_bins = 4;
  EXPECT_THROW(bad.validate(), ContractViolation);
  EXPECT_THROW(EncoderProfile::by_name("huge", 80), ContractViolation);
}

TEST(DoubleBranch, InitialScoreIsHalf) {
  const DoubleBranchModel m(EncoderProfile::full(), 5);
  const auto a = random_tensor({80, 350}, 6, 1.0), b = random_tensor({80, 350}, 7, 1.0);
  const double s = m.forward(a, b);
  EXPECT_DOUBLE_EQ(s, 0.5);
  EXPECT_NEAR(nn::bce_loss(s, 1), std::log(2.0), 1e-12);
  EXPECT_NEAR(nn::bce_loss(s, 0), std::log(2.0), 1e-12);
}

TEST(DoubleBranch, ScoreInUnitInterval) {
  const DoubleBranchModel m(EncoderProfile::tiny(8), 5, false);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double v = m.forward(random_tensor({8, 20}, s, 3.0), random_tensor({8, 30}, s + 9, 3.0));
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(TripleBranch, EmbeddingIsUnitAndLossHinge) {
  TripleBranchModel m(EncoderProfile::tiny(8), 5, 0.2);
  const auto a = random_tensor({8, 20}, 1, 1.0), c = random_tensor({8, 20}, 2, 1.0),
             i = random_tensor({8, 20}, 3, 1.0);
  const auto e = m.embed(a);
  double n = 0;
  for (double v : e.data()) n += v * v;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_NEAR(m.loss(a, a, i), std::max(0.0, 0.2 - [&] {
                const auto ei = m.embed(i);
                double d = 0;
                for (std::size_t k = 0; k < e.size(); ++k) d += (e[k] - ei[k]) * (e[k] - ei[k]);
                return d;
              }()),
              1e-12);
  EXPECT_GE(m.loss(a, c, i), 0.0);
  EXPECT_THROW(TripleBranchModel(EncoderProfile::tiny(8), 0, -0.1), ContractViolation);
}

TEST(GradSuite, AllCasesWithinTolerance) {
  const auto cases = run_grad_suite();
  ASSERT_GE(cases.size(), 15u);
  for (const auto& c : cases) {
    EXPECT_LT(c.max_relative_error, 1e-3) << c.name;
    EXPECT_GT(c.coordinates, 0u) << c.name;
  }
}

// Eight speakers; each utterance is its speaker's pattern plus noise.
struct ToyData {
  FeatureStore store;
  std::vector<std::string> ids;
  std::map<std::string, int> speaker;
};

ToyData toy_data(std::size_t bins, std::size_t frames) {
  ToyData d;
  for (int s = 0; s < 4; ++s) {
    const auto pattern = random_tensor({bins, 1}, 100 + s, 2.0);
    for (int u = 0; u < 3; ++u) {
      auto x = random_tensor({bins, frames + 10 * u}, 1000 + 10 * s + u, 0.3);
      for (std::size_t b = 0; b < bins; ++b)
        for (std::size_t f = 0; f < x.dim(1); ++f) x.at(b, f) += pattern[b];
      const std::string id = "s" + std::to_string(s) + "u" + std::to_string(u);
      d.store.add(id, x);
      d.ids.push_back(id);
      d.speaker[id] = s;
    }
  }
  return d;
}

SiameseTrainConfig small_config() {
  SiameseTrainConfig c;
  c.optimizer.learning_rate = 3e-3;
  c.optimizer.batch_size = 4;
  c.epochs = 4;
  c.crop = 16;
  c.seed = 9;
  return c;
}

TEST(Training, DoubleBranchIsDeterministicAndLearns) {
  const auto d = toy_data(8, 24);
  std::vector<vs::LabeledPair> pairs;
  for (const auto& a : d.ids)
    for (const auto& b : d.ids)
      if (a < b) pairs.push_back({a, b, d.speaker.at(a) == d.speaker.at(b) ? 1 : 0});
  auto cfg = small_config();
  cfg.epochs = 8;
  DoubleBranchModel m1(EncoderProfile::tiny(8), 1), m2(EncoderProfile::tiny(8), 1);
  const auto h1 = train_double(m1, pairs, d.store, cfg);
  const auto h2 = train_double(m2, pairs, d.store, cfg);
  ASSERT_EQ(h1.loss.size(), 8u);
  EXPECT_EQ(h1.loss, h2.loss);
  EXPECT_NEAR(h1.loss.front(), std::log(2.0), 0.05);
  EXPECT_LT(h1.loss.back(), h1.loss.front());
  std::vector<std::pair<std::string, std::string>> q{{"s0u0", "s0u1"}, {"s1u0", "s2u0"}};
  EXPECT_EQ(double_branch_scores(m1, d.store, q), double_branch_scores(m2, d.store, q, 2));
}

TEST(Training, TripleBranchRecordsActiveFraction) {
  const auto d = toy_data(8, 24);
  std::vector<vs::Triplet> triplets;
  for (int s = 0; s < 4; ++s)
    for (int u = 0; u < 3; ++u) {
      const auto a = "s" + std::to_string(s) + "u" + std::to_string(u);
      const auto c = "s" + std::to_string(s) + "u" + std::to_string((u + 1) % 3);
      const auto i = "s" + std::to_string((s + 1) % 4) + "u" + std::to_string(u);
      triplets.push_back({a, c, i});
    }
  auto cfg = small_config();
  cfg.margin = 0.5;
  cfg.max_samples_per_epoch = 8;
  TripleBranchModel m1(EncoderProfile::tiny(8), 2), m2(EncoderProfile::tiny(8), 2);
  const auto h1 = train_triple(m1, triplets, d.store, cfg);
  const auto h2 = train_triple(m2, triplets, d.store, cfg);
  EXPECT_EQ(h1.loss, h2.loss);
  ASSERT_EQ(h1.active_fraction.size(), 4u);
  for (double f : h1.active_fraction) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  EXPECT_EQ(m1.margin(), 0.5);
  const auto e1 = extract_embeddings(m1, d.store, d.ids), e2 = extract_embeddings(m2, d.store, d.ids, 3);
  EXPECT_EQ(e1, e2);
  ASSERT_EQ(e1.size(), d.ids.size());
  EXPECT_EQ(e1[5].id, d.ids[5]);
}

TEST(Training, ConfigValidationAndJson) {
  auto c = small_config();
  c.crop = kMinFrames - 1;
  EXPECT_THROW(c.validate(), ContractViolation);
  c = small_config();
  c.max_samples_per_epoch = 17;
  const auto back = SiameseTrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  FeatureStore s;
  EXPECT_THROW(s.get("nope"), ContractViolation);
  EXPECT_EQ(FeatureStore::path_for("/x", "a"), "/x/a.mspc");
  EXPECT_THROW(FeatureStore::load("/nonexistent", {"a"}), IoError);
}

TEST(Training, ShortUtterancesArePadded) {
  const auto x = random_tensor({8, 3}, 1, 1.0);
  const auto p = inference_input(x);
  EXPECT_GE(p.dim(1), kMinFrames);
  EXPECT_EQ(p.at(2, 4), x.at(2, 1));
}

TEST(Checkpoint, ModelsRoundTrip) {
  ssv::testing::TempDir dir("models");
  const DoubleBranchModel d(EncoderProfile::tiny(8), 3, false);
  save_double(dir.file("d.ckpt"), d, {{"epochs", 1}});
  const auto d2 = load_double(dir.file("d.ckpt"));
  const auto a = random_tensor({8, 20}, 1, 1.0), b = random_tensor({8, 22}, 2, 1.0);
  EXPECT_EQ(d.forward(a, b), d2.forward(a, b));
  const TripleBranchModel t(EncoderProfile::tiny(8), 4, 0.3);
  save_triple(dir.file("t.ckpt"), t);
  const auto t2 = load_triple(dir.file("t.ckpt"));
  EXPECT_EQ(t.embed(a), t2.embed(a));
  EXPECT_EQ(t2.margin(), 0.3);
  EXPECT_THROW(load_triple(dir.file("d.ckpt")), Error);
}

}  // namespace
}  // namespace ssv::siamese
