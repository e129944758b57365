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
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "ssv/autoencoder/autoencoder.h"
#include "ssv/error.h"
#include "ssv/features/corpus.h"
#include "test_util.h"

namespace ssv::ae {
namespace {

vs::VectorSet clustered(std::size_t clusters, std::size_t per, std::size_t dim, double sigma,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  vs::VectorSet out;
  for (std::size_t c = 0; c < clusters; ++c) {
    std::vector<double> centre(dim);
    for (auto& x : centre) x = g(rng);
    for (std::size_t u = 0; u < per; ++u) {
      vs::SpeakerVector v{"c" + std::to_string(c) + "-" + std::to_string(u), centre};
      for (auto& x : v.values) x += sigma * g(rng);
      out.push_back(std::move(v));
    }
  }
  return out;
}

TEST(TrainingPairs, NearestNeighbourOracle) {
  const vs::VectorSet v = {{"p", {1, 0}}, {"q", {0.9, 0.1}}, {"r", {0, 1}}};
  const auto pairs = build_training_pairs(v, 1);
  ASSERT_EQ(pairs.size(), 3u);
  for (const auto& p : pairs) {
    const auto want = oracle::top_k(v[p.input], v, 1, true)[0].id;
    EXPECT_EQ(v[p.target].id, want);
    EXPECT_NE(p.input, p.target);
  }
}

TEST(TrainingPairs, CountIsKTimesN) {
  const auto v = clustered(4, 5, 6, 0.2, 1);
  EXPECT_EQ(build_training_pairs(v, 15).size(), 15u * 20u);
  EXPECT_THROW(build_training_pairs(v, 20), ContractViolation);
}

TEST(TrainingPairs, DuplicateVectorsPointAtEachOther) {
  const vs::VectorSet v = {{"a", {1, 2, 3}}, {"b", {1, 2, 3}}, {"c", {-3, 1, 0}}};
  const auto pairs = build_training_pairs(v, 1);
  EXPECT_EQ(pairs[0], (AEPair{0, 1}));
  EXPECT_EQ(pairs[1], (AEPair{1, 0}));
  EXPECT_EQ(v[pairs[0].target].values, v[0].values);
}

TEST(AEModel, DefaultArchitecture) {
  AEModel m;
  EXPECT_EQ(m.layer_sizes(), (std::vector<std::size_t>{400, 300, 200, 300, 400}));
  EXPECT_EQ(m.num_layers(), 4u);
  EXPECT_EQ(nn::parameter_count(m.params()), 400u * 300 + 300 + 300 * 200 + 200 + 200 * 300 +
                                                 300 + 300 * 400 + 400);
}

TEST(AEModel, UntrainedForwardIsFinite) {
  AEModel m({20, 15, 10, 15, 20}, 3);
  const auto x = ssv::testing::random_tensor({7, 20}, 4, 100.0);
  EXPECT_TRUE(m.forward(x).all_finite());
}

TEST(AETrain, IdentityTargetsAreLearned) {
  const auto v = clustered(10, 1, 20, 0.0, 5);
  std::vector<AEPair> pairs;
  for (std::size_t i = 0; i < v.size(); ++i) pairs.push_back({i, i});
  AETrainConfig c;
  c.layer_sizes = {20, 32, 32, 32, 20};
  c.epochs = 3000;
  c.optimizer.learning_rate = 0.05;
  c.optimizer.lr_decay = 0.0;
  c.optimizer.batch_size = 10;
  c.seed = 2;
  const auto r = train_ae(v, pairs, c);
  EXPECT_LT(r.loss_history.back(), 0.01 * r.loss_history.front());
  const auto out = extract_ae_vectors(r.model, v);
  for (std::size_t i = 0; i < v.size(); ++i) {
    double se = 0.0;
    for (std::size_t d = 0; d < 20; ++d) se += std::pow(out[i].values[d] - v[i].values[d], 2);
    EXPECT_LT(se / 20.0, 0.01);
  }
}

TEST(AETrain, ClusteredLossHalves) {
  const auto v = clustered(10, 10, 400, 0.1, 6);
  AETrainConfig c;
  c.neighbor_k = 5;
  c.seed = 3;
  const auto r = train_ae(v, build_training_pairs(v, c.neighbor_k), c);
  ASSERT_EQ(r.loss_history.size(), 100u);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
  EXPECT_LT(r.loss_history.back(), 0.5 * r.loss_history.front());
}

TEST(AETrain, ZeroLearningRateLeavesModelUnchanged) {
  const vs::VectorSet v = {{"a", {1, 0, 0}}, {"b", {0, 1, 0}}};
  AETrainConfig c;
  c.layer_sizes = {3, 4, 2, 4, 3};
  c.epochs = 1;
  c.optimizer.learning_rate = 0.0;
  const AEModel initial(c.layer_sizes, c.seed);
  const auto r = train_ae(v, {{0, 1}}, c);
  const auto after = r.model.params();
  const auto before = initial.params();
  for (std::size_t i = 0; i < after.size(); ++i) EXPECT_EQ(after[i]->value, before[i]->value);
  c.epochs = 3;
  const auto r3 = train_ae(v, {{0, 1}}, c);
  EXPECT_EQ(r3.loss_history[0], r3.loss_history[2]);
}

TEST(AETrain, DeterministicHistories) {
  const auto v = clustered(5, 6, 30, 0.3, 7);
  AETrainConfig c;
  c.layer_sizes = {30, 20, 10, 20, 30};
  c.epochs = 5;
  c.neighbor_k = 3;
  c.seed = 8;
  const auto pairs = build_training_pairs(v, 3);
  const auto a = train_ae(v, pairs, c), b = train_ae(v, pairs, c);
  EXPECT_EQ(a.loss_history, b.loss_history);
  c.seed = 9;
  EXPECT_NE(train_ae(v, pairs, c).loss_history, a.loss_history);
}

TEST(AETrain, DivergenceIsReported) {
  const auto v = clustered(3, 4, 10, 0.3, 10);
  AETrainConfig c;
  c.layer_sizes = {10, 8, 6, 8, 10};
  c.optimizer.learning_rate = 1e6;
  c.neighbor_k = 2;
  try {
    train_ae(v, build_training_pairs(v, 2), c);
    FAIL() << "expected divergence";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Extract, ZeroWeightsGiveBias) {
  AEModel m({4, 3, 2, 3, 4}, 1);
  for (auto* p : m.params()) p->value.fill(0.0);
  for (std::size_t i = 0; i < 4; ++i) m.bias(3).value[i] = 0.25 * static_cast<double>(i + 1);
  const auto out = extract_ae_vectors(m, {{"x", {5, -1, 2, 7}}, {"y", {0, 0, 1, 0}}});
  for (const auto& v : out) EXPECT_EQ(v.values, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
}

TEST(Extract, OrderAndDimensionPreserved) {
  AEModel m;
  const auto v = clustered(10, 10, 400, 0.5, 11);
  const auto out = extract_ae_vectors(m, v, 3);
  ASSERT_EQ(out.size(), 100u);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(out[i].id, v[i].id);
    EXPECT_EQ(out[i].values.size(), 400u);
  }
  EXPECT_THROW(extract_ae_vectors(m, {{"bad", {1, 2}}}), ShapeError);
}

TEST(AEModelFile, RoundTrip) {
  ssv::testing::TempDir dir("ae");
  AEModel m({6, 5, 4, 5, 6}, 12);
  save_ae_model(dir.file("ae.ssvm"), m, {0.5, 0.25});
  const AEModel back = load_ae_model(dir.file("ae.ssvm"));
  EXPECT_EQ(back.layer_sizes(), m.layer_sizes());
  const auto x = ssv::testing::random_tensor({6}, 13);
  EXPECT_EQ(back.forward(x), m.forward(x));
}

}  // namespace
}  // namespace ssv::ae
