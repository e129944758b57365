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
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "ssv/error.h"
#include "ssv/eval/eval.h"
#include "test_util.h"

namespace ssv::eval {
namespace {

struct RandomSet {
  std::vector<double> tgt, non;
};

// Scores drawn on a coarse grid so ties are common.
RandomSet random_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 500), grid(0, 40);
  std::bernoulli_distribution coarse(0.5);
  std::normal_distribution<double> g(0.0, 1.0);
  RandomSet r;
  const int nt = size(rng), nn = size(rng);
  const double shift = std::uniform_real_distribution<double>(-1.0, 3.0)(rng);
  const bool tied = coarse(rng);
  auto draw = [&](double mu) { return tied ? grid(rng) / 10.0 + mu : g(rng) + mu; };
  for (int i = 0; i < nt; ++i) r.tgt.push_back(draw(shift));
  for (int i = 0; i < nn; ++i) r.non.push_back(draw(0.0));
  return r;
}

TEST(Eer, WorkedExample) {
  const auto op = compute_eer({0.9, 0.8, 0.4}, {0.5, 0.3, 0.2});
  EXPECT_NEAR(op.rate, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(oracle::eer({0.9, 0.8, 0.4}, {0.5, 0.3, 0.2}), 1.0 / 3.0, 1e-12);
}

TEST(Eer, PerfectSeparation) {
  const auto op = compute_eer({0.9, 0.8, 0.7}, {0.5, 0.1});
  EXPECT_EQ(op.rate, 0.0);
  const auto r = oracle::rates_at({0.9, 0.8, 0.7}, {0.5, 0.1}, op.threshold);
  EXPECT_EQ(r.p_miss, 0.0);
  EXPECT_EQ(r.p_fa, 0.0);
}

TEST(Eer, NeedsBothClasses) {
  EXPECT_THROW(compute_eer({}, {0.1}), DegenerateInputError);
  EXPECT_THROW(compute_eer({0.1}, {}), DegenerateInputError);
  EXPECT_THROW(compute_min_dcf({0.1}, {}), DegenerateInputError);
}

TEST(Eer, MatchesOracleOnRandomSets) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_set(rng);
    EXPECT_NEAR(compute_eer(s.tgt, s.non).rate, oracle::eer(s.tgt, s.non), 1e-9) << trial;
  }
}

TEST(Eer, NegateAndSwapIsSymmetric) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = random_set(rng);
    std::vector<double> nt, nn;
    for (double x : s.tgt) nn.push_back(-x);
    for (double x : s.non) nt.push_back(-x);
    // Negation turns ">= threshold" into "> threshold"; only tie-free sets are
    // exactly symmetric.
    std::set<double> all(s.tgt.begin(), s.tgt.end());
    all.insert(s.non.begin(), s.non.end());
    if (all.size() != s.tgt.size() + s.non.size()) continue;
    EXPECT_NEAR(compute_eer(s.tgt, s.non).rate, compute_eer(nt, nn).rate, 1e-12);
  }
}

TEST(Eer, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = random_set(rng);
    auto f = [](double x) { return std::exp(0.5 * x) + 3.0; };
    std::vector<double> ft, fn;
    for (double x : s.tgt) ft.push_back(f(x));
    for (double x : s.non) fn.push_back(f(x));
    EXPECT_NEAR(compute_eer(s.tgt, s.non).rate, compute_eer(ft, fn).rate, 1e-12);
    EXPECT_NEAR(compute_min_dcf(s.tgt, s.non).rate, compute_min_dcf(ft, fn).rate, 1e-12);
  }
}

TEST(MinDcf, ExampleMatchesOracle) {
  const std::vector<double> tgt{0.9, 0.4}, non{0.5, 0.1};
  const auto op = compute_min_dcf(tgt, non);
  EXPECT_NEAR(op.rate, oracle::min_dcf(tgt, non, 0.05, 1.0, 1.0), 1e-12);
  // Accepting everything above 0.5 misses one target of two and no
  // nontarget: 0.05 * 0.5 / 0.05 = 0.5.
  EXPECT_NEAR(op.rate, 0.5, 1e-12);
  EXPECT_NEAR(dcf_at(tgt, non, op.threshold), op.rate, 1e-12);
}

TEST(MinDcf, MatchesOracleAndBounds) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> p(0.01, 0.99), c(0.1, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_set(rng);
    const DcfParams params{c(rng), c(rng), p(rng)};
    const auto op = compute_min_dcf(s.tgt, s.non, params);
    EXPECT_NEAR(op.rate, oracle::min_dcf(s.tgt, s.non, params.p_target, params.c_miss, params.c_fa), 1e-9);
    EXPECT_GE(op.rate, 0.0);
    EXPECT_LE(op.rate, 1.0 + 1e-12);
    EXPECT_NEAR(dcf_at(s.tgt, s.non, op.threshold, params), op.rate, 1e-9);
    const auto eer = compute_eer(s.tgt, s.non);
    EXPECT_LE(op.rate, dcf_at(s.tgt, s.non, eer.threshold, params) + 1e-12);
  }
}

TEST(MinDcf, ParamsValidated) {
  EXPECT_THROW((DcfParams{1, 1, 0.0}.validate()), ContractViolation);
  EXPECT_THROW((DcfParams{1, 1, 1.0}.validate()), ContractViolation);
  EXPECT_THROW((DcfParams{-1, 1, 0.5}.validate()), ContractViolation);
  const DcfParams p{2, 3, 0.1};
  const auto q = DcfParams::from_json(p.to_json());
  EXPECT_EQ(q.c_miss, 2);
  EXPECT_EQ(q.c_fa, 3);
  EXPECT_EQ(q.p_target, 0.1);
}

TEST(Fusion, HandValue) {
  EXPECT_NEAR(fuse(0.2, 0.6, 0.4, FusionWeights{0.30, 0.79}), 0.4632, 1e-12);
}

TEST(Fusion, PartitionOfUnityAndCollapse) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0), s(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const FusionWeights w{u(rng), u(rng)};
    const double x = s(rng);
    EXPECT_NEAR(fuse(x, x, x, w), x, 1e-12);
  }
  EXPECT_EQ(fuse(0.3, 0.7, 0.9, {1.0, 1.0}), 0.3);
  EXPECT_EQ(fuse(0.3, 0.7, 0.9, {0.0, 1.0}), 0.7);
  EXPECT_EQ(fuse(0.3, 0.7, 0.9, {0.5, 0.0}), 0.9);
}

TEST(Fusion, OrderPreserving) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0.01, 0.99), s(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const FusionWeights w{u(rng), u(rng)};
    double v[3] = {s(rng), s(rng), s(rng)};
    const double base = fuse(v[0], v[1], v[2], w);
    for (int k = 0; k < 3; ++k) {
      double up[3] = {v[0], v[1], v[2]};
      up[k] += std::abs(s(rng));
      EXPECT_GE(fuse(up[0], up[1], up[2], w), base);
    }
  }
}

ScoreSet make_set(const std::string& name, const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  ScoreSet s;
  s.system_name = name;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s.trials.push_back({"e" + std::to_string(i), "t" + std::to_string(i), labels[i]});
  }
  s.scores = scores;
  return s;
}

TEST(Fusion, ScoreSetsAndMismatch) {
  const std::vector<int> lab{1, 0, 1};
  const auto a = make_set("a", {0.2, 0.1, 0.5}, lab), b = make_set("b", {0.6, 0.3, 0.5}, lab),
             c = make_set("c", {0.4, 0.9, 0.5}, lab);
  const auto f = fuse_scores(a, b, c, {0.30, 0.79});
  EXPECT_EQ(f.system_name, "fusion");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_NEAR(f.scores[0], 0.4632, 1e-12);
  EXPECT_NEAR(f.scores[2], 0.5, 1e-12);
  EXPECT_TRUE(f.labeled());
  auto bad = c;
  bad.trials[2].test_id = "other";
  try {
    fuse_scores(a, b, bad, {});
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  EXPECT_THROW(fuse_scores(a, b, make_set("c", {0.1}, {1}), {}), ContractViolation);
  EXPECT_THROW((FusionWeights{1.5, 0.5}.validate()), ContractViolation);
}

TEST(TuneFusion, GridSizeAndOrder) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  std::vector<int> lab;
  std::vector<double> x, y, z;
  for (int i = 0; i < 60; ++i) {
    lab.push_back(i % 2);
    x.push_back(g(rng) + lab.back());
    y.push_back(g(rng) + lab.back());
    z.push_back(g(rng) + lab.back());
  }
  const auto t = tune_fusion(make_set("a", x, lab), make_set("b", y, lab), make_set("c", z, lab));
  ASSERT_EQ(t.surface.size(), 10201u);
  EXPECT_EQ(t.surface[0].alpha, 0.0);
  EXPECT_EQ(t.surface[1].beta, 0.01);
  EXPECT_EQ(t.surface[101].alpha, 0.01);
  EXPECT_EQ(t.surface.back().alpha, 1.0);
  double best = 1e9;
  for (const auto& p : t.surface) best = std::min(best, p.eer);
  EXPECT_EQ(t.eer, best);
  EXPECT_THROW(tune_fusion(make_set("a", x, lab), make_set("b", y, lab), make_set("c", z, lab), 0.03),
               ContractViolation);
  const auto coarse = tune_fusion(make_set("a", x, lab), make_set("b", y, lab), make_set("c", z, lab), 0.25);
  EXPECT_EQ(coarse.surface.size(), 25u);
}

TEST(TuneFusion, PerfectFirstSystemCollapsesToIt) {
  std::vector<int> lab;
  std::vector<double> s1, s2, s3;
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 80; ++i) {
    const int l = i % 2;
    lab.push_back(l);
    s1.push_back(l ? 0.6 + 0.1 * u(rng) : 0.4 - 0.1 * u(rng));
    // Strongly inverted with a large scale, so any weight on them hurts.
    s2.push_back((l ? -1e6 : 1e6) * (1.0 + u(rng)));
    s3.push_back((l ? -1e6 : 1e6) * (1.0 + u(rng)));
  }
  const auto t = tune_fusion(make_set("a", s1, lab), make_set("b", s2, lab), make_set("c", s3, lab));
  EXPECT_EQ(t.best.alpha, 1.0);
  EXPECT_EQ(t.best.beta, 1.0);
  EXPECT_EQ(t.eer, 0.0);
}

TEST(TuneFusion, TiesGoToLowerWeights) {
  std::vector<int> lab{1, 0, 1, 0};
  const auto s = make_set("a", {0.9, 0.1, 0.8, 0.2}, lab);
  const auto t = tune_fusion(s, s, s, 0.5);
  EXPECT_EQ(t.best.alpha, 0.0);
  EXPECT_EQ(t.best.beta, 0.0);
}

TEST(TuneFusion, SymmetricInputsMatchBruteForce) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g;
  std::vector<int> lab;
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) {
    lab.push_back(i % 2);
    x.push_back(g(rng) + 0.8 * lab.back());
    y.push_back(g(rng) + 0.8 * lab.back());
  }
  const auto a = make_set("a", x, lab), b = make_set("b", y, lab);
  const auto t = tune_fusion(a, b, b, 0.05);
  double best = 1e9;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      const auto f = fuse_scores(a, b, b, {i / 20.0, j / 20.0});
      std::vector<double> tg, nt;
      for (std::size_t k = 0; k < f.size(); ++k) (lab[k] ? tg : nt).push_back(f.scores[k]);
      best = std::min(best, oracle::eer(tg, nt));
    }
  EXPECT_NEAR(t.eer, best, 1e-9);
  // With S2 == S3 the fused score is alpha*beta*S1 + (1 - alpha*beta)*S2, so
  // cells with the same product agree.
  std::map<long, double> by_product;
  for (const auto& p : t.surface) {
    const long key = std::lround(p.alpha * 20) * std::lround(p.beta * 20);
    const auto [it, fresh] = by_product.emplace(key, p.eer);
    if (!fresh) {
      EXPECT_NEAR(p.eer, it->second, 1e-12) << p.alpha << " " << p.beta;
    }
  }
}

TEST(TuneFusion, NeedsLabels) {
  auto s = make_set("a", {0.1, 0.2}, {1, 0});
  for (auto& t : s.trials) t.label.reset();
  EXPECT_THROW(tune_fusion(s, s, s), ContractViolation);
}

TEST(Trials, ParseAndRoundTrip) {
  const auto t = parse_trials("1 a b\n0 a c\n\nb c\n");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(*t[0].label, 1);
  EXPECT_EQ(*t[1].label, 0);
  EXPECT_FALSE(t[2].label);
  EXPECT_EQ(t[2].enroll_id, "b");
  try {
    parse_trials("1 a b\n2 a c\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
  EXPECT_THROW(parse_trials("1 a b c d\n"), ParseError);
  ssv::testing::TempDir dir("trials");
  write_trials(dir.file("t.txt"), t);
  const auto back = read_trials(dir.file("t.txt"));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_TRUE(back[i].same_pair(t[i]));
    EXPECT_EQ(back[i].label, t[i].label);
  }
  EXPECT_THROW(read_trials(dir.file("none.txt")), IoError);
}

TEST(Scores, FileRoundTripAndLabels) {
  ssv::testing::TempDir dir("scores");
  const auto s = make_set("sys", {0.25, -1.5, 3.1234567}, {1, 0, 1});
  EXPECT_EQ(format_scores(s), "e0 t0 0.250000\ne1 t1 -1.500000\ne2 t2 3.123457\n");
  write_scores(dir.file("s.txt"), s);
  auto back = read_scores(dir.file("s.txt"), "sys");
  EXPECT_EQ(back.system_name, "sys");
  EXPECT_FALSE(back.labeled());
  back = attach_labels(back, s.trials);
  EXPECT_TRUE(back.labeled());
  EXPECT_EQ(back.scores[1], -1.5);
  auto wrong = s.trials;
  wrong[1].enroll_id = "zz";
  EXPECT_THROW(attach_labels(back, wrong), ContractViolation);
  {
    std::ofstream f(dir.file("bad.txt"));
    f << "a b nan_or_not\n";
  }
  EXPECT_THROW(read_scores(dir.file("bad.txt")), ParseError);
}

TEST(Scores, CosineTrialsAndUnknownIds) {
  std::mt19937_64 rng(20);
  std::normal_distribution<double> g;
  vs::VectorSet v;
  for (int i = 0; i < 5; ++i) {
    vs::SpeakerVector s{"u" + std::to_string(i), {}};
    for (int d = 0; d < 16; ++d) s.values.push_back(g(rng));
    v.push_back(s);
  }
  const std::vector<Trial> trials{{"u0", "u1", 1}, {"u2", "u4", 0}, {"u3", "u3", 1}};
  const auto s = score_trials(v, trials, "raw");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s.scores[0], oracle::cosine(v[0].values, v[1].values), 1e-12);
  EXPECT_NEAR(s.scores[1], oracle::cosine(v[2].values, v[4].values), 1e-12);
  EXPECT_NEAR(s.scores[2], 1.0, 1e-12);
  try {
    score_trials(v, {{"u0", "u1", 1}, {"u0", "missing", 0}});
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Trials, BalancedGeneration) {
  std::vector<std::string> ids;
  std::map<std::string, std::string> spk;
  for (int s = 0; s < 5; ++s)
    for (int u = 0; u < 4; ++u) {
      ids.push_back("s" + std::to_string(s) + "u" + std::to_string(u));
      spk[ids.back()] = "s" + std::to_string(s);
    }
  const auto t = make_balanced_trials(ids, spk, 21, 3);
  ASSERT_EQ(t.size(), 21u);
  std::size_t targets = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& x : t) {
    EXPECT_EQ(*x.label, spk.at(x.enroll_id) == spk.at(x.test_id) ? 1 : 0);
    targets += *x.label;
    EXPECT_NE(x.enroll_id, x.test_id);
    auto key = std::minmax(x.enroll_id, x.test_id);
    EXPECT_TRUE(seen.insert({key.first, key.second}).second);
  }
  EXPECT_EQ(targets, 10u);
  const auto again = make_balanced_trials(ids, spk, 21, 3);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_TRUE(t[i].same_pair(again[i]));
  // 5 speakers x C(4, 2) = 30 target pairs.
  EXPECT_THROW(make_balanced_trials(ids, spk, 62, 3), DegenerateInputError);
}

TEST(Metrics, JsonReport) {
  const auto s = make_set("x", {0.9, 0.8, 0.4, 0.5, 0.3, 0.2}, {1, 1, 1, 0, 0, 0});
  const auto j = metrics_json(s);
  EXPECT_NEAR(j.at("eer").get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_TRUE(j.contains("min_dcf"));
  EXPECT_TRUE(j.contains("params"));
}

}  // namespace
}  // namespace ssv::eval
