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
#include <set>

#include <gtest/gtest.h>

#include "ssv/error.h"
#include "ssv/vectorspace/split.h"
#include "ssv/vectorspace/vectors.h"
#include "test_util.h"

namespace ssv::vs {
namespace {

TEST(Cosine, HandValues) {
  const std::vector<double> x = {1, 1}, e1 = {1, 0}, e2 = {0, 1};
  EXPECT_DOUBLE_EQ(cosine_score(x, x), 1.0);
  EXPECT_EQ(cosine_score(e1, e2), 0.0);
  EXPECT_NEAR(cosine_score(x, e1), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(cosine_score(x, e1), 0.70711, 1e-5);
}

TEST(Cosine, Errors) {
  const std::vector<double> zero = {0, 0}, a = {1, 2}, b = {1, 2, 3};
  EXPECT_THROW(cosine_score(zero, a), DegenerateInputError);
  EXPECT_THROW(cosine_score(a, b), ShapeError);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> pos(1e-3, 1e3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(17), y(17);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    EXPECT_NEAR(cosine_score(x, y), cosine_score(y, x), 1e-12);
    const double s = pos(rng);
    std::vector<double> sx = x;
    for (auto& v : sx) v *= s;
    EXPECT_NEAR(cosine_score(x, sx), 1.0, 1e-12);
    const double c = cosine_score(x, y);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(VectorFile, RoundTripIsExact) {
  ssv::testing::TempDir dir("vec");
  VectorSet vs = {{"a", {0.1, -2.5e-17, 3.0}}, {"b", {1.0 / 3.0, 1e300, -0.0}}};
  write_vectors(dir.file("v.jsonl"), vs);
  const auto back = read_vectors(dir.file("v.jsonl"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], vs[0]);
  EXPECT_EQ(back[1].values[0], vs[1].values[0]);
  EXPECT_EQ(back[1].values[1], vs[1].values[1]);
  EXPECT_EQ(format_vector_line(back[0]), format_vector_line(vs[0]));
}

TEST(VectorFile, ParseErrorsCarryLine) {
  try {
    parse_vector_line("{\"id\": \"x\"}", 7);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 7u);
  }
  EXPECT_THROW(parse_vector_line("not json", 1), ParseError);
  EXPECT_THROW(read_vectors("/nonexistent/v.jsonl"), IoError);
}

TEST(VectorFile, Validation) {
  EXPECT_THROW(validate_vectors({{"a", {1, 2}}, {"b", {1}}}), ShapeError);
  EXPECT_THROW(validate_vectors({{"a", {1, 2}}, {"a", {1, 3}}}), ContractViolation);
  EXPECT_THROW(validate_vectors({{"a", {1, NAN}}}), ContractViolation);
  EXPECT_NO_THROW(validate_vectors({{"a", {1, 2}}, {"b", {3, 4}}}));
}

std::vector<UtteranceInfo> unlabeled(std::size_t n) {
  std::vector<UtteranceInfo> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"u" + std::to_string(i), std::nullopt});
  return out;
}

TEST(Split, HalvesAreDisjointAndCover) {
  const auto m = unlabeled(100);
  const auto s = split_subsets(m, 0.5, 42);
  EXPECT_EQ(s.subset_a.size(), 50u);
  EXPECT_EQ(s.subset_b.size(), 50u);
  std::set<std::string> all(s.subset_a.begin(), s.subset_a.end());
  for (const auto& id : s.subset_b) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), 100u);
}

TEST(Split, Deterministic) {
  const auto m = unlabeled(37);
  const auto a = split_subsets(m, 0.3, 9), b = split_subsets(m, 0.3, 9);
  EXPECT_EQ(a.subset_a, b.subset_a);
  EXPECT_EQ(a.subset_b, b.subset_b);
  const auto c = split_subsets(m, 0.3, 10);
  EXPECT_NE(a.subset_a, c.subset_a);
}

TEST(Split, LabeledCorpusSplitsBySpeaker) {
  std::vector<UtteranceInfo> m;
  for (int s = 0; s < 10; ++s)
    for (int u = 0; u < 4; ++u)
      m.push_back({"s" + std::to_string(s) + "u" + std::to_string(u), "s" + std::to_string(s)});
  const auto split = split_subsets(m, 0.5, 1);
  auto speakers = [](const std::vector<std::string>& ids) {
    std::set<std::string> out;
    for (const auto& id : ids) out.insert(id.substr(0, id.find('u')));
    return out;
  };
  const auto sa = speakers(split.subset_a), sb = speakers(split.subset_b);
  EXPECT_EQ(sa.size(), 5u);
  EXPECT_EQ(sb.size(), 5u);
  for (const auto& s : sa) EXPECT_FALSE(sb.count(s));
  EXPECT_EQ(split.subset_a.size(), 20u);
}

TEST(Split, Errors) {
  EXPECT_THROW(split_subsets(std::vector<UtteranceInfo>{}, 0.5, 0), ContractViolation);
  EXPECT_THROW(split_subsets(unlabeled(4), 0.0, 0), ContractViolation);
  EXPECT_THROW(split_subsets(unlabeled(4), 1.0, 0), ContractViolation);
}

TEST(Split, SelectVectorsKeepsListOrder) {
  const VectorSet all = {{"a", {1}}, {"b", {2}}, {"c", {3}}};
  const auto sel = select_vectors(all, {"c", "a"});
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_EQ(sel[0].id, "c");
  EXPECT_EQ(sel[1].id, "a");
  EXPECT_THROW(select_vectors(all, {"zz"}), ContractViolation);
}

}  // namespace
}  // namespace ssv::vs
