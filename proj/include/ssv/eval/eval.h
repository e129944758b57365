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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssv/vectorspace/vectors.h"

namespace ssv::eval {

struct Trial {
  std::string enroll_id;
  std::string test_id;
  std::optional<int> label;  // 1 target, 0 nontarget

  bool same_pair(const Trial& o) const {
    return enroll_id == o.enroll_id && test_id == o.test_id;
  }
};

struct ScoreSet {
  std::string system_name;
  std::vector<Trial> trials;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
  bool labeled() const;
};

struct FusionWeights {
  double alpha = 0.30;
  double beta = 0.79;

  void validate() const;
};

struct DcfParams {
  double c_miss = 1.0;
  double c_fa = 1.0;
  double p_target = 0.05;

  void validate() const;
  nlohmann::json to_json() const;
  static DcfParams from_json(const nlohmann::json& j);
};

struct OperatingPoint {
  double rate = 0.0;
  double threshold = 0.0;
};

// "<label> <enroll> <test>" or "<enroll> <test>" per line.
std::vector<Trial> parse_trials(const std::string& text);
std::vector<Trial> read_trials(const std::string& path);
void write_trials(const std::string& path, const std::vector<Trial>& trials);

// "<enroll> <test> <score>" per line, score printed "%.6f".
std::string format_scores(const ScoreSet& set);
void write_scores(const std::string& path, const ScoreSet& set);
ScoreSet read_scores(const std::string& path, std::string system_name = {});

// Attaches labels from `trials` to `scores`; the pair lists must match.
ScoreSet attach_labels(ScoreSet scores, const std::vector<Trial>& trials);

// Cosine score per trial. Throws ContractViolation naming the trial line for
// an id missing from `vectors`.
ScoreSet score_trials(const vs::VectorSet& vectors, const std::vector<Trial>& trials,
                      std::string system_name = {});

// Scores with labels split into target and nontarget lists.
struct LabeledScores {
  std::vector<double> targets;
  std::vector<double> nontargets;
};
LabeledScores split_by_label(const ScoreSet& set);

// Trials are accepted when score >= threshold. Throws DegenerateInputError
// unless both classes are present.
OperatingPoint compute_eer(const std::vector<double>& targets,
                           const std::vector<double>& nontargets);
OperatingPoint compute_eer(const ScoreSet& set);

OperatingPoint compute_min_dcf(const std::vector<double>& targets,
                               const std::vector<double>& nontargets,
                               const DcfParams& params = {});
OperatingPoint compute_min_dcf(const ScoreSet& set, const DcfParams& params = {});

// Normalized DCF of a single threshold.
double dcf_at(const std::vector<double>& targets, const std::vector<double>& nontargets,
              double threshold, const DcfParams& params = {});

double fuse(double s1, double s2, double s3, const FusionWeights& w);

// Per-trial fusion. Throws ContractViolation with the first index at which
// the trial lists differ. With `min_max_normalize` each system is first
// rescaled to [0, 1].
ScoreSet fuse_scores(const ScoreSet& s1, const ScoreSet& s2, const ScoreSet& s3,
                     const FusionWeights& w, bool min_max_normalize = false);

struct SurfacePoint {
  double alpha = 0.0;
  double beta = 0.0;
  double eer = 0.0;
  double min_dcf = 0.0;
};

struct FusionTuning {
  FusionWeights best;
  double eer = 0.0;
  double min_dcf = 0.0;
  std::vector<SurfacePoint> surface;  // alpha-major, ascending
};

// Exhaustive grid over alpha, beta in {0, step, ..., 1}. 1/step must be an
// integer (within 1e-9).
FusionTuning tune_fusion(const ScoreSet& s1, const ScoreSet& s2, const ScoreSet& s3,
                         double grid_step = 0.01, const DcfParams& params = {},
                         bool min_max_normalize = false, std::size_t threads = 1);

// n/2 target and n - n/2 nontarget trials over distinct utterance pairs. Only
// speakers with at least two ids contribute targets.
std::vector<Trial> make_balanced_trials(
    const std::vector<std::string>& ids,
    const std::map<std::string, std::string>& speaker_of, std::size_t n,
    std::uint64_t seed);

nlohmann::json metrics_json(const ScoreSet& set, const DcfParams& params = {});

}  // namespace ssv::eval
