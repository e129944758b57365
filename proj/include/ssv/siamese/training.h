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
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ssv/nncore/optimizer.h"
#include "ssv/siamese/models.h"
#include "ssv/vectorspace/mining.h"
#include "ssv/vectorspace/vectors.h"

namespace ssv::siamese {

// Log-mel matrices (bins x frames) keyed by utterance id.
class FeatureStore {
 public:
  void add(std::string id, nn::Tensor features);
  bool contains(const std::string& id) const { return by_id_.count(id) != 0; }
  // Throws ContractViolation naming the id when it is absent.
  const nn::Tensor& get(const std::string& id) const;
  std::size_t size() const { return by_id_.size(); }

  // <dir>/<id>.mspc
  static std::string path_for(const std::string& dir, const std::string& id);
  // Throws IoError for a missing feature file.
  static FeatureStore load(const std::string& dir,
                           const std::vector<std::string>& ids);

 private:
  std::map<std::string, nn::Tensor> by_id_;
};

struct SiameseTrainConfig {
  nn::OptimizerConfig optimizer = [] {
    auto c = nn::OptimizerConfig::adam();
    c.batch_size = 8;
    return c;
  }();
  std::size_t epochs = 10;
  std::size_t crop = 350;
  std::uint64_t seed = 0;
  std::size_t mining_k = 10;
  // 0 uses every pair/triplet each epoch; otherwise a fresh random subset of
  // this size is drawn per epoch.
  std::size_t max_samples_per_epoch = 0;
  double margin = 0.2;

  void validate() const;
  nlohmann::json to_json() const;
  static SiameseTrainConfig from_json(const nlohmann::json& j);
};

struct TrainHistory {
  std::vector<double> loss;             // epoch-mean loss
  std::vector<double> active_fraction;  // triplets with loss > 0 (triple only)
};

// Mini-batch BCE on mined pairs; every sample gets a fresh random crop of
// both utterances each epoch. Deterministic given config.seed.
TrainHistory train_double(DoubleBranchModel& model,
                          const std::vector<vs::LabeledPair>& pairs,
                          const FeatureStore& features,
                          const SiameseTrainConfig& config);

// Mini-batch triplet loss on mined [anchor, client, impostor] triplets.
TrainHistory train_triple(TripleBranchModel& model,
                          const std::vector<vs::Triplet>& triplets,
                          const FeatureStore& features,
                          const SiameseTrainConfig& config);

// Full-utterance input, wrap-padded to at least kMinFrames frames.
nn::Tensor inference_input(const nn::Tensor& features);

// One unit-norm embedding per id, from the whole utterance.
vs::VectorSet extract_embeddings(const TripleBranchModel& model,
                                 const FeatureStore& features,
                                 const std::vector<std::string>& ids,
                                 std::size_t threads = 1);

// Double-branch output for each (enroll, test) pair, full utterances.
std::vector<double> double_branch_scores(
    const DoubleBranchModel& model, const FeatureStore& features,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    std::size_t threads = 1);

}  // namespace ssv::siamese
