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

#include "ssv/siamese/training.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "ssv/error.h"
#include "ssv/features/mel.h"
#include "ssv/nncore/losses.h"
#include "ssv/parallel.h"

namespace ssv::siamese {

void FeatureStore::add(std::string id, nn::Tensor features) {
  nn::require_rank(features, 2, "feature matrix");
  by_id_.insert_or_assign(std::move(id), std::move(features));
}

const nn::Tensor& FeatureStore::get(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw ContractViolation("no features for utterance '" + id + "'");
  }
  return it->second;
}

std::string FeatureStore::path_for(const std::string& dir, const std::string& id) {
  return (std::filesystem::path(dir) / (id + ".mspc")).string();
}

FeatureStore FeatureStore::load(const std::string& dir,
                                const std::vector<std::string>& ids) {
  FeatureStore store;
  for (const auto& id : ids) {
    if (store.contains(id)) continue;
    store.add(id, feat::read_feature_file(path_for(dir, id)));
  }
  return store;
}

void SiameseTrainConfig::validate() const {
  optimizer.validate(/*allow_zero_lr=*/true);
  if (crop < kMinFrames) {
    throw ContractViolation("crop must be at least " + std::to_string(kMinFrames) +
                            " frames");
  }
  if (mining_k < 1) throw ContractViolation("mining k must be >= 1");
  if (!(margin >= 0.0)) throw ContractViolation("margin must be >= 0");
}

nlohmann::json SiameseTrainConfig::to_json() const {
  return {{"optimizer", nn::to_string(optimizer.kind)},
          {"learning_rate", optimizer.learning_rate},
          {"lr_decay", optimizer.lr_decay},
          {"decay_mode", nn::to_string(optimizer.decay_mode)},
          {"batch_size", optimizer.batch_size},
          {"adam_beta1", optimizer.adam_beta1},
          {"adam_beta2", optimizer.adam_beta2},
          {"adam_eps", optimizer.adam_eps},
          {"epochs", epochs},
          {"crop", crop},
          {"seed", seed},
          {"mining_k", mining_k},
          {"max_samples_per_epoch", max_samples_per_epoch},
          {"margin", margin}};
}

SiameseTrainConfig SiameseTrainConfig::from_json(const nlohmann::json& j) {
  SiameseTrainConfig c;
  auto& o = c.optimizer;
  o.kind = nn::optimizer_kind_from_string(j.value("optimizer", nn::to_string(o.kind)));
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.lr_decay = j.value("lr_decay", o.lr_decay);
  o.decay_mode =
      nn::decay_mode_from_string(j.value("decay_mode", nn::to_string(o.decay_mode)));
  o.batch_size = j.value("batch_size", o.batch_size);
  o.adam_beta1 = j.value("adam_beta1", o.adam_beta1);
  o.adam_beta2 = j.value("adam_beta2", o.adam_beta2);
  o.adam_eps = j.value("adam_eps", o.adam_eps);
  c.epochs = j.value("epochs", c.epochs);
  c.crop = j.value("crop", c.crop);
  c.seed = j.value("seed", c.seed);
  c.mining_k = j.value("mining_k", c.mining_k);
  c.max_samples_per_epoch = j.value("max_samples_per_epoch", c.max_samples_per_epoch);
  c.margin = j.value("margin", c.margin);
  return c;
}

namespace {

// Shuffled sample order for one epoch, truncated to the per-epoch budget.
std::vector<std::size_t> epoch_order(std::size_t n, std::size_t budget,
                                     std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  if (budget > 0 && budget < n) order.resize(budget);
  return order;
}

void check_finite(double loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw NonFiniteError("training loss is not finite at epoch " +
                         std::to_string(epoch) + ", batch " + std::to_string(batch));
  }
}

}  // namespace

TrainHistory train_double(DoubleBranchModel& model,
                          const std::vector<vs::LabeledPair>& pairs,
                          const FeatureStore& features,
                          const SiameseTrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw ContractViolation("train_double: no pairs");
  for (const auto& p : pairs) {
    if (p.label != 0 && p.label != 1) throw ContractViolation("pair label must be 0 or 1");
    features.get(p.anchor_id);
    features.get(p.other_id);
  }
  auto params = model.params();
  nn::zero_grads(params);
  std::mt19937_64 rng(config.seed);
  TrainHistory history;
  std::size_t step = 0;
  const std::size_t batch = config.optimizer.batch_size;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(pairs.size(), config.max_samples_per_epoch, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t n = std::min(batch, order.size() - start);
      double batch_loss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& p = pairs[order[start + r]];
        const nn::Tensor a = feat::random_crop(features.get(p.anchor_id), config.crop, rng);
        const nn::Tensor o = feat::random_crop(features.get(p.other_id), config.crop, rng);
        DoubleBranchModel::Trace trace;
        const double score = model.forward(a, o, &trace);
        const double y = static_cast<double>(p.label);
        batch_loss += nn::bce_loss(score, y);
        model.backward(trace, nn::bce_loss_grad(score, y) / static_cast<double>(n));
      }
      check_finite(batch_loss, epoch, b);
      nn::optimizer_step(params, config.optimizer, step++);
      loss_sum += batch_loss;
    }
    history.loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return history;
}

TrainHistory train_triple(TripleBranchModel& model,
                          const std::vector<vs::Triplet>& triplets,
                          const FeatureStore& features,
                          const SiameseTrainConfig& config) {
  config.validate();
  if (triplets.empty()) throw ContractViolation("train_triple: no triplets");
  for (const auto& t : triplets) {
    features.get(t.anchor_id);
    features.get(t.client_id);
    features.get(t.impostor_id);
  }
  model.set_margin(config.margin);
  auto params = model.params();
  nn::zero_grads(params);
  std::mt19937_64 rng(config.seed);
  TrainHistory history;
  std::size_t step = 0;
  const std::size_t batch = config.optimizer.batch_size;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(triplets.size(), config.max_samples_per_epoch, rng);
    double loss_sum = 0.0;
    std::size_t active = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t n = std::min(batch, order.size() - start);
      double batch_loss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& t = triplets[order[start + r]];
        const nn::Tensor a = feat::random_crop(features.get(t.anchor_id), config.crop, rng);
        const nn::Tensor c = feat::random_crop(features.get(t.client_id), config.crop, rng);
        const nn::Tensor i =
            feat::random_crop(features.get(t.impostor_id), config.crop, rng);
        TripleBranchModel::Trace trace;
        const double loss = model.loss(a, c, i, &trace);
        batch_loss += loss;
        if (loss > 0.0) {
          ++active;
          model.backward(trace, 1.0 / static_cast<double>(n));
        }
      }
      check_finite(batch_loss, epoch, b);
      nn::optimizer_step(params, config.optimizer, step++);
      loss_sum += batch_loss;
    }
    const auto count = static_cast<double>(order.size());
    history.loss.push_back(loss_sum / count);
    history.active_fraction.push_back(static_cast<double>(active) / count);
  }
  return history;
}

nn::Tensor inference_input(const nn::Tensor& features) {
  return feat::wrap_pad(features, kMinFrames);
}

vs::VectorSet extract_embeddings(const TripleBranchModel& model,
                                 const FeatureStore& features,
                                 const std::vector<std::string>& ids,
                                 std::size_t threads) {
  vs::VectorSet out(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    const nn::Tensor e = model.embed(inference_input(features.get(ids[i])));
    out[i] = vs::SpeakerVector{ids[i], e.to_vector()};
  });
  return out;
}

std::vector<double> double_branch_scores(
    const DoubleBranchModel& model, const FeatureStore& features,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    std::size_t threads) {
  std::vector<double> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    out[i] = model.forward(inference_input(features.get(pairs[i].first)),
                           inference_input(features.get(pairs[i].second)));
  });
  return out;
}

}  // namespace ssv::siamese
