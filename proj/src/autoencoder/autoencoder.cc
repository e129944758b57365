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

#include "ssv/autoencoder/autoencoder.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssv/error.h"
#include "ssv/nncore/checkpoint.h"
#include "ssv/nncore/losses.h"
#include "ssv/nncore/ops.h"
#include "ssv/parallel.h"
#include "ssv/vectorspace/mining.h"

namespace ssv::ae {

AEModel::AEModel(std::vector<std::size_t> layer_sizes, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) {
    throw ContractViolation("autoencoder needs at least two layer sizes");
  }
  nn::Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::string tag = "ae.fc" + std::to_string(l + 1);
    weights_.emplace_back(tag + ".weight", nn::Shape{sizes_[l + 1], sizes_[l]});
    biases_.emplace_back(tag + ".bias", nn::Shape{sizes_[l + 1]});
    nn::kaiming_uniform(weights_.back(), sizes_[l], rng);
  }
}

AEModel::AEModel(const AEModel& other) = default;
AEModel& AEModel::operator=(const AEModel& other) = default;

nn::ParamRefs AEModel::params() {
  nn::ParamRefs out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

nn::ConstParamRefs AEModel::params() const {
  nn::ConstParamRefs out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

namespace {

nn::Tensor normalize_rows(const nn::Tensor& x) {
  nn::Tensor y = x;
  const std::size_t d = x.shape().back();
  for (std::size_t r = 0; r < x.size() / d; ++r) {
    std::span<double> row(y.data().data() + r * d, d);
    const double n = vs::norm(row);
    if (n == 0.0) throw DegenerateInputError("cannot length-normalise a zero vector");
    for (double& v : row) v /= n;
  }
  return y;
}

}  // namespace

nn::Tensor AEModel::forward(const nn::Tensor& x, Trace* trace) const {
  if (x.shape().empty() || x.shape().back() != input_dim()) {
    throw ShapeError("autoencoder expects input width " +
                     std::to_string(input_dim()) + ", got shape " +
                     nn::shape_string(x.shape()));
  }
  nn::Tensor h = length_normalize ? normalize_rows(x) : x;
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    nn::Tensor z = nn::linear(h, weights_[l].value, biases_[l].value);
    if (trace) {
      trace->inputs.push_back(std::move(h));
      trace->pre.push_back(z);
    }
    h = (l + 1 < weights_.size()) ? nn::relu(z) : std::move(z);
  }
  return h;
}

void AEModel::backward(const Trace& trace, const nn::Tensor& grad_output) {
  nn::Tensor g = grad_output;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (l + 1 < weights_.size()) g = nn::relu_backward(trace.pre[l], g);
    g = nn::linear_backward(trace.inputs[l], weights_[l].value, g,
                            weights_[l].grad, biases_[l].grad);
  }
}

std::vector<AEPair> build_training_pairs(const vs::VectorSet& vectors,
                                         std::size_t k) {
  if (k < 1) throw ContractViolation("neighbour k must be >= 1");
  if (vectors.size() < k + 1) {
    throw ContractViolation("need more than k = " + std::to_string(k) +
                            " vectors to pick neighbours, have " +
                            std::to_string(vectors.size()));
  }
  const vs::CosineIndex index(vectors);
  std::vector<AEPair> pairs;
  pairs.reserve(vectors.size() * k);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto scores = index.scores(vectors[i].values);
    std::vector<std::size_t> order;
    order.reserve(vectors.size() - 1);
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return vs::ranks_before({vectors[a].id, scores[a]},
                                                {vectors[b].id, scores[b]});
                      });
    for (std::size_t n = 0; n < k; ++n) pairs.push_back({i, order[n]});
  }
  return pairs;
}

AETrainResult train_ae(const vs::VectorSet& vectors,
                       const std::vector<AEPair>& pairs,
                       const AETrainConfig& config) {
  if (pairs.empty()) throw ContractViolation("train_ae: no training pairs");
  config.optimizer.validate(/*allow_zero_lr=*/true);
  vs::validate_vectors(vectors);
  const std::size_t dim = vectors.front().values.size();

  AETrainResult result{AEModel(config.layer_sizes, config.seed), {}};
  AEModel& model = result.model;
  if (model.input_dim() != dim || model.output_dim() != dim) {
    throw ShapeError("autoencoder layer sizes do not match vector dimension " +
                     std::to_string(dim));
  }
  model.length_normalize = config.length_normalize;
  auto params = model.params();
  nn::zero_grads(params);

  auto target_of = [&](std::size_t idx) -> std::span<const double> {
    return vectors.at(idx).values;
  };

  nn::Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = config.optimizer.batch_size;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t n = std::min(batch, order.size() - start);
      nn::Tensor x({n, dim});
      nn::Tensor y({n, dim});
      for (std::size_t r = 0; r < n; ++r) {
        const AEPair& p = pairs[order[start + r]];
        std::copy_n(target_of(p.input).begin(), dim, x.data().begin() + r * dim);
        std::copy_n(target_of(p.target).begin(), dim, y.data().begin() + r * dim);
      }
      if (config.length_normalize) y = normalize_rows(y);

      AEModel::Trace trace;
      const nn::Tensor out = model.forward(x, &trace);
      const auto loss = nn::mse_loss_with_grad(out, y);
      if (!std::isfinite(loss.value)) {
        throw NonFiniteError("autoencoder loss is not finite at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(b));
      }
      model.backward(trace, loss.grad);
      nn::optimizer_step(params, config.optimizer, step++);
      loss_sum += loss.value * static_cast<double>(n);
    }
    result.loss_history.push_back(loss_sum / static_cast<double>(pairs.size()));
  }
  return result;
}

vs::VectorSet extract_ae_vectors(const AEModel& model,
                                 const vs::VectorSet& vectors,
                                 std::size_t threads) {
  vs::VectorSet out(vectors.size());
  parallel_for(vectors.size(), threads, [&](std::size_t i) {
    const auto& v = vectors[i];
    if (v.values.size() != model.input_dim()) {
      throw ShapeError("vector '" + v.id + "' has dimension " +
                       std::to_string(v.values.size()) + ", model expects " +
                       std::to_string(model.input_dim()));
    }
    const nn::Tensor y = model.forward(nn::Tensor::vector(v.values));
    out[i] = vs::SpeakerVector{v.id, y.to_vector()};
  });
  return out;
}

void save_ae_model(const std::string& path, const AEModel& model,
                   const std::vector<double>& loss_history) {
  nlohmann::json meta;
  meta["kind"] = "autoencoder";
  meta["layer_sizes"] = model.layer_sizes();
  meta["length_normalize"] = model.length_normalize;
  if (!loss_history.empty()) meta["loss_history"] = loss_history;
  nn::save_checkpoint(path, model.params(), meta);
}

AEModel load_ae_model(const std::string& path) {
  const auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("kind", "") != "autoencoder") {
    throw ParseError("checkpoint is not an autoencoder: " + path, 0);
  }
  AEModel model(ck.meta.at("layer_sizes").get<std::vector<std::size_t>>());
  model.length_normalize = ck.meta.value("length_normalize", false);
  nn::restore_params(ck, model.params());
  return model;
}

}  // namespace ssv::ae
