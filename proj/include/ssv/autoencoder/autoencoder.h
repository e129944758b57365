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
#include <string>
#include <vector>

#include "ssv/nncore/optimizer.h"
#include "ssv/nncore/param.h"
#include "ssv/vectorspace/vectors.h"

// Nearest-neighbour autoencoder: a fully connected net trained to map each
// training vector onto one of its cosine neighbours. Its outputs on test
// vectors (ae-vectors) replace the raw vectors for scoring.
namespace ssv::ae {

inline const std::vector<std::size_t> kDefaultLayerSizes = {400, 300, 200, 300,
                                                            400};

// ReLU after every layer except the last, which is linear.
class AEModel {
 public:
  explicit AEModel(std::vector<std::size_t> layer_sizes = kDefaultLayerSizes,
                   std::uint64_t seed = 0);

  AEModel(const AEModel& other);
  AEModel& operator=(const AEModel& other);
  AEModel(AEModel&&) noexcept = default;
  AEModel& operator=(AEModel&&) noexcept = default;

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return weights_.size(); }

  nn::Param& weight(std::size_t layer) { return weights_[layer]; }
  nn::Param& bias(std::size_t layer) { return biases_[layer]; }

  nn::ParamRefs params();
  nn::ConstParamRefs params() const;

  // Inputs are length-normalised before the forward pass when set.
  bool length_normalize = false;

  struct Trace {
    std::vector<nn::Tensor> inputs;  // input to each layer
    std::vector<nn::Tensor> pre;     // pre-activation of each layer
  };

  // x is [D] or [batch, D].
  nn::Tensor forward(const nn::Tensor& x, Trace* trace = nullptr) const;
  // Accumulates parameter gradients from d loss / d output.
  void backward(const Trace& trace, const nn::Tensor& grad_output);

 private:
  std::vector<std::size_t> sizes_;
  std::vector<nn::Param> weights_;
  std::vector<nn::Param> biases_;
};

struct AEPair {
  std::size_t input = 0;   // index of w in the vector set
  std::size_t target = 0;  // index of the neighbour v

  friend bool operator==(const AEPair&, const AEPair&) = default;
};

// For every vector, one pair per top-k cosine neighbour (self excluded, ties
// by ascending id). Identity pairs are never produced. Throws
// ContractViolation when the set holds k or fewer vectors.
std::vector<AEPair> build_training_pairs(const vs::VectorSet& vectors,
                                         std::size_t k);

struct AETrainConfig {
  std::size_t epochs = 100;
  nn::OptimizerConfig optimizer = [] {
    nn::OptimizerConfig c;
    c.kind = nn::OptimizerKind::sgd;
    c.learning_rate = 0.01;
    c.lr_decay = 0.0002;
    c.batch_size = 100;
    return c;
  }();
  std::size_t neighbor_k = 15;
  std::uint64_t seed = 0;
  bool length_normalize = false;
  std::vector<std::size_t> layer_sizes = kDefaultLayerSizes;
};

struct AETrainResult {
  AEModel model;
  std::vector<double> loss_history;  // epoch-mean MSE
};

// Mini-batch training on MSE(model(w), v), pairs reshuffled every epoch from
// the seeded generator. Throws NonFiniteError naming epoch and batch if the
// loss diverges.
AETrainResult train_ae(const vs::VectorSet& vectors,
                       const std::vector<AEPair>& pairs,
                       const AETrainConfig& config);

// Full forward pass on each vector; ids and order preserved.
vs::VectorSet extract_ae_vectors(const AEModel& model,
                                 const vs::VectorSet& vectors,
                                 std::size_t threads = 1);

void save_ae_model(const std::string& path, const AEModel& model,
                   const std::vector<double>& loss_history = {});
AEModel load_ae_model(const std::string& path);

}  // namespace ssv::ae
