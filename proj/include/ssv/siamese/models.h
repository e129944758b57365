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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssv/siamese/encoder.h"

namespace ssv::siamese {

// Two branches sharing one encoder; the concatenated embeddings feed five
// fully connected layers (ReLU between) ending in a sigmoid score.
class DoubleBranchModel {
 public:
  // With zero_final_layer the last head layer starts at zero, so every
  // initial score is exactly 0.5.
  explicit DoubleBranchModel(const EncoderProfile& profile,
                             std::uint64_t seed = 0,
                             bool zero_final_layer = true);

  struct Trace {
    Encoder::Trace branch_a, branch_b;
    std::vector<nn::Tensor> head_in;
    std::vector<nn::Tensor> head_out;  // pre-activation
    double score = 0.0;
  };

  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  const EncoderProfile& profile() const { return encoder_.profile(); }

  // Score in (0, 1) that a and b share a speaker.
  double forward(const nn::Tensor& features_a, const nn::Tensor& features_b,
                 Trace* trace = nullptr) const;
  // Accumulates gradients from d loss / d score.
  void backward(const Trace& trace, double grad_score);

  nn::ParamRefs params();
  nn::ConstParamRefs params() const;

  nn::Param& head_weight(std::size_t i) { return head_w_[i]; }
  nn::Param& head_bias(std::size_t i) { return head_b_[i]; }

 private:
  Encoder encoder_;
  std::vector<nn::Param> head_w_, head_b_;
};

// One encoder followed by l2 normalisation, trained with a triplet hinge.
class TripleBranchModel {
 public:
  explicit TripleBranchModel(const EncoderProfile& profile,
                             std::uint64_t seed = 0, double margin = 0.2);

  struct EmbedTrace {
    Encoder::Trace encoder;
    nn::Tensor raw;
    nn::Tensor unit;
  };

  struct Trace {
    EmbedTrace anchor, client, impostor;
    double loss = 0.0;
  };

  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  const EncoderProfile& profile() const { return encoder_.profile(); }
  double margin() const { return margin_; }
  void set_margin(double m) { margin_ = m; }

  // Unit-norm embedding.
  nn::Tensor embed(const nn::Tensor& features, EmbedTrace* trace = nullptr) const;

  double loss(const nn::Tensor& anchor, const nn::Tensor& client,
              const nn::Tensor& impostor, Trace* trace = nullptr) const;
  // Accumulates scale * gradient of the triplet loss recorded in `trace`.
  void backward(const Trace& trace, double scale = 1.0);

  nn::ParamRefs params() { return encoder_.params(); }
  nn::ConstParamRefs params() const { return encoder_.params(); }

 private:
  Encoder encoder_;
  double margin_;
};

// Checkpoint plus "<path>.json" sidecar with profile and training config.
void save_double(const std::string& path, const DoubleBranchModel& model,
                 const nlohmann::json& train_config = {});
DoubleBranchModel load_double(const std::string& path);
void save_triple(const std::string& path, const TripleBranchModel& model,
                 const nlohmann::json& train_config = {});
TripleBranchModel load_triple(const std::string& path);

}  // namespace ssv::siamese
