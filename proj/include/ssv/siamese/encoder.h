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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssv/nncore/ops.h"
#include "ssv/nncore/param.h"

namespace ssv::siamese {

// Layer widths of the encoder and of the double-branch head.
struct EncoderProfile {
  std::string name = "full";
  std::size_t mel_bins = 80;
  std::array<std::size_t, 3> channels = {128, 256, 512};
  std::size_t attention_dim = 128;
  std::size_t fc1 = 1024;
  std::size_t embedding_dim = 400;
  std::array<std::size_t, 4> head = {1024, 512, 256, 64};

  // Three 3x3 conv blocks of 128/256/512 channels, SAP, fc 1024 -> 400.
  static EncoderProfile full();
  // Every width divided by 16, for gradient checks and desk-scale runs.
  static EncoderProfile tiny(std::size_t mel_bins = 8);
  static EncoderProfile by_name(const std::string& name, std::size_t mel_bins);

  // Frequency rows left after three floor-halving pools.
  std::size_t pooled_bins() const { return mel_bins / 8; }
  // Dimension of each frame entering attention pooling.
  std::size_t frame_dim() const { return channels[2] * pooled_bins(); }

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderProfile from_json(const nlohmann::json& j);
};

inline constexpr std::size_t kMinFrames = 8;

// conv1-1, conv1-2, pool, conv2-1, conv2-2, pool, conv3-1, conv3-2, pool
// with ReLU after every conv; self-attention pooling over time; fc-1 with
// ReLU; fc-2 linear. Input is bins x frames.
class Encoder {
 public:
  explicit Encoder(const EncoderProfile& profile, std::uint64_t seed = 0);

  Encoder(const Encoder& other);
  Encoder& operator=(const Encoder& other);
  Encoder(Encoder&&) noexcept = default;
  Encoder& operator=(Encoder&&) noexcept = default;

  const EncoderProfile& profile() const { return profile_; }

  struct Trace {
    std::array<nn::Tensor, 6> conv_in;
    std::array<nn::Tensor, 6> conv_out;  // pre-ReLU
    std::array<nn::Tensor, 3> pool_in;
    std::array<nn::Tensor, 3> pool_out;
    nn::Tensor sap_in;  // frame_dim x T
    nn::SapForward sap;
    nn::Tensor fc1_out;  // pre-ReLU
    nn::Tensor fc2_in;
    nn::Tensor output;
  };

  // Throws ShapeError for a bin count other than the profile's, or fewer
  // than kMinFrames frames.
  nn::Tensor forward(const nn::Tensor& features, Trace* trace = nullptr) const;
  // Accumulates parameter gradients; returns d loss / d features.
  nn::Tensor backward(const Trace& trace, const nn::Tensor& grad_output);

  nn::ParamRefs params();
  nn::ConstParamRefs params() const;

  nn::Param& conv_weight(std::size_t i) { return conv_w_[i]; }
  nn::Param& conv_bias(std::size_t i) { return conv_b_[i]; }
  nn::Param& fc2_bias() { return fc_b_[1]; }

 private:
  EncoderProfile profile_;
  std::vector<nn::Param> conv_w_, conv_b_;
  nn::Param sap_w_, sap_b_, sap_v_;
  std::vector<nn::Param> fc_w_, fc_b_;
};

}  // namespace ssv::siamese
