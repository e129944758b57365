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

#include "ssv/siamese/encoder.h"

#include <cmath>

#include "ssv/error.h"

namespace ssv::siamese {

EncoderProfile EncoderProfile::full() { return EncoderProfile{}; }

EncoderProfile EncoderProfile::tiny(std::size_t mel_bins) {
  EncoderProfile p;
  p.name = "tiny";
  p.mel_bins = mel_bins;
  p.channels = {8, 16, 32};
  p.attention_dim = 8;
  p.fc1 = 64;
  p.embedding_dim = 25;
  p.head = {64, 32, 16, 4};
  return p;
}

EncoderProfile EncoderProfile::by_name(const std::string& name,
                                       std::size_t mel_bins) {
  EncoderProfile p;
  if (name == "full") {
    p = full();
    p.mel_bins = mel_bins;
  } else if (name == "tiny") {
    p = tiny(mel_bins);
  } else {
    throw ContractViolation("unknown encoder profile '" + name + "'");
  }
  p.validate();
  return p;
}

void EncoderProfile::validate() const {
  if (pooled_bins() < 1) {
    throw ContractViolation("encoder needs at least 8 mel bins, profile has " +
                            std::to_string(mel_bins));
  }
  for (auto c : channels) {
    if (c == 0) throw ContractViolation("encoder channel width must be positive");
  }
  if (attention_dim == 0 || fc1 == 0 || embedding_dim == 0) {
    throw ContractViolation("encoder widths must be positive");
  }
  for (auto h : head) {
    if (h == 0) throw ContractViolation("head widths must be positive");
  }
}

nlohmann::json EncoderProfile::to_json() const {
  return {{"name", name},         {"mel_bins", mel_bins},
          {"channels", channels}, {"attention_dim", attention_dim},
          {"fc1", fc1},           {"embedding_dim", embedding_dim},
          {"head", head}};
}

EncoderProfile EncoderProfile::from_json(const nlohmann::json& j) {
  EncoderProfile p;
  p.name = j.at("name").get<std::string>();
  p.mel_bins = j.at("mel_bins").get<std::size_t>();
  p.channels = j.at("channels").get<std::array<std::size_t, 3>>();
  p.attention_dim = j.at("attention_dim").get<std::size_t>();
  p.fc1 = j.at("fc1").get<std::size_t>();
  p.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  p.head = j.at("head").get<std::array<std::size_t, 4>>();
  p.validate();
  return p;
}

Encoder::Encoder(const EncoderProfile& profile, std::uint64_t seed)
    : profile_(profile) {
  profile_.validate();
  nn::Rng rng(seed);
  std::size_t in = 1;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t out = profile_.channels[i / 2];
    const std::string tag =
        "enc.conv" + std::to_string(i / 2 + 1) + "_" + std::to_string(i % 2 + 1);
    conv_w_.emplace_back(tag + ".weight", nn::Shape{out, in, 3, 3});
    conv_b_.emplace_back(tag + ".bias", nn::Shape{out});
    nn::kaiming_uniform(conv_w_.back(), in * 9, rng);
    in = out;
  }
  const std::size_t d = profile_.frame_dim();
  const std::size_t da = profile_.attention_dim;
  sap_w_ = nn::Param("enc.sap.w", {da, d});
  sap_b_ = nn::Param("enc.sap.b", {da});
  sap_v_ = nn::Param("enc.sap.v", {da});
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  nn::uniform_init(sap_w_, bound, rng);
  nn::uniform_init(sap_v_, bound, rng);

  fc_w_.emplace_back("enc.fc1.weight", nn::Shape{profile_.fc1, d});
  fc_b_.emplace_back("enc.fc1.bias", nn::Shape{profile_.fc1});
  nn::kaiming_uniform(fc_w_.back(), d, rng);
  fc_w_.emplace_back("enc.fc2.weight",
                     nn::Shape{profile_.embedding_dim, profile_.fc1});
  fc_b_.emplace_back("enc.fc2.bias", nn::Shape{profile_.embedding_dim});
  nn::kaiming_uniform(fc_w_.back(), profile_.fc1, rng);
}

Encoder::Encoder(const Encoder& other) = default;
Encoder& Encoder::operator=(const Encoder& other) = default;

nn::ParamRefs Encoder::params() {
  nn::ParamRefs out;
  for (std::size_t i = 0; i < 6; ++i) {
    out.push_back(&conv_w_[i]);
    out.push_back(&conv_b_[i]);
  }
  out.push_back(&sap_w_);
  out.push_back(&sap_b_);
  out.push_back(&sap_v_);
  for (std::size_t i = 0; i < 2; ++i) {
    out.push_back(&fc_w_[i]);
    out.push_back(&fc_b_[i]);
  }
  return out;
}

nn::ConstParamRefs Encoder::params() const {
  auto refs = const_cast<Encoder*>(this)->params();
  return nn::ConstParamRefs(refs.begin(), refs.end());
}

nn::Tensor Encoder::forward(const nn::Tensor& features, Trace* trace) const {
  nn::require_rank(features, 2, "encoder input");
  if (features.dim(0) != profile_.mel_bins) {
    throw ShapeError("encoder expects " + std::to_string(profile_.mel_bins) +
                     " mel bins, got " + std::to_string(features.dim(0)));
  }
  if (features.dim(1) < kMinFrames) {
    throw ShapeError("encoder needs at least " + std::to_string(kMinFrames) +
                     " frames, got " + std::to_string(features.dim(1)));
  }
  Trace local;
  Trace& t = trace ? *trace : local;
  const bool keep = trace != nullptr;

  nn::Tensor x = features.reshaped({1, features.dim(0), features.dim(1)});
  for (std::size_t block = 0; block < 3; ++block) {
    for (std::size_t j = 0; j < 2; ++j) {
      const std::size_t i = 2 * block + j;
      nn::Tensor z = nn::conv2d(x, conv_w_[i].value, conv_b_[i].value, 1);
      if (keep) {
        t.conv_in[i] = std::move(x);
        t.conv_out[i] = z;
      }
      x = nn::relu(z);
    }
    nn::Tensor pooled = nn::maxpool2d(x);
    if (keep) {
      t.pool_in[block] = std::move(x);
      t.pool_out[block] = pooled;
    }
    x = std::move(pooled);
  }
  const std::size_t frames = x.dim(2);
  nn::Tensor h = std::move(x).reshaped({profile_.frame_dim(), frames});
  nn::SapForward sap =
      nn::sap_pool(h, nn::SapParams{sap_w_.value, sap_b_.value, sap_v_.value});
  nn::Tensor z1 = nn::linear(sap.output, fc_w_[0].value, fc_b_[0].value);
  nn::Tensor a1 = nn::relu(z1);
  nn::Tensor out = nn::linear(a1, fc_w_[1].value, fc_b_[1].value);
  if (keep) {
    t.sap_in = std::move(h);
    t.sap = std::move(sap);
    t.fc1_out = std::move(z1);
    t.fc2_in = std::move(a1);
    t.output = out;
  }
  return out;
}

nn::Tensor Encoder::backward(const Trace& t, const nn::Tensor& grad_output) {
  nn::Tensor g = nn::linear_backward(t.fc2_in, fc_w_[1].value, grad_output,
                                     fc_w_[1].grad, fc_b_[1].grad);
  g = nn::relu_backward(t.fc1_out, g);
  g = nn::linear_backward(t.sap.output, fc_w_[0].value, g, fc_w_[0].grad,
                          fc_b_[0].grad);
  g = nn::sap_pool_backward(
      t.sap_in, nn::SapParams{sap_w_.value, sap_b_.value, sap_v_.value}, t.sap,
      g, nn::SapGrads{sap_w_.grad, sap_b_.grad, sap_v_.grad});
  g = std::move(g).reshaped(t.pool_out[2].shape());
  for (std::size_t block = 3; block-- > 0;) {
    g = nn::maxpool2d_backward(t.pool_in[block], g);
    for (std::size_t j = 2; j-- > 0;) {
      const std::size_t i = 2 * block + j;
      g = nn::relu_backward(t.conv_out[i], g);
      g = nn::conv2d_backward(t.conv_in[i], conv_w_[i].value, g, 1,
                              conv_w_[i].grad, conv_b_[i].grad);
    }
  }
  const nn::Shape input_shape{g.dim(1), g.dim(2)};
  return std::move(g).reshaped(input_shape);
}

}  // namespace ssv::siamese
