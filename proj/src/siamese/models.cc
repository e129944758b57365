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

#include "ssv/siamese/models.h"

#include <fstream>

#include "ssv/error.h"
#include "ssv/nncore/checkpoint.h"
#include "ssv/nncore/losses.h"

namespace ssv::siamese {

DoubleBranchModel::DoubleBranchModel(const EncoderProfile& profile,
                                     std::uint64_t seed, bool zero_final_layer)
    : encoder_(profile, seed) {
  nn::Rng rng(seed ^ 0x5bd1e9955bd1e995ULL);
  std::vector<std::size_t> sizes{2 * profile.embedding_dim};
  sizes.insert(sizes.end(), profile.head.begin(), profile.head.end());
  sizes.push_back(1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::string tag = "head.fc" + std::to_string(l + 1);
    head_w_.emplace_back(tag + ".weight", nn::Shape{sizes[l + 1], sizes[l]});
    head_b_.emplace_back(tag + ".bias", nn::Shape{sizes[l + 1]});
    const bool last = l + 2 == sizes.size();
    if (!(last && zero_final_layer)) nn::kaiming_uniform(head_w_.back(), sizes[l], rng);
  }
}

double DoubleBranchModel::forward(const nn::Tensor& features_a,
                                  const nn::Tensor& features_b,
                                  Trace* trace) const {
  const nn::Tensor ea =
      encoder_.forward(features_a, trace ? &trace->branch_a : nullptr);
  const nn::Tensor eb =
      encoder_.forward(features_b, trace ? &trace->branch_b : nullptr);
  nn::Tensor h({ea.size() + eb.size()});
  std::copy(ea.data().begin(), ea.data().end(), h.data().begin());
  std::copy(eb.data().begin(), eb.data().end(), h.data().begin() + ea.size());
  if (trace) {
    trace->head_in.clear();
    trace->head_out.clear();
  }
  for (std::size_t l = 0; l < head_w_.size(); ++l) {
    nn::Tensor z = nn::linear(h, head_w_[l].value, head_b_[l].value);
    if (trace) {
      trace->head_in.push_back(std::move(h));
      trace->head_out.push_back(z);
    }
    h = (l + 1 < head_w_.size()) ? nn::relu(z) : std::move(z);
  }
  const double score = nn::sigmoid(h[0]);
  if (trace) trace->score = score;
  return score;
}

void DoubleBranchModel::backward(const Trace& trace, double grad_score) {
  nn::Tensor g = nn::Tensor::vector({grad_score * trace.score * (1.0 - trace.score)});
  for (std::size_t l = head_w_.size(); l-- > 0;) {
    if (l + 1 < head_w_.size()) g = nn::relu_backward(trace.head_out[l], g);
    g = nn::linear_backward(trace.head_in[l], head_w_[l].value, g,
                            head_w_[l].grad, head_b_[l].grad);
  }
  const std::size_t e = profile().embedding_dim;
  nn::Tensor ga({e}), gb({e});
  std::copy_n(g.data().begin(), e, ga.data().begin());
  std::copy_n(g.data().begin() + e, e, gb.data().begin());
  encoder_.backward(trace.branch_a, ga);
  encoder_.backward(trace.branch_b, gb);
}

nn::ParamRefs DoubleBranchModel::params() {
  nn::ParamRefs out = encoder_.params();
  for (std::size_t l = 0; l < head_w_.size(); ++l) {
    out.push_back(&head_w_[l]);
    out.push_back(&head_b_[l]);
  }
  return out;
}

nn::ConstParamRefs DoubleBranchModel::params() const {
  auto refs = const_cast<DoubleBranchModel*>(this)->params();
  return nn::ConstParamRefs(refs.begin(), refs.end());
}

TripleBranchModel::TripleBranchModel(const EncoderProfile& profile,
                                     std::uint64_t seed, double margin)
    : encoder_(profile, seed), margin_(margin) {
  if (!(margin >= 0.0)) {
    throw ContractViolation("triplet margin must be >= 0");
  }
}

nn::Tensor TripleBranchModel::embed(const nn::Tensor& features,
                                    EmbedTrace* trace) const {
  nn::Tensor raw = encoder_.forward(features, trace ? &trace->encoder : nullptr);
  nn::Tensor unit = nn::l2_normalize(raw);
  if (trace) {
    trace->raw = std::move(raw);
    trace->unit = unit;
  }
  return unit;
}

double TripleBranchModel::loss(const nn::Tensor& anchor,
                               const nn::Tensor& client,
                               const nn::Tensor& impostor, Trace* trace) const {
  Trace local;
  Trace& t = trace ? *trace : local;
  const nn::Tensor a = embed(anchor, &t.anchor);
  const nn::Tensor c = embed(client, &t.client);
  const nn::Tensor i = embed(impostor, &t.impostor);
  t.loss = nn::triplet_loss(a, c, i, margin_).value;
  return t.loss;
}

void TripleBranchModel::backward(const Trace& trace, double scale) {
  const auto r = nn::triplet_loss(trace.anchor.unit, trace.client.unit,
                                  trace.impostor.unit, margin_);
  if (r.value == 0.0) return;
  auto branch = [&](const EmbedTrace& et, nn::Tensor g_unit) {
    for (double& g : g_unit.data()) g *= scale;
    encoder_.backward(et.encoder, nn::l2_normalize_backward(et.raw, et.unit, g_unit));
  };
  branch(trace.anchor, r.grad_anchor);
  branch(trace.client, r.grad_client);
  branch(trace.impostor, r.grad_impostor);
}

namespace {

void write_sidecar(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path + ".json", std::ios::trunc);
  if (!out) throw IoError("cannot write model sidecar", path + ".json");
  out << j.dump(2) << '\n';
}

}  // namespace

void save_double(const std::string& path, const DoubleBranchModel& model,
                 const nlohmann::json& train_config) {
  nlohmann::json meta{{"kind", "double_branch"},
                      {"profile", model.profile().to_json()}};
  nn::save_checkpoint(path, model.params(), meta);
  meta["train_config"] = train_config;
  write_sidecar(path, meta);
}

DoubleBranchModel load_double(const std::string& path) {
  const auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("kind", "") != "double_branch") {
    throw ParseError("checkpoint is not a double-branch model: " + path, 0);
  }
  DoubleBranchModel model(EncoderProfile::from_json(ck.meta.at("profile")));
  nn::restore_params(ck, model.params());
  return model;
}

void save_triple(const std::string& path, const TripleBranchModel& model,
                 const nlohmann::json& train_config) {
  nlohmann::json meta{{"kind", "triple_branch"},
                      {"profile", model.profile().to_json()},
                      {"margin", model.margin()}};
  nn::save_checkpoint(path, model.params(), meta);
  meta["train_config"] = train_config;
  write_sidecar(path, meta);
}

TripleBranchModel load_triple(const std::string& path) {
  const auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("kind", "") != "triple_branch") {
    throw ParseError("checkpoint is not a triple-branch model: " + path, 0);
  }
  TripleBranchModel model(EncoderProfile::from_json(ck.meta.at("profile")), 0,
                          ck.meta.at("margin").get<double>());
  nn::restore_params(ck, model.params());
  return model;
}

}  // namespace ssv::siamese
