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

#include "ssv/siamese/grad_suite.h"

#include <chrono>
#include <functional>
#include <random>

#include "ssv/autoencoder/autoencoder.h"
#include "ssv/nncore/grad_check.h"
#include "ssv/nncore/losses.h"
#include "ssv/nncore/ops.h"
#include "ssv/siamese/models.h"

namespace ssv::siamese {
namespace {

using nn::Tensor;

Tensor randn(const nn::Shape& shape, nn::Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// sum(y * r): a generic scalar readout whose gradient wrt y is r.
double readout(const Tensor& y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

std::vector<nn::GradCheckTarget> param_targets(const nn::ParamRefs& params) {
  std::vector<nn::GradCheckTarget> out;
  for (auto* p : params) out.push_back({p->name, &p->value, &p->grad});
  return out;
}

struct Runner {
  GradSuiteOptions options;
  std::vector<GradSuiteCase> cases;

  void run(const std::string& name, const std::function<double()>& loss,
           const std::vector<nn::GradCheckTarget>& targets, std::size_t max_coords = 0) {
    const auto t0 = std::chrono::steady_clock::now();
    nn::GradCheckOptions o;
    o.epsilon = options.epsilon;
    o.seed = options.seed;
    o.max_coords_per_target = max_coords;
    const auto report = nn::grad_check(loss, targets, o);
    const auto t1 = std::chrono::steady_clock::now();
    cases.push_back({name, report.max_relative_error, report.coordinates_checked,
                     std::chrono::duration<double>(t1 - t0).count()});
  }
};

}  // namespace

std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options) {
  Runner runner{options, {}};
  nn::Rng rng(options.seed);

  {
    Tensor x = randn({2, 5, 6}, rng), w = randn({3, 2, 3, 3}, rng), b = randn({3}, rng);
    const Tensor r = randn({3, 5, 6}, rng);
    Tensor gw(w.shape()), gb(b.shape());
    const Tensor gx = nn::conv2d_backward(x, w, r, 1, gw, gb);
    runner.run("conv2d", [&] { return readout(nn::conv2d(x, w, b, 1), r); },
               {{"input", &x, &gx}, {"weights", &w, &gw}, {"bias", &b, &gb}});
  }
  {
    Tensor x = randn({2, 5, 7}, rng);
    const Tensor r = randn({2, 2, 3}, rng);
    const Tensor gx = nn::maxpool2d_backward(x, r);
    runner.run("maxpool2d", [&] { return readout(nn::maxpool2d(x), r); },
               {{"input", &x, &gx}});
  }
  for (bool batched : {false, true}) {
    const nn::Shape xs = batched ? nn::Shape{3, 4} : nn::Shape{4};
    const nn::Shape ys = batched ? nn::Shape{3, 5} : nn::Shape{5};
    Tensor x = randn(xs, rng), w = randn({5, 4}, rng), b = randn({5}, rng);
    const Tensor target = randn(ys, rng);
    Tensor gw(w.shape()), gb(b.shape());
    const auto l = nn::mse_loss_with_grad(nn::linear(x, w, b), target);
    const Tensor gx = nn::linear_backward(x, w, l.grad, gw, gb);
    runner.run(batched ? "linear_batched+mse" : "linear+mse",
               [&] { return nn::mse_loss(nn::linear(x, w, b), target); },
               {{"input", &x, &gx}, {"weights", &w, &gw}, {"bias", &b, &gb}});
  }
  {
    Tensor x = randn({12}, rng);
    const Tensor r = randn({12}, rng);
    const Tensor gx = nn::relu_backward(x, r);
    runner.run("relu", [&] { return readout(nn::relu(x), r); }, {{"input", &x, &gx}});
  }
  {
    Tensor x = randn({9}, rng, 2.0);
    const Tensor r = randn({9}, rng);
    const Tensor gs = nn::sigmoid_backward(nn::sigmoid(x), r);
    runner.run("sigmoid", [&] { return readout(nn::sigmoid(x), r); }, {{"input", &x, &gs}});
    const Tensor gt = nn::tanh_backward(nn::tanh(x), r);
    runner.run("tanh", [&] { return readout(nn::tanh(x), r); }, {{"input", &x, &gt}});
    const Tensor gm = nn::softmax_backward(nn::softmax(x), r);
    runner.run("softmax", [&] { return readout(nn::softmax(x), r); }, {{"input", &x, &gm}});
    const Tensor gn = nn::l2_normalize_backward(x, nn::l2_normalize(x), r);
    runner.run("l2_normalize", [&] { return readout(nn::l2_normalize(x), r); },
               {{"input", &x, &gn}});
  }
  {
    Tensor h = randn({6, 5}, rng), w = randn({4, 6}, rng, 0.5), b = randn({4}, rng, 0.5),
           v = randn({4}, rng);
    const Tensor r = randn({6}, rng);
    Tensor gw(w.shape()), gb(b.shape()), gv(v.shape());
    const auto fwd = nn::sap_pool(h, {w, b, v});
    const Tensor gh = nn::sap_pool_backward(h, {w, b, v}, fwd, r, {gw, gb, gv});
    runner.run("sap_pool", [&] { return readout(nn::sap_pool(h, {w, b, v}).output, r); },
               {{"input", &h, &gh}, {"w", &w, &gw}, {"b", &b, &gb}, {"v", &v, &gv}});
  }
  {
    Tensor p({3}, std::vector<double>{0.2, 0.55, 0.9});
    const std::vector<double> y = {1.0, 0.0, 1.0};
    Tensor gp({3});
    for (std::size_t i = 0; i < 3; ++i) gp[i] = nn::bce_loss_grad(p[i], y[i]);
    runner.run("bce",
               [&] {
                 double s = 0.0;
                 for (std::size_t i = 0; i < 3; ++i) s += nn::bce_loss(p[i], y[i]);
                 return s;
               },
               {{"p", &p, &gp}});
  }
  {
    // Raw vectors pass through l2_normalize so the perturbed inputs stay unit.
    Tensor a = randn({5}, rng), c = randn({5}, rng), i = randn({5}, rng);
    const double margin = 4.5;
    const auto res = nn::triplet_loss(nn::l2_normalize(a), nn::l2_normalize(c),
                                      nn::l2_normalize(i), margin);
    const Tensor ga = nn::l2_normalize_backward(a, nn::l2_normalize(a), res.grad_anchor);
    const Tensor gc = nn::l2_normalize_backward(c, nn::l2_normalize(c), res.grad_client);
    const Tensor gi = nn::l2_normalize_backward(i, nn::l2_normalize(i), res.grad_impostor);
    runner.run("triplet",
               [&] {
                 return nn::triplet_loss(nn::l2_normalize(a), nn::l2_normalize(c),
                                         nn::l2_normalize(i), margin)
                     .value;
               },
               {{"anchor", &a, &ga}, {"client", &c, &gc}, {"impostor", &i, &gi}});
  }
  {
    ae::AEModel model({6, 5, 4, 5, 6}, options.seed);
    const Tensor x = randn({3, 6}, rng), target = randn({3, 6}, rng);
    ae::AEModel::Trace trace;
    const auto l = nn::mse_loss_with_grad(model.forward(x, &trace), target);
    auto params = model.params();
    nn::zero_grads(params);
    model.backward(trace, l.grad);
    runner.run("autoencoder", [&] { return nn::mse_loss(model.forward(x), target); },
               param_targets(params));
  }
  {
    Encoder enc(EncoderProfile::tiny(8), options.seed);
    Tensor x = randn({8, 16}, rng);
    Encoder::Trace trace;
    const Tensor y = enc.forward(x, &trace);
    const Tensor r = randn(y.shape(), rng);
    auto params = enc.params();
    nn::zero_grads(params);
    const Tensor gx = enc.backward(trace, r);
    auto targets = param_targets(params);
    targets.push_back({"features", &x, &gx});
    runner.run("encoder_tiny_8x16", [&] { return readout(enc.forward(x), r); }, targets);
  }
  {
    DoubleBranchModel model(EncoderProfile::tiny(8), options.seed, /*zero_final_layer=*/false);
    const Tensor a = randn({8, 12}, rng), b = randn({8, 16}, rng);
    DoubleBranchModel::Trace trace;
    const double s = model.forward(a, b, &trace);
    auto params = model.params();
    nn::zero_grads(params);
    model.backward(trace, nn::bce_loss_grad(s, 1.0));
    runner.run("double_branch_tiny",
               [&] { return nn::bce_loss(model.forward(a, b), 1.0); }, param_targets(params));
  }
  {
    TripleBranchModel model(EncoderProfile::tiny(8), options.seed, /*margin=*/4.5);
    const Tensor a = randn({8, 16}, rng), c = randn({8, 12}, rng), i = randn({8, 10}, rng);
    TripleBranchModel::Trace trace;
    model.loss(a, c, i, &trace);
    auto params = model.params();
    nn::zero_grads(params);
    model.backward(trace);
    runner.run("triple_branch_tiny", [&] { return model.loss(a, c, i); },
               param_targets(params));
  }
  {
    Encoder enc(EncoderProfile::tiny(80), options.seed);
    Tensor x = randn({80, 32}, rng);
    Encoder::Trace trace;
    const Tensor y = enc.forward(x, &trace);
    const Tensor r = randn(y.shape(), rng);
    auto params = enc.params();
    nn::zero_grads(params);
    const Tensor gx = enc.backward(trace, r);
    auto targets = param_targets(params);
    targets.push_back({"features", &x, &gx});
    runner.run("encoder_tiny_80x32", [&] { return readout(enc.forward(x), r); }, targets,
               options.wide_encoder_coords);
  }
  return runner.cases;
}

}  // namespace ssv::siamese
