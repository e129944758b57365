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

#include "ssv/nncore/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssv/error.h"

namespace ssv::nn {
namespace {

void require_equal_shapes(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + " differ");
  }
}

double squared_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void require_unit(const Tensor& t, const char* what) {
  double s = 0.0;
  for (double x : t.data()) s += x * x;
  const double norm = std::sqrt(s);
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw ContractViolation(std::string("triplet_loss: ") + what +
                            " has norm " + std::to_string(norm) +
                            ", expected a unit vector");
  }
}

}  // namespace

double mse_loss(const Tensor& pred, const Tensor& target) {
  require_equal_shapes(pred, target, "mse_loss");
  return squared_distance(pred, target) / static_cast<double>(pred.size());
}

LossWithGrad mse_loss_with_grad(const Tensor& pred, const Tensor& target) {
  require_equal_shapes(pred, target, "mse_loss");
  LossWithGrad out{0.0, Tensor(pred.shape())};
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.value += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.value /= n;
  return out;
}

double bce_loss(double p, double label) {
  const double q = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  return -(label * std::log(q) + (1.0 - label) * std::log(1.0 - q));
}

double bce_loss_grad(double p, double label) {
  if (p < kBceClamp || p > 1.0 - kBceClamp) return 0.0;
  return -label / p + (1.0 - label) / (1.0 - p);
}

TripletLossResult triplet_loss(const Tensor& anchor, const Tensor& client,
                               const Tensor& impostor, double margin) {
  require_equal_shapes(anchor, client, "triplet_loss");
  require_equal_shapes(anchor, impostor, "triplet_loss");
  require_unit(anchor, "anchor");
  require_unit(client, "client");
  require_unit(impostor, "impostor");

  TripletLossResult r{0.0, Tensor(anchor.shape()), Tensor(anchor.shape()),
                      Tensor(anchor.shape())};
  const double hinge = squared_distance(anchor, client) -
                       squared_distance(anchor, impostor) + margin;
  if (hinge <= 0.0) return r;
  r.value = hinge;
  // d/da = 2(a - c) - 2(a - i) = 2(i - c); d/dc = -2(a - c); d/di = 2(a - i).
  for (std::size_t k = 0; k < anchor.size(); ++k) {
    r.grad_anchor[k] = 2.0 * (impostor[k] - client[k]);
    r.grad_client[k] = -2.0 * (anchor[k] - client[k]);
    r.grad_impostor[k] = 2.0 * (anchor[k] - impostor[k]);
  }
  return r;
}

}  // namespace ssv::nn
