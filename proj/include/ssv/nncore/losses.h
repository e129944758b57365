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

#include "ssv/nncore/tensor.h"

namespace ssv::nn {

struct LossWithGrad {
  double value = 0.0;
  Tensor grad;  // d value / d prediction
};

// Mean of squared elementwise differences.
double mse_loss(const Tensor& pred, const Tensor& target);
LossWithGrad mse_loss_with_grad(const Tensor& pred, const Tensor& target);

inline constexpr double kBceClamp = 1e-7;

// -[y ln p + (1 - y) ln(1 - p)] with p clamped to [1e-7, 1 - 1e-7]. The
// gradient is zero where the clamp is active.
double bce_loss(double p, double label);
double bce_loss_grad(double p, double label);

inline constexpr double kUnitNormTolerance = 1e-6;

struct TripletLossResult {
  double value = 0.0;
  Tensor grad_anchor;
  Tensor grad_client;
  Tensor grad_impostor;
};

// max(0, |a - c|^2 - |a - i|^2 + margin) on unit vectors. Throws
// ContractViolation for inputs whose norm is off 1 by more than 1e-6.
TripletLossResult triplet_loss(const Tensor& anchor, const Tensor& client,
                               const Tensor& impostor, double margin);

}  // namespace ssv::nn
