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

#include "ssv/nncore/tensor.h"

// Forward/backward pairs for the layers used by the speaker models. Every
// backward function returns the gradient with respect to the layer input and
// *accumulates* (+=) parameter gradients into the tensors it is handed, so
// shared parameters (siamese branches) collect contributions from every use.
namespace ssv::nn {

// Stride-1 2-D convolution. input: C_in x H x W, weights: C_out x C_in x
// kH x kW, bias: C_out. Zero padding of `padding` cells on each side gives
// an output of C_out x (H + 2p - kH + 1) x (W + 2p - kW + 1).
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              std::size_t padding = 1);
Tensor conv2d_backward(const Tensor& input, const Tensor& weights,
                       const Tensor& grad_output, std::size_t padding,
                       Tensor& grad_weights, Tensor& grad_bias);

// 2x2 max pooling with stride 2. Odd trailing rows/columns are dropped.
// Ties resolve to the first element in row-major window order.
Tensor maxpool2d(const Tensor& input);
Tensor maxpool2d_backward(const Tensor& input, const Tensor& grad_output);

// y = W x + b for x of shape [in] or [batch, in]; W is [out, in].
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias);
Tensor linear_backward(const Tensor& input, const Tensor& weights,
                       const Tensor& grad_output, Tensor& grad_weights,
                       Tensor& grad_bias);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_output);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
// Takes the forward *output*.
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_output);

Tensor tanh(const Tensor& x);
// Takes the forward *output*.
Tensor tanh_backward(const Tensor& y, const Tensor& grad_output);

// Softmax over a rank-1 tensor.
Tensor softmax(const Tensor& x);
// Takes the forward *output*.
Tensor softmax_backward(const Tensor& y, const Tensor& grad_output);

// Threshold below which l2_normalize refuses its input.
inline constexpr double kMinNormForNormalize = 1e-12;

// x / ||x||. Throws DegenerateInputError when ||x|| < kMinNormForNormalize.
Tensor l2_normalize(const Tensor& x);
Tensor l2_normalize_backward(const Tensor& x, const Tensor& y,
                             const Tensor& grad_output);

// Self-attention pooling over frames: h is D x T (one column per frame),
// attention scores s_t = v . tanh(W h_t + b), alpha = softmax(s) and the
// output is sum_t alpha_t h_t.
struct SapParams {
  const Tensor& w;  // D_a x D
  const Tensor& b;  // D_a
  const Tensor& v;  // D_a
};

struct SapForward {
  Tensor output;   // D
  Tensor weights;  // alpha, T
  Tensor hidden;   // tanh(W h + b), D_a x T
};

SapForward sap_pool(const Tensor& h, const SapParams& params);

struct SapGrads {
  Tensor& w;
  Tensor& b;
  Tensor& v;
};

Tensor sap_pool_backward(const Tensor& h, const SapParams& params,
                         const SapForward& forward, const Tensor& grad_output,
                         const SapGrads& grads);

}  // namespace ssv::nn
