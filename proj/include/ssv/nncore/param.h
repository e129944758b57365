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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ssv/nncore/tensor.h"

namespace ssv::nn {

using Rng = std::mt19937_64;

// A trainable tensor with its gradient and optimizer state slots.
struct Param {
  Param() = default;
  Param(std::string name, Shape shape);

  std::string name;
  Tensor value;
  Tensor grad;
  // Adam first and second moments; allocated on the first Adam step.
  Tensor first_moment;
  Tensor second_moment;

  void zero_grad() { grad.fill(0.0); }
};

using ParamRefs = std::vector<Param*>;
using ConstParamRefs = std::vector<const Param*>;

void zero_grads(std::span<Param* const> params);
std::size_t parameter_count(std::span<const Param* const> params);

// Uniform(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), the fan-in Kaiming rule for
// ReLU networks.
void kaiming_uniform(Param& param, std::size_t fan_in, Rng& rng);
void uniform_init(Param& param, double bound, Rng& rng);

}  // namespace ssv::nn
