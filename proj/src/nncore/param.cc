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

#include "ssv/nncore/param.h"

#include <cmath>

namespace ssv::nn {

Param::Param(std::string name_in, Shape shape)
    : name(std::move(name_in)), value(shape), grad(shape) {}

void zero_grads(std::span<Param* const> params) {
  for (Param* p : params) p->zero_grad();
}

std::size_t parameter_count(std::span<const Param* const> params) {
  std::size_t n = 0;
  for (const Param* p : params) n += p->value.size();
  return n;
}

void kaiming_uniform(Param& param, std::size_t fan_in, Rng& rng) {
  uniform_init(param, std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
}

void uniform_init(Param& param, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : param.value.data()) v = dist(rng);
}

}  // namespace ssv::nn
