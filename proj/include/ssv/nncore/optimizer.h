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
#include <span>
#include <string>

#include "ssv/nncore/param.h"

namespace ssv::nn {

enum class OptimizerKind { sgd, adam };

// How `lr_decay` is applied. inverse_time: lr_t = lr0 / (1 + decay * t) with
// t the mini-batch step index. weight_decay: constant lr, and decay * p is
// added to every gradient.
enum class DecayMode { inverse_time, weight_decay };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.01;
  double lr_decay = 0.0;
  DecayMode decay_mode = DecayMode::inverse_time;
  std::size_t batch_size = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Adam with lr 1e-4 and the usual moment constants.
  static OptimizerConfig adam();

  // Throws ContractViolation on lr <= 0, negative decay or batch_size 0.
  // A zero learning rate is accepted only with allow_zero_lr (used to freeze
  // a model in tests).
  void validate(bool allow_zero_lr = false) const;
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(DecayMode mode);
DecayMode decay_mode_from_string(const std::string& s);

double effective_learning_rate(const OptimizerConfig& config,
                               std::size_t step_index);

// Applies one update to every parameter from its accumulated gradient, then
// zeroes the gradients. Throws NonFiniteError naming the parameter if any
// gradient entry is NaN or Inf; no parameter is modified in that case.
void optimizer_step(std::span<Param* const> params,
                    const OptimizerConfig& config, std::size_t step_index);

}  // namespace ssv::nn
