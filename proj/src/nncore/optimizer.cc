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

#include "ssv/nncore/optimizer.h"

#include <cmath>

#include "ssv/error.h"

namespace ssv::nn {

OptimizerConfig OptimizerConfig::adam() {
  OptimizerConfig c;
  c.kind = OptimizerKind::adam;
  c.learning_rate = 1e-4;
  c.lr_decay = 0.0;
  return c;
}

void OptimizerConfig::validate(bool allow_zero_lr) const {
  if (!(learning_rate > 0.0) && !(allow_zero_lr && learning_rate == 0.0)) {
    throw ContractViolation("learning_rate must be positive");
  }
  if (!(lr_decay >= 0.0)) throw ContractViolation("lr_decay must be >= 0");
  if (batch_size == 0) throw ContractViolation("batch_size must be >= 1");
  if (kind == OptimizerKind::adam &&
      !(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0 && adam_eps > 0.0)) {
    throw ContractViolation("invalid Adam constants");
  }
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ContractViolation("unknown optimizer '" + s + "'");
}

std::string to_string(DecayMode mode) {
  return mode == DecayMode::inverse_time ? "inverse_time" : "weight_decay";
}

DecayMode decay_mode_from_string(const std::string& s) {
  if (s == "inverse_time") return DecayMode::inverse_time;
  if (s == "weight_decay") return DecayMode::weight_decay;
  throw ContractViolation("unknown decay mode '" + s + "'");
}

double effective_learning_rate(const OptimizerConfig& config,
                               std::size_t step_index) {
  if (config.decay_mode == DecayMode::weight_decay) return config.learning_rate;
  return config.learning_rate /
         (1.0 + config.lr_decay * static_cast<double>(step_index));
}

void optimizer_step(std::span<Param* const> params,
                    const OptimizerConfig& config, std::size_t step_index) {
  for (const Param* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      if (!std::isfinite(p->grad[i])) {
        throw NonFiniteError("non-finite gradient in '" + p->name +
                             "' at index " + std::to_string(i) + " (step " +
                             std::to_string(step_index) + ")");
      }
    }
  }

  const double lr = effective_learning_rate(config, step_index);
  const double wd =
      config.decay_mode == DecayMode::weight_decay ? config.lr_decay : 0.0;

  for (Param* p : params) {
    auto& value = p->value;
    auto& grad = p->grad;
    if (config.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        value[i] -= lr * (grad[i] + wd * value[i]);
      }
    } else {
      if (p->first_moment.shape() != value.shape()) {
        p->first_moment = Tensor(value.shape());
        p->second_moment = Tensor(value.shape());
      }
      const double t = static_cast<double>(step_index + 1);
      const double b1 = config.adam_beta1, b2 = config.adam_beta2;
      const double c1 = 1.0 - std::pow(b1, t);
      const double c2 = 1.0 - std::pow(b2, t);
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i] + wd * value[i];
        double& m = p->first_moment[i];
        double& v = p->second_moment[i];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        value[i] -= lr * (m / c1) / (std::sqrt(v / c2) + config.adam_eps);
      }
    }
    grad.fill(0.0);
  }
}

}  // namespace ssv::nn
