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
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ssv/nncore/tensor.h"

namespace ssv::nn {

// One tensor to perturb together with the analytic gradient already computed
// for it at the current point.
struct GradCheckTarget {
  std::string name;
  Tensor* value;
  const Tensor* analytic;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  // 0 checks every coordinate; otherwise a seeded random subset of at most
  // this many coordinates per target.
  std::size_t max_coords_per_target = 0;
  std::uint64_t seed = 0;
  // Relative error is |a - n| / max(|a|, |n|, denominator_floor).
  double denominator_floor = 1e-6;
};

struct GradCheckTargetReport {
  std::string name;
  std::size_t coordinates_checked = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::vector<GradCheckTargetReport> targets;
};

// Compares each analytic gradient against the central difference
// (f(x + eps) - f(x - eps)) / 2 eps. `loss` must be deterministic; every
// perturbed coordinate is restored before returning. Throws
// ContractViolation for epsilon outside [1e-6, 1e-4].
GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckTarget> targets,
                           const GradCheckOptions& options = {});

}  // namespace ssv::nn
