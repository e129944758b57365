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

#include "ssv/nncore/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssv/error.h"
#include "ssv/nncore/param.h"

namespace ssv::nn {
namespace {

std::vector<std::size_t> pick_coordinates(std::size_t n, std::size_t cap,
                                          Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (cap == 0 || cap >= n) return idx;
  for (std::size_t i = 0; i < cap; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckTarget> targets,
                           const GradCheckOptions& options) {
  const double eps = options.epsilon;
  if (!(eps >= 1e-6 && eps <= 1e-4)) {
    throw ContractViolation("grad_check epsilon must lie in [1e-6, 1e-4]");
  }
  Rng rng(options.seed);
  GradCheckReport report;
  for (const auto& target : targets) {
    if (target.value->shape() != target.analytic->shape()) {
      throw ShapeError("grad_check: gradient shape mismatch for '" +
                       target.name + "'");
    }
    GradCheckTargetReport tr;
    tr.name = target.name;
    auto& x = target.value->storage();
    for (std::size_t i :
         pick_coordinates(x.size(), options.max_coords_per_target, rng)) {
      const double saved = x[i];
      x[i] = saved + eps;
      const double up = loss();
      x[i] = saved - eps;
      const double down = loss();
      x[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = (*target.analytic)[i];
      const double denom = std::max(
          {std::abs(analytic), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++tr.coordinates_checked;
      if (rel > tr.max_relative_error || tr.coordinates_checked == 1) {
        tr.max_relative_error = rel;
        tr.worst_index = i;
        tr.worst_analytic = analytic;
        tr.worst_numeric = numeric;
      }
    }
    report.coordinates_checked += tr.coordinates_checked;
    report.max_relative_error =
        std::max(report.max_relative_error, tr.max_relative_error);
    report.targets.push_back(std::move(tr));
  }
  return report;
}

}  // namespace ssv::nn
