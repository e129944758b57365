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
#include <string>
#include <vector>

namespace ssv::siamese {

struct GradSuiteOptions {
  double epsilon = 1e-5;
  std::uint64_t seed = 7;
  // Coordinates sampled per tensor for the 80-bin encoder case; the small
  // cases check every coordinate.
  std::size_t wide_encoder_coords = 64;
};

struct GradSuiteCase {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  double seconds = 0.0;
};

// Central-difference checks of every layer, every loss, the autoencoder and
// both siamese models (tiny profile), plus the tiny encoder on 80 x 32.
std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options = {});

}  // namespace ssv::siamese
