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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssv/vectorspace/vectors.h"

namespace ssv::vs {

struct UtteranceInfo {
  std::string id;
  std::optional<std::string> speaker;
};

struct SubsetSplit {
  std::vector<std::string> subset_a;
  std::vector<std::string> subset_b;
};

// Seeded disjoint split. When every entry carries a speaker label the split
// is made over speakers, so no speaker straddles A and B; otherwise over
// utterances. round(fraction * n) units (at least one per side when n >= 2)
// go to A. Ids keep manifest order within each subset. Throws
// ContractViolation for an empty manifest or fraction outside (0, 1).
SubsetSplit split_subsets(std::span<const UtteranceInfo> manifest,
                          double fraction, std::uint64_t seed);

// Vectors of `all` whose ids are listed, in list order. Throws
// ContractViolation for an id with no vector.
VectorSet select_vectors(const VectorSet& all,
                         const std::vector<std::string>& ids);

}  // namespace ssv::vs
