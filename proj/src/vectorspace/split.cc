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

#include "ssv/vectorspace/split.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>

#include "ssv/error.h"

namespace ssv::vs {

SubsetSplit split_subsets(std::span<const UtteranceInfo> manifest,
                          double fraction, std::uint64_t seed) {
  if (manifest.empty()) throw ContractViolation("split_subsets: empty manifest");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractViolation("split_subsets: fraction must lie in (0, 1)");
  }
  const bool by_speaker =
      std::all_of(manifest.begin(), manifest.end(),
                  [](const UtteranceInfo& u) { return u.speaker.has_value(); });

  auto unit_of = [&](const UtteranceInfo& u) -> const std::string& {
    return by_speaker ? *u.speaker : u.id;
  };
  const std::set<std::string> unique_units = [&] {
    std::set<std::string> s;
    for (const auto& u : manifest) s.insert(unit_of(u));
    return s;
  }();
  std::vector<std::string> units(unique_units.begin(), unique_units.end());

  std::mt19937_64 rng(seed);
  for (std::size_t i = units.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(units[i - 1], units[pick(rng)]);
  }
  std::size_t n_a =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(units.size())));
  if (units.size() >= 2) n_a = std::clamp<std::size_t>(n_a, 1, units.size() - 1);

  std::set<std::string> in_a(units.begin(), units.begin() + static_cast<long>(n_a));
  SubsetSplit split;
  for (const auto& u : manifest) {
    (in_a.count(unit_of(u)) ? split.subset_a : split.subset_b).push_back(u.id);
  }
  return split;
}

VectorSet select_vectors(const VectorSet& all,
                         const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const SpeakerVector*> by_id;
  for (const auto& v : all) by_id.emplace(v.id, &v);
  VectorSet out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ContractViolation("no vector for utterance '" + id + "'");
    }
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace ssv::vs
