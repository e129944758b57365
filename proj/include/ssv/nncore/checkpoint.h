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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ssv/nncore/param.h"

// Model checkpoint container:
//
//   "SSVM"            4 bytes magic
//   version           u32 little-endian (currently 1)
//   manifest_length   u32 little-endian, byte length of the manifest
//   manifest          UTF-8 JSON {"params": [{"name", "shape"}...], "meta": {}}
//   payload           f64 little-endian values, row-major, manifest order
namespace ssv::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& find(const std::string& name) const;
};

std::vector<char> encode_checkpoint(std::span<const Param* const> params,
                                    const nlohmann::json& meta);
Checkpoint decode_checkpoint(std::span<const char> bytes);

void save_checkpoint(const std::string& path,
                     std::span<const Param* const> params,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint tensors into `params` by name. Throws ShapeError on a
// missing name or a shape mismatch.
void restore_params(const Checkpoint& checkpoint,
                    std::span<Param* const> params);

}  // namespace ssv::nn
