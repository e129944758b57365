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
#include <vector>

namespace ssv::vs {

inline constexpr std::size_t kDefaultVectorDim = 400;

// An utterance-level vector: i-vector, ae-vector or network embedding.
struct SpeakerVector {
  std::string id;
  std::vector<double> values;

  friend bool operator==(const SpeakerVector&, const SpeakerVector&) = default;
};

using VectorSet = std::vector<SpeakerVector>;

// Checks a collection: one dimension throughout, finite values, unique ids.
// Throws ShapeError / ContractViolation.
void validate_vectors(const VectorSet& vectors);

// JSON-lines, one {"id": ..., "vec": [...]} per line.
std::string format_vector_line(const SpeakerVector& v);
SpeakerVector parse_vector_line(const std::string& line, std::size_t line_no);
VectorSet read_vectors(const std::string& path);
void write_vectors(const std::string& path, const VectorSet& vectors);

double dot(std::span<const double> x, std::span<const double> y);
double norm(std::span<const double> x);

// x . y / (|x| |y|). Throws ShapeError on a dimension mismatch and
// DegenerateInputError on a zero vector.
double cosine_score(std::span<const double> x, std::span<const double> y);

}  // namespace ssv::vs
