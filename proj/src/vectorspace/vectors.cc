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

#include "ssv/vectorspace/vectors.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "ssv/error.h"

namespace ssv::vs {

void validate_vectors(const VectorSet& vectors) {
  if (vectors.empty()) return;
  const std::size_t dim = vectors.front().values.size();
  std::unordered_set<std::string> seen;
  for (const auto& v : vectors) {
    if (v.values.size() != dim) {
      throw ShapeError("vector '" + v.id + "' has dimension " +
                       std::to_string(v.values.size()) + ", expected " +
                       std::to_string(dim));
    }
    for (double x : v.values) {
      if (!std::isfinite(x)) {
        throw ContractViolation("vector '" + v.id + "' has a non-finite value");
      }
    }
    if (!seen.insert(v.id).second) {
      throw ContractViolation("duplicate vector id '" + v.id + "'");
    }
  }
}

std::string format_vector_line(const SpeakerVector& v) {
  nlohmann::json j;
  j["id"] = v.id;
  j["vec"] = v.values;
  return j.dump();
}

SpeakerVector parse_vector_line(const std::string& line, std::size_t line_no) {
  try {
    const auto j = nlohmann::json::parse(line);
    return SpeakerVector{j.at("id").get<std::string>(),
                         j.at("vec").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad vector line: ") + e.what(), line_no);
  }
}

VectorSet read_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vector file", path);
  VectorSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_vector_line(line, line_no));
  }
  validate_vectors(out);
  return out;
}

void write_vectors(const std::string& path, const VectorSet& vectors) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write vector file", path);
  for (const auto& v : vectors) out << format_vector_line(v) << '\n';
  if (!out) throw IoError("failed writing vector file", path);
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double cosine_score(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("cosine_score: dimensions " + std::to_string(x.size()) +
                     " and " + std::to_string(y.size()) + " differ");
  }
  const double nx = norm(x), ny = norm(y);
  if (nx == 0.0 || ny == 0.0) {
    throw DegenerateInputError("cosine_score: zero vector");
  }
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

}  // namespace ssv::vs
