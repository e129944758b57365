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

#include <chrono>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace ssv::cli {

// A pipeline step failed; carries its exit code.
class StageFailed : public std::exception {
 public:
  explicit StageFailed(int code) : code_(code) {}
  int code() const { return code_; }
  const char* what() const noexcept override { return "pipeline step failed"; }

 private:
  int code_;
};

// Resolved settings shared by every subcommand.
struct Globals {
  std::string config_path;
  nlohmann::json file_config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::ostream* out = nullptr;
};

// Defaults, then the config file's section, then command-line overrides.
// Unknown keys are a validation failure.
nlohmann::json resolve_section(const Globals& g, const std::string& section,
                               const nlohmann::json& overrides);

nlohmann::json load_config_file(const std::string& path);

// Throws IoError("missing input") unless `path` names an existing file or
// directory.
void require_file(const std::string& path);
void require_dir(const std::string& path);
void ensure_parent_dir(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const nlohmann::json& j);

// Everything a stage touched, for its sidecars and run report.
class StageRun {
 public:
  StageRun(std::string stage, const Globals& g, nlohmann::json config);

  void input(const std::string& path) { inputs_.push_back(path); }
  nlohmann::json& counters() { return counters_; }
  const nlohmann::json& config() const { return config_; }

  // Writes <artifact>.meta.json: stage, config and its digest, seed, input
  // digests and the artifact's own digest. No timestamps, so reruns produce
  // identical bytes.
  void artifact(const std::string& path, const nlohmann::json& extra = {});

  // Writes the run report with wall time and counters.
  void finish(const std::string& report_path);

 private:
  std::string stage_;
  nlohmann::json config_;
  std::uint64_t seed_;
  std::vector<std::string> inputs_, outputs_;
  nlohmann::json counters_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
};

std::string report_path_for_dir(const std::string& dir, const std::string& stage);
std::string report_path_for_file(const std::string& artifact);

}  // namespace ssv::cli
