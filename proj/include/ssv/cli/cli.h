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

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace ssv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitInvalid = 3;

// Runs one subcommand. `args` excludes the program name. Diagnostics go to
// `err`; human-readable results and the dry-run plan go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

// Every configuration section with its default values.
nlohmann::json default_config();

// Lowercase hex SHA-256 of a file's bytes. Throws IoError if unreadable.
std::string file_sha256(const std::string& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace ssv::cli
