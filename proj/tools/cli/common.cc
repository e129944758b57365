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

#include "common.h"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "ssv/cli/cli.h"
#include "ssv/error.h"

namespace ssv::cli {

namespace fs = std::filesystem;

namespace {

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < n; ++i) {
    s += digits[d[i] >> 4];
    s += digits[d[i] & 15];
  }
  return s;
}

struct MdCtx {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  MdCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
      throw Error("cannot initialise SHA-256");
    }
  }
  ~MdCtx() { EVP_MD_CTX_free(ctx); }
  void update(const char* d, std::size_t n) { EVP_DigestUpdate(ctx, d, n); }
  std::string final() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    EVP_DigestFinal_ex(ctx, md, &n);
    return hex(md, n);
  }
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  MdCtx md;
  md.update(bytes.data(), bytes.size());
  return md.final();
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read", path);
  MdCtx md;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    md.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return md.final();
}

nlohmann::json load_config_file(const std::string& path) {
  require_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path + ": " + e.what(), e.byte);
  }
  if (!j.is_object()) throw ContractViolation("config " + path + ": top level must be an object");
  const auto defaults = default_config();
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ContractViolation("config: unknown section '" + key + "'");
  }
  return j;
}

nlohmann::json resolve_section(const Globals& g, const std::string& section,
                               const nlohmann::json& overrides) {
  nlohmann::json out = default_config().at(section);
  auto apply = [&](const nlohmann::json& patch, const std::string& where) {
    for (const auto& [key, value] : patch.items()) {
      if (!out.contains(key)) {
        throw ContractViolation(where + ": unknown key '" + section + "." + key + "'");
      }
      out[key] = value;
    }
  };
  if (g.file_config.contains(section)) {
    const auto& s = g.file_config.at(section);
    if (!s.is_object()) throw ContractViolation("config: section '" + section + "' must be an object");
    apply(s, "config");
  }
  apply(overrides, "flag");
  return out;
}

void require_file(const std::string& path) {
  if (path.empty() || !fs::is_regular_file(path)) throw IoError("missing input", path);
}

void require_dir(const std::string& path) {
  if (path.empty() || !fs::is_directory(path)) throw IoError("missing input", path);
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read", path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write", path);
  f << text;
  if (!f) throw IoError("write failed", path);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

StageRun::StageRun(std::string stage, const Globals& g, nlohmann::json config)
    : stage_(std::move(stage)),
      config_(std::move(config)),
      seed_(g.seed),
      start_(std::chrono::steady_clock::now()) {}

void StageRun::artifact(const std::string& path, const nlohmann::json& extra) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& p : inputs_) inputs.push_back({{"path", p}, {"sha256", file_sha256(p)}});
  nlohmann::json meta = {{"stage", stage_},
                         {"config", config_},
                         {"config_sha256", sha256_hex(config_.dump())},
                         {"seed", seed_},
                         {"inputs", inputs},
                         {"sha256", file_sha256(path)}};
  if (extra.is_object()) {
    for (const auto& [k, v] : extra.items()) meta[k] = v;
  }
  write_json(path + ".meta.json", meta);
  outputs_.push_back(path);
}

void StageRun::finish(const std::string& report_path) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json outputs = nlohmann::json::array(), inputs = nlohmann::json::array();
  for (const auto& p : inputs_) inputs.push_back({{"path", p}, {"sha256", file_sha256(p)}});
  for (const auto& p : outputs_) outputs.push_back({{"path", p}, {"sha256", file_sha256(p)}});
  write_json(report_path, {{"stage", stage_},
                           {"seed", seed_},
                           {"config_sha256", sha256_hex(config_.dump())},
                           {"inputs", inputs},
                           {"outputs", outputs},
                           {"wall_seconds", seconds},
                           {"counters", counters_}});
}

std::string report_path_for_dir(const std::string& dir, const std::string& stage) {
  return (fs::path(dir) / (stage + ".report.json")).string();
}

std::string report_path_for_file(const std::string& artifact) {
  return artifact + ".report.json";
}

}  // namespace ssv::cli
