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

#include "ssv/nncore/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include "ssv/error.h"

namespace ssv::nn {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'V', 'M'};

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<char>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

std::uint32_t get_u32(std::span<const char> b, std::size_t at) {
  if (at + 4 > b.size()) throw ParseError("checkpoint truncated", at);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i]))
         << (8 * i);
  }
  return v;
}

double get_f64(std::span<const char> b, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i]))
            << (8 * i);
  }
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw ShapeError("checkpoint has no tensor named '" + name + "'");
}

std::vector<char> encode_checkpoint(std::span<const Param* const> params,
                                    const nlohmann::json& meta) {
  nlohmann::json manifest;
  manifest["params"] = nlohmann::json::array();
  for (const Param* p : params) {
    manifest["params"].push_back({{"name", p->name}, {"shape", p->value.shape()}});
  }
  manifest["meta"] = meta;
  const std::string text = manifest.dump();

  std::vector<char> out(kMagic, kMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const Param* p : params) {
    for (double v : p->value.data()) put_f64(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("not an SSVM checkpoint", 0);
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  const std::uint32_t len = get_u32(bytes, 8);
  if (12 + static_cast<std::size_t>(len) > bytes.size()) {
    throw ParseError("checkpoint manifest truncated", 12);
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint manifest: ") + e.what(), 12);
  }

  Checkpoint ck;
  if (manifest.contains("meta")) ck.meta = manifest["meta"];
  std::size_t at = 12 + len;
  if (!manifest.contains("params") || !manifest["params"].is_array()) {
    throw ParseError("checkpoint manifest has no params list", 12);
  }
  for (const auto& entry : manifest["params"]) {
    Shape shape;
    std::string name;
    try {
      shape = entry.at("shape").get<Shape>();
      name = entry.at("name").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad checkpoint manifest entry: ") + e.what(), 12);
    }
    const std::size_t n = shape_size(shape);
    if (at + 8 * n > bytes.size()) {
      throw ParseError("checkpoint payload truncated", at);
    }
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i, at += 8) data[i] = get_f64(bytes, at);
    ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (at != bytes.size()) {
    throw ParseError("trailing bytes after checkpoint payload", at);
  }
  return ck;
}

void save_checkpoint(const std::string& path,
                     std::span<const Param* const> params,
                     const nlohmann::json& meta) {
  const auto bytes = encode_checkpoint(params, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint", path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void restore_params(const Checkpoint& checkpoint,
                    std::span<Param* const> params) {
  for (Param* p : params) {
    const Tensor& t = checkpoint.find(p->name);
    if (t.shape() != p->value.shape()) {
      throw ShapeError("checkpoint tensor '" + p->name + "' has shape " +
                       shape_string(t.shape()) + ", model expects " +
                       shape_string(p->value.shape()));
    }
    p->value = t;
    p->grad = Tensor(t.shape());
  }
}

}  // namespace ssv::nn
