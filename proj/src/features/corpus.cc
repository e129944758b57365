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

#include "ssv/features/corpus.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "json.hpp"
#include "ssv/error.h"

namespace ssv::feat {

namespace fs = std::filesystem;

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest", path);
  const fs::path base = fs::path(path).parent_path();
  Manifest out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      fs::path p = j.at("path").get<std::string>();
      e.path = (p.is_relative() ? base / p : p).string();
      if (j.contains("speaker") && !j["speaker"].is_null()) {
        e.speaker = j["speaker"].get<std::string>();
      }
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": bad manifest line: " + e.what(), line_no);
    }
  }
  return out;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest", path);
  for (const auto& e : manifest) {
    nlohmann::json j;
    j["id"] = e.id;
    j["path"] = e.path;
    if (e.speaker) j["speaker"] = *e.speaker;
    out << j.dump() << '\n';
  }
}

std::vector<vs::UtteranceInfo> utterance_infos(const Manifest& manifest) {
  std::vector<vs::UtteranceInfo> out;
  out.reserve(manifest.size());
  for (const auto& e : manifest) out.push_back({e.id, e.speaker});
  return out;
}

std::map<std::string, std::string> speaker_map(const Manifest& manifest) {
  std::map<std::string, std::string> out;
  for (const auto& e : manifest) {
    if (e.speaker) out.emplace(e.id, *e.speaker);
  }
  return out;
}

namespace {

std::string speaker_name(std::size_t s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "spk%03zu", s);
  return buf;
}

std::string utterance_name(std::size_t s, std::size_t u) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "spk%03zu-u%03zu", s, u);
  return buf;
}

// Independent stream per (seed, purpose, speaker, utterance).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a,
                       std::uint64_t b = 0) {
  std::seed_seq seq{seed & 0xffffffffu, seed >> 32, purpose, a, b};
  return std::mt19937_64(seq);
}

struct SpeakerVoice {
  double f0;
  std::array<int, 3> harmonics;
  std::array<double, 3> amplitudes;
};

SpeakerVoice make_voice(const SynthConfig& c, std::size_t s) {
  auto rng = stream(c.seed, 1, s);
  std::uniform_real_distribution<double> f0(100.0, 300.0);
  std::uniform_real_distribution<double> amp(0.3, 1.0);
  SpeakerVoice v{f0(rng), {}, {}};
  std::vector<int> pool{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::shuffle(pool.begin(), pool.end(), rng);
  std::sort(pool.begin(), pool.begin() + 3);
  for (int i = 0; i < 3; ++i) {
    v.harmonics[i] = pool[i];
    v.amplitudes[i] = amp(rng);
  }
  return v;
}

std::vector<double> make_centroid(const SynthConfig& c, std::size_t s) {
  auto rng = stream(c.seed, 2, s);
  std::normal_distribution<double> gauss(0.0, c.centroid_scale);
  std::vector<double> out(c.vector_dim);
  for (double& x : out) x = gauss(rng);
  return out;
}

vs::SpeakerVector make_vector(const SynthConfig& c,
                              const std::vector<double>& centroid,
                              std::size_t s, std::size_t u) {
  auto rng = stream(c.seed, 3, s, u);
  std::normal_distribution<double> gauss(0.0, c.vector_noise_sigma);
  vs::SpeakerVector v{utterance_name(s, u), centroid};
  for (double& x : v.values) x += gauss(rng);
  return v;
}

WavAudio make_audio(const SynthConfig& c, const SpeakerVoice& voice,
                    std::size_t s, std::size_t u) {
  auto rng = stream(c.seed, 4, s, u);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  const auto n = static_cast<std::size_t>(std::llround(c.duration_s * c.sample_rate));

  WavAudio audio;
  audio.sample_rate = c.sample_rate;
  audio.samples.assign(n, 0.0);
  double signal_power = 0.0;
  for (int h = 0; h < 3; ++h) {
    const double f = voice.f0 * voice.harmonics[h];
    if (f >= c.sample_rate / 2.0) continue;
    const double a = voice.amplitudes[h] * jitter(rng);
    const double ph = phase(rng);
    const double w = 2.0 * std::numbers::pi * f / c.sample_rate;
    for (std::size_t i = 0; i < n; ++i) {
      audio.samples[i] += a * std::sin(w * static_cast<double>(i) + ph);
    }
    signal_power += a * a / 2.0;
  }
  const double noise_std =
      std::sqrt(signal_power / std::pow(10.0, c.snr_db / 10.0));
  std::normal_distribution<double> noise(0.0, noise_std);
  double peak = 0.0;
  for (double& x : audio.samples) {
    x += noise(rng);
    peak = std::max(peak, std::abs(x));
  }
  const double gain = peak > 0.0 ? 0.5 / peak : 1.0;
  for (double& x : audio.samples) x *= gain;
  return audio;
}

void check(const SynthConfig& c) {
  if (c.num_speakers < 2) throw ContractViolation("synthetic corpus needs >= 2 speakers");
  if (c.utts_per_speaker < 1 || c.vector_dim < 1 || c.sample_rate <= 0 ||
      !(c.duration_s > 0.0)) {
    throw ContractViolation("invalid synthetic corpus configuration");
  }
}

}  // namespace

std::vector<SynthUtterance> synth_corpus(const SynthConfig& config,
                                         std::size_t first_utt) {
  check(config);
  std::vector<SynthUtterance> out;
  out.reserve(config.num_speakers * config.utts_per_speaker);
  for (std::size_t s = config.first_speaker;
       s < config.first_speaker + config.num_speakers; ++s) {
    const SpeakerVoice voice = make_voice(config, s);
    const auto centroid = make_centroid(config, s);
    for (std::size_t u = first_utt; u < first_utt + config.utts_per_speaker; ++u) {
      out.push_back({utterance_name(s, u), speaker_name(s),
                     make_audio(config, voice, s, u),
                     make_vector(config, centroid, s, u)});
    }
  }
  return out;
}

vs::VectorSet synth_vectors(const SynthConfig& config, std::size_t first_utt) {
  check(config);
  vs::VectorSet out;
  for (std::size_t s = config.first_speaker;
       s < config.first_speaker + config.num_speakers; ++s) {
    const auto centroid = make_centroid(config, s);
    for (std::size_t u = first_utt; u < first_utt + config.utts_per_speaker; ++u) {
      out.push_back(make_vector(config, centroid, s, u));
    }
  }
  return out;
}

std::string synth_speaker_of(const std::string& utterance_id) {
  return utterance_id.substr(0, utterance_id.find('-'));
}

void write_corpus(const std::vector<SynthUtterance>& corpus,
                  const std::string& dir, const std::string& manifest_name,
                  const std::string& vectors_name) {
  const fs::path root(dir);
  fs::create_directories(root / "wav");
  Manifest manifest;
  vs::VectorSet vectors;
  for (const auto& u : corpus) {
    const fs::path rel = fs::path("wav") / (u.id + ".wav");
    write_wav((root / rel).string(), u.audio);
    manifest.push_back({u.id, rel.string(), u.speaker});
    vectors.push_back(u.vector);
  }
  write_manifest((root / manifest_name).string(), manifest);
  vs::write_vectors((root / vectors_name).string(), vectors);
}

}  // namespace ssv::feat
