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
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssv/features/wav.h"
#include "ssv/vectorspace/split.h"
#include "ssv/vectorspace/vectors.h"

namespace ssv::feat {

// One line of a corpus manifest: {"id", "path", "speaker"?}.
struct ManifestEntry {
  std::string id;
  std::string path;
  std::optional<std::string> speaker;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

using Manifest = std::vector<ManifestEntry>;

// Relative paths in the file are resolved against the manifest's directory.
Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& manifest);

std::vector<vs::UtteranceInfo> utterance_infos(const Manifest& manifest);
// id -> speaker for entries that carry one.
std::map<std::string, std::string> speaker_map(const Manifest& manifest);

struct SynthConfig {
  std::size_t num_speakers = 20;
  // Speakers are numbered from here; voices depend only on seed and number,
  // so disjoint ranges give disjoint speakers.
  std::size_t first_speaker = 0;
  std::size_t utts_per_speaker = 10;
  double duration_s = 4.0;
  int sample_rate = 16000;
  double snr_db = 10.0;
  std::size_t vector_dim = vs::kDefaultVectorDim;
  // Per-dimension standard deviation of speaker centroids and of the
  // per-utterance noise added to them.
  double centroid_scale = 1.0;
  double vector_noise_sigma = 0.3;
  std::uint64_t seed = 0;
};

struct SynthUtterance {
  std::string id;
  std::string speaker;
  WavAudio audio;
  vs::SpeakerVector vector;
};

// Speakers are sums of three harmonics of a speaker-specific fundamental with
// fixed relative amplitudes; every utterance adds random phases, a small
// amplitude jitter and white noise at the configured SNR. Each utterance
// also gets a ground-truth vector: speaker centroid + Gaussian noise.
// Utterance `first_utt` onwards are generated, so held-out utterances of the
// same speakers come from a second call with a larger first_utt.
std::vector<SynthUtterance> synth_corpus(const SynthConfig& config,
                                         std::size_t first_utt = 0);

// Vectors only (no audio); same vectors synth_corpus would produce.
vs::VectorSet synth_vectors(const SynthConfig& config, std::size_t first_utt = 0);

// Speaker label for a synthetic utterance id ("spk007-u003" -> "spk007").
std::string synth_speaker_of(const std::string& utterance_id);

// Writes <dir>/wav/<id>.wav for each utterance plus a manifest (paths
// relative to `dir`) and a vector file.
void write_corpus(const std::vector<SynthUtterance>& corpus,
                  const std::string& dir, const std::string& manifest_name,
                  const std::string& vectors_name);

}  // namespace ssv::feat
