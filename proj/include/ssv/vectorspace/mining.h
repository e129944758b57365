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

#include "json.hpp"
#include "ssv/vectorspace/vectors.h"

// Self-supervised mining of training pairs in a speaker-vector space.
//
// Anchors come from subset A. Clients are the anchor's nearest neighbours in
// A (self excluded) that clear a cosine threshold. Impostors are drawn from
// subset B, which is assumed to share no speakers with A. Speaker labels are
// never consulted here; they only enter through purity statistics.
namespace ssv::vs {

struct ScoredId {
  std::string id;
  double score = 0.0;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

// Descending score, ascending id on ties.
bool ranks_before(const ScoredId& a, const ScoredId& b);

// Unit-normalised copy of a vector pool for repeated cosine queries.
class CosineIndex {
 public:
  explicit CosineIndex(const VectorSet& pool);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  // Position of `id`, if present.
  std::optional<std::size_t> find(const std::string& id) const;

  // Cosine of `query` against every pool entry, bit-identical to
  // cosine_score(query, pool[i]).
  std::vector<double> scores(std::span<const double> query) const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::vector<double> norms_;
  std::map<std::string, std::size_t> positions_;
  std::size_t dim_ = 0;
};

// The k best-scoring pool entries for `anchor`, ranked by ranks_before.
// With exclude_self, pool entries whose id equals anchor.id are skipped.
// Throws ContractViolation when fewer than k candidates remain.
std::vector<ScoredId> top_k_neighbors(const SpeakerVector& anchor,
                                      const VectorSet& pool, std::size_t k,
                                      bool exclude_self);

// hardest_top_k: take the k highest-scoring B candidates, then drop those
// above impostor_threshold (the result may shrink).
// top_k_below_threshold: discard candidates above impostor_threshold first,
// then take the k highest of what remains.
enum class ImpostorRule { hardest_top_k, top_k_below_threshold };

// round_robin: min(k, max(|C|, |I|)) triplets pairing client j mod |C| with
// impostor j mod |I|. cross_product: every client x impostor combination.
enum class TripletRule { round_robin, cross_product };

std::string to_string(ImpostorRule rule);
ImpostorRule impostor_rule_from_string(const std::string& s);
std::string to_string(TripletRule rule);
TripletRule triplet_rule_from_string(const std::string& s);

struct MiningConfig {
  std::size_t k = 10;
  double client_threshold = 0.5;
  double impostor_threshold = 1.0;
  ImpostorRule impostor_rule = ImpostorRule::top_k_below_threshold;
  TripletRule triplet_rule = TripletRule::round_robin;
  std::size_t threads = 1;

  void validate() const;
};

// Top-k of A x A (self excluded) filtered to score >= client_threshold. When
// A holds fewer than k other vectors, all of them are ranked.
std::vector<ScoredId> mine_clients(const std::string& anchor_id,
                                   const VectorSet& subset_a,
                                   const MiningConfig& config);

std::vector<ScoredId> mine_impostors(const std::string& anchor_id,
                                     const VectorSet& subset_a,
                                     const VectorSet& subset_b,
                                     const MiningConfig& config);

struct MinedAnchor {
  std::string anchor_id;
  std::vector<ScoredId> clients;
  std::vector<ScoredId> impostors;
};

// Clients and impostors for every anchor in A, in A's order.
std::vector<MinedAnchor> mine_all(const VectorSet& subset_a,
                                  const VectorSet& subset_b,
                                  const MiningConfig& config);

struct LabeledPair {
  std::string anchor_id;
  std::string other_id;
  int label = 0;  // 1 client, 0 impostor

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct Triplet {
  std::string anchor_id;
  std::string client_id;
  std::string impostor_id;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct MiningCounts {
  std::size_t anchors_processed = 0;
  std::size_t anchors_without_clients = 0;
  std::size_t anchors_without_impostors = 0;
  std::size_t positive_pairs = 0;
  std::size_t negative_pairs = 0;
  std::size_t triplets = 0;
};

struct MiningArtifacts {
  std::vector<MinedAnchor> neighbor_lists;
  std::vector<LabeledPair> pairs;
  std::vector<Triplet> triplets;
  MiningCounts counts;
};

// Anchors without clients contribute nothing. Anchors with clients but no
// impostors contribute positive pairs only.
MiningArtifacts build_pairs_and_triplets(std::vector<MinedAnchor> mined,
                                         const MiningConfig& config);

struct PurityStats {
  double client_purity = 0.0;     // positive pairs sharing a speaker
  double impostor_purity = 0.0;   // negative pairs with different speakers
  double triplet_validity = 0.0;  // client same AND impostor different
};

// Measured against ground-truth speakers (id -> speaker). Ids missing from
// `speakers` throw ContractViolation.
PurityStats purity(const MiningArtifacts& artifacts,
                   const std::map<std::string, std::string>& speakers);

nlohmann::json mining_report(const MiningArtifacts& artifacts,
                             const std::optional<PurityStats>& purity);

// "<label> <anchor> <other>" and "<anchor> <client> <impostor>" lines.
void write_pairs(const std::string& path, const std::vector<LabeledPair>& pairs);
std::vector<LabeledPair> read_pairs(const std::string& path);
void write_triplets(const std::string& path,
                    const std::vector<Triplet>& triplets);
std::vector<Triplet> read_triplets(const std::string& path);

}  // namespace ssv::vs
