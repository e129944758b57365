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

#include "ssv/vectorspace/mining.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ssv/error.h"
#include "ssv/parallel.h"

namespace ssv::vs {

bool ranks_before(const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

CosineIndex::CosineIndex(const VectorSet& pool) {
  validate_vectors(pool);
  dim_ = pool.empty() ? 0 : pool.front().values.size();
  ids_.reserve(pool.size());
  values_.reserve(pool.size() * dim_);
  norms_.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& v = pool[i];
    const double n = norm(v.values);
    if (n == 0.0) {
      throw DegenerateInputError("vector '" + v.id + "' is all zeros");
    }
    ids_.push_back(v.id);
    values_.insert(values_.end(), v.values.begin(), v.values.end());
    norms_.push_back(n);
    positions_.emplace(v.id, i);
  }
}

std::optional<std::size_t> CosineIndex::find(const std::string& id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> CosineIndex::scores(std::span<const double> query) const {
  if (!ids_.empty() && query.size() != dim_) {
    throw ShapeError("cosine query has dimension " +
                     std::to_string(query.size()) + ", pool has " +
                     std::to_string(dim_));
  }
  const double nq = norm(query);
  if (nq == 0.0) throw DegenerateInputError("cosine query is all zeros");
  std::vector<double> out(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const std::span<const double> row(values_.data() + i * dim_, dim_);
    out[i] = std::clamp(dot(query, row) / (nq * norms_[i]), -1.0, 1.0);
  }
  return out;
}

namespace {

// All candidates except `skip`, ranked; only the first `keep` are sorted.
std::vector<ScoredId> rank(const CosineIndex& index,
                           const std::vector<double>& scores,
                           const std::string* skip, std::size_t keep) {
  std::vector<ScoredId> all;
  all.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (skip && index.id(i) == *skip) continue;
    all.push_back({index.id(i), scores[i]});
  }
  keep = std::min(keep, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<long>(keep),
                    all.end(), ranks_before);
  all.resize(keep);
  return all;
}

const SpeakerVector& lookup(const VectorSet& set, const std::string& id) {
  for (const auto& v : set) {
    if (v.id == id) return v;
  }
  throw ContractViolation("anchor '" + id + "' is not in subset A");
}

std::vector<ScoredId> clients_from(const CosineIndex& a_index,
                                   const SpeakerVector& anchor,
                                   const MiningConfig& config) {
  auto ranked = rank(a_index, a_index.scores(anchor.values), &anchor.id, config.k);
  std::erase_if(ranked, [&](const ScoredId& s) {
    return s.score < config.client_threshold;
  });
  return ranked;
}

std::vector<ScoredId> impostors_from(const CosineIndex& b_index,
                                     const SpeakerVector& anchor,
                                     const MiningConfig& config) {
  if (b_index.size() == 0) return {};
  auto scores = b_index.scores(anchor.values);
  auto above = [&](const ScoredId& s) {
    return s.score > config.impostor_threshold;
  };
  if (config.impostor_rule == ImpostorRule::hardest_top_k) {
    auto ranked = rank(b_index, scores, nullptr, config.k);
    std::erase_if(ranked, above);
    return ranked;
  }
  auto ranked = rank(b_index, scores, nullptr, scores.size());
  std::erase_if(ranked, above);
  ranked.resize(std::min(ranked.size(), config.k));
  return ranked;
}

}  // namespace

std::vector<ScoredId> top_k_neighbors(const SpeakerVector& anchor,
                                      const VectorSet& pool, std::size_t k,
                                      bool exclude_self) {
  const CosineIndex index(pool);
  std::size_t available = index.size();
  if (exclude_self) {
    available -= static_cast<std::size_t>(std::count_if(
        pool.begin(), pool.end(),
        [&](const SpeakerVector& v) { return v.id == anchor.id; }));
  }
  if (available < k) {
    throw ContractViolation("top_k_neighbors: asked for " + std::to_string(k) +
                            " neighbours but only " + std::to_string(available) +
                            " candidates are available");
  }
  return rank(index, index.scores(anchor.values),
              exclude_self ? &anchor.id : nullptr, k);
}

std::string to_string(ImpostorRule rule) {
  return rule == ImpostorRule::hardest_top_k ? "hardest_top_k"
                                             : "top_k_below_threshold";
}

ImpostorRule impostor_rule_from_string(const std::string& s) {
  if (s == "hardest_top_k") return ImpostorRule::hardest_top_k;
  if (s == "top_k_below_threshold") return ImpostorRule::top_k_below_threshold;
  throw ContractViolation("unknown impostor rule '" + s + "'");
}

std::string to_string(TripletRule rule) {
  return rule == TripletRule::round_robin ? "round_robin" : "cross_product";
}

TripletRule triplet_rule_from_string(const std::string& s) {
  if (s == "round_robin") return TripletRule::round_robin;
  if (s == "cross_product") return TripletRule::cross_product;
  throw ContractViolation("unknown triplet rule '" + s + "'");
}

void MiningConfig::validate() const {
  if (k < 1) throw ContractViolation("mining k must be >= 1");
  auto in_range = [](double t) { return t >= -1.0 && t <= 1.0; };
  if (!in_range(client_threshold) || !in_range(impostor_threshold)) {
    throw ContractViolation("mining thresholds must lie in [-1, 1]");
  }
}

std::vector<ScoredId> mine_clients(const std::string& anchor_id,
                                   const VectorSet& subset_a,
                                   const MiningConfig& config) {
  config.validate();
  return clients_from(CosineIndex(subset_a), lookup(subset_a, anchor_id), config);
}

std::vector<ScoredId> mine_impostors(const std::string& anchor_id,
                                     const VectorSet& subset_a,
                                     const VectorSet& subset_b,
                                     const MiningConfig& config) {
  config.validate();
  return impostors_from(CosineIndex(subset_b), lookup(subset_a, anchor_id),
                        config);
}

std::vector<MinedAnchor> mine_all(const VectorSet& subset_a,
                                  const VectorSet& subset_b,
                                  const MiningConfig& config) {
  config.validate();
  const CosineIndex a_index(subset_a);
  const CosineIndex b_index(subset_b);
  for (const auto& v : subset_a) {
    if (b_index.find(v.id)) {
      throw ContractViolation("utterance '" + v.id + "' is in both subsets");
    }
  }
  std::vector<MinedAnchor> out(subset_a.size());
  parallel_for(subset_a.size(), config.threads, [&](std::size_t i) {
    out[i].anchor_id = subset_a[i].id;
    out[i].clients = clients_from(a_index, subset_a[i], config);
    out[i].impostors = impostors_from(b_index, subset_a[i], config);
  });
  return out;
}

MiningArtifacts build_pairs_and_triplets(std::vector<MinedAnchor> mined,
                                         const MiningConfig& config) {
  MiningArtifacts art;
  for (const auto& m : mined) {
    ++art.counts.anchors_processed;
    if (m.clients.empty()) {
      ++art.counts.anchors_without_clients;
      continue;
    }
    for (const auto& c : m.clients) art.pairs.push_back({m.anchor_id, c.id, 1});
    art.counts.positive_pairs += m.clients.size();
    if (m.impostors.empty()) {
      ++art.counts.anchors_without_impostors;
      continue;
    }
    for (const auto& i : m.impostors) art.pairs.push_back({m.anchor_id, i.id, 0});
    art.counts.negative_pairs += m.impostors.size();

    const auto& cs = m.clients;
    const auto& is = m.impostors;
    if (config.triplet_rule == TripletRule::cross_product) {
      for (const auto& c : cs) {
        for (const auto& i : is) {
          if (c.id != i.id) art.triplets.push_back({m.anchor_id, c.id, i.id});
        }
      }
    } else {
      const std::size_t n = std::min(config.k, std::max(cs.size(), is.size()));
      for (std::size_t j = 0; j < n; ++j) {
        const auto& c = cs[j % cs.size()];
        const auto& i = is[j % is.size()];
        if (c.id != i.id) art.triplets.push_back({m.anchor_id, c.id, i.id});
      }
    }
  }
  art.counts.triplets = art.triplets.size();
  art.neighbor_lists = std::move(mined);
  return art;
}

PurityStats purity(const MiningArtifacts& artifacts,
                   const std::map<std::string, std::string>& speakers) {
  auto speaker_of = [&](const std::string& id) -> const std::string& {
    auto it = speakers.find(id);
    if (it == speakers.end()) {
      throw ContractViolation("no speaker label for '" + id + "'");
    }
    return it->second;
  };
  std::size_t pos = 0, pos_ok = 0, neg = 0, neg_ok = 0, valid = 0;
  for (const auto& p : artifacts.pairs) {
    const bool same = speaker_of(p.anchor_id) == speaker_of(p.other_id);
    if (p.label == 1) {
      ++pos;
      pos_ok += same ? 1 : 0;
    } else {
      ++neg;
      neg_ok += same ? 0 : 1;
    }
  }
  for (const auto& t : artifacts.triplets) {
    const auto& a = speaker_of(t.anchor_id);
    if (a == speaker_of(t.client_id) && a != speaker_of(t.impostor_id)) ++valid;
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  return PurityStats{ratio(pos_ok, pos), ratio(neg_ok, neg),
                     ratio(valid, artifacts.triplets.size())};
}

nlohmann::json mining_report(const MiningArtifacts& artifacts,
                             const std::optional<PurityStats>& stats) {
  const auto& c = artifacts.counts;
  nlohmann::json j;
  j["anchors_processed"] = c.anchors_processed;
  j["anchors_dropped"] = c.anchors_without_clients;
  j["anchors_without_impostors"] = c.anchors_without_impostors;
  j["pairs"] = c.positive_pairs + c.negative_pairs;
  j["positive_pairs"] = c.positive_pairs;
  j["negative_pairs"] = c.negative_pairs;
  j["triplets"] = c.triplets;
  if (stats) {
    j["purity"] = {{"client_pair_purity", stats->client_purity},
                   {"impostor_pair_purity", stats->impostor_purity},
                   {"triplet_validity", stats->triplet_validity}};
  }
  return j;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write", path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open", path);
  return in;
}

}  // namespace

void write_pairs(const std::string& path, const std::vector<LabeledPair>& pairs) {
  auto out = open_out(path);
  for (const auto& p : pairs) {
    out << p.label << ' ' << p.anchor_id << ' ' << p.other_id << '\n';
  }
}

std::vector<LabeledPair> read_pairs(const std::string& path) {
  auto in = open_in(path);
  std::vector<LabeledPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    LabeledPair p;
    std::string extra;
    if (!(fields >> p.label >> p.anchor_id >> p.other_id) || (fields >> extra) ||
        (p.label != 0 && p.label != 1)) {
      throw ParseError("expected '<0|1> <anchor> <other>' in pairs file", line_no);
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_triplets(const std::string& path,
                    const std::vector<Triplet>& triplets) {
  auto out = open_out(path);
  for (const auto& t : triplets) {
    out << t.anchor_id << ' ' << t.client_id << ' ' << t.impostor_id << '\n';
  }
}

std::vector<Triplet> read_triplets(const std::string& path) {
  auto in = open_in(path);
  std::vector<Triplet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Triplet t;
    std::string extra;
    if (!(fields >> t.anchor_id >> t.client_id >> t.impostor_id) ||
        (fields >> extra)) {
      throw ParseError("expected '<anchor> <client> <impostor>' in triplets file",
                       line_no);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace ssv::vs
