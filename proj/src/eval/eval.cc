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

#include "ssv/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "ssv/error.h"
#include "ssv/parallel.h"

namespace ssv::eval {

bool ScoreSet::labeled() const {
  return !trials.empty() && std::all_of(trials.begin(), trials.end(),
                                        [](const Trial& t) { return t.label.has_value(); });
}

void FusionWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw ContractViolation("fusion weights must lie in [0, 1]");
  }
}

void DcfParams::validate() const {
  if (!(c_miss > 0.0) || !(c_fa > 0.0)) throw ContractViolation("DCF costs must be > 0");
  if (!(p_target > 0.0 && p_target < 1.0)) {
    throw ContractViolation("p_target must lie in (0, 1)");
  }
}

nlohmann::json DcfParams::to_json() const {
  return {{"c_miss", c_miss}, {"c_fa", c_fa}, {"p_target", p_target}};
}

DcfParams DcfParams::from_json(const nlohmann::json& j) {
  DcfParams p;
  p.c_miss = j.value("c_miss", p.c_miss);
  p.c_fa = j.value("c_fa", p.c_fa);
  p.p_target = j.value("p_target", p.p_target);
  return p;
}

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write file", path);
  return out;
}

}  // namespace

std::vector<Trial> parse_trials(const std::string& text) {
  std::vector<Trial> trials;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto tok = tokens_of(line);
    if (tok.empty()) continue;
    Trial t;
    if (tok.size() == 3) {
      if (tok[0] != "0" && tok[0] != "1") {
        throw ParseError("trial label must be 0 or 1", line_no);
      }
      t.label = tok[0] == "1" ? 1 : 0;
      t.enroll_id = tok[1];
      t.test_id = tok[2];
    } else if (tok.size() == 2) {
      t.enroll_id = tok[0];
      t.test_id = tok[1];
    } else {
      throw ParseError("trial line needs 2 or 3 fields", line_no);
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<Trial> read_trials(const std::string& path) {
  return parse_trials(slurp(path));
}

void write_trials(const std::string& path, const std::vector<Trial>& trials) {
  auto out = open_out(path);
  for (const auto& t : trials) {
    if (t.label) out << *t.label << ' ';
    out << t.enroll_id << ' ' << t.test_id << '\n';
  }
  if (!out) throw IoError("write failed", path);
}

std::string format_scores(const ScoreSet& set) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.6f\n", set.scores[i]);
    out += set.trials[i].enroll_id;
    out += ' ';
    out += set.trials[i].test_id;
    out += buf;
  }
  return out;
}

void write_scores(const std::string& path, const ScoreSet& set) {
  auto out = open_out(path);
  out << format_scores(set);
  if (!out) throw IoError("write failed", path);
}

ScoreSet read_scores(const std::string& path, std::string system_name) {
  ScoreSet set;
  set.system_name = std::move(system_name);
  std::istringstream in(slurp(path));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto tok = tokens_of(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) throw ParseError("score line needs 3 fields", line_no);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(tok[2], &used);
      if (used != tok[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("bad score value '" + tok[2] + "'", line_no);
    }
    set.trials.push_back(Trial{tok[0], tok[1], std::nullopt});
    set.scores.push_back(v);
  }
  return set;
}

ScoreSet attach_labels(ScoreSet scores, const std::vector<Trial>& trials) {
  if (scores.size() != trials.size()) {
    throw ContractViolation("score file has " + std::to_string(scores.size()) +
                            " lines but trial list has " + std::to_string(trials.size()));
  }
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!scores.trials[i].same_pair(trials[i])) {
      throw ContractViolation("score and trial lists differ at index " + std::to_string(i));
    }
    scores.trials[i].label = trials[i].label;
  }
  return scores;
}

ScoreSet score_trials(const vs::VectorSet& vectors, const std::vector<Trial>& trials,
                      std::string system_name) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vectors.size(); ++i) index.emplace(vectors[i].id, i);
  ScoreSet set;
  set.system_name = std::move(system_name);
  set.trials = trials;
  set.scores.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    for (const auto* id : {&t.enroll_id, &t.test_id}) {
      if (!index.count(*id)) {
        throw ContractViolation("trial line " + std::to_string(i + 1) + ": unknown id '" +
                                *id + "'");
      }
    }
    set.scores.push_back(vs::cosine_score(vectors[index[t.enroll_id]].values,
                                          vectors[index[t.test_id]].values));
  }
  return set;
}

LabeledScores split_by_label(const ScoreSet& set) {
  LabeledScores out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!set.trials[i].label) {
      throw ContractViolation("trial " + std::to_string(i) + " has no label");
    }
    (*set.trials[i].label == 1 ? out.targets : out.nontargets).push_back(set.scores[i]);
  }
  return out;
}

namespace {

// Operating points of the threshold sweep: one per distinct score (accept
// score >= s) followed by reject-all.
struct Sweep {
  std::vector<double> thresholds;  // last entry is +inf
  std::vector<std::size_t> misses;
  std::vector<std::size_t> false_accepts;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

Sweep sweep(const std::vector<double>& targets, const std::vector<double>& nontargets) {
  if (targets.empty() || nontargets.empty()) {
    throw DegenerateInputError("need at least one target and one nontarget trial");
  }
  for (const auto* v : {&targets, &nontargets}) {
    for (double s : *v) {
      if (!std::isfinite(s)) throw DegenerateInputError("score is not finite");
    }
  }
  std::vector<std::pair<double, bool>> all;
  all.reserve(targets.size() + nontargets.size());
  for (double s : targets) all.emplace_back(s, true);
  for (double s : nontargets) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Sweep sw;
  sw.n_target = targets.size();
  sw.n_nontarget = nontargets.size();
  std::size_t miss = 0;
  std::size_t fa = nontargets.size();
  for (std::size_t i = 0; i < all.size();) {
    sw.thresholds.push_back(all[i].first);
    sw.misses.push_back(miss);
    sw.false_accepts.push_back(fa);
    const double s = all[i].first;
    for (; i < all.size() && all[i].first == s; ++i) {
      if (all[i].second) {
        ++miss;
      } else {
        --fa;
      }
    }
  }
  sw.thresholds.push_back(std::numeric_limits<double>::infinity());
  sw.misses.push_back(miss);
  sw.false_accepts.push_back(fa);
  return sw;
}

}  // namespace

OperatingPoint compute_eer(const std::vector<double>& targets,
                           const std::vector<double>& nontargets) {
  const Sweep sw = sweep(targets, nontargets);
  const auto nt = static_cast<double>(sw.n_target);
  const auto nn = static_cast<double>(sw.n_nontarget);
  for (std::size_t j = 0; j < sw.thresholds.size(); ++j) {
    // Sign of P_miss - P_fa, compared exactly in integers.
    const std::size_t lhs = sw.misses[j] * sw.n_nontarget;
    const std::size_t rhs = sw.false_accepts[j] * sw.n_target;
    if (lhs < rhs) continue;
    const double pm1 = static_cast<double>(sw.misses[j]) / nt;
    if (lhs == rhs) return {pm1, sw.thresholds[j]};
    // j > 0 here: at the first point P_miss = 0 and P_fa = 1.
    const double pm0 = static_cast<double>(sw.misses[j - 1]) / nt;
    const double pf0 = static_cast<double>(sw.false_accepts[j - 1]) / nn;
    const double pf1 = static_cast<double>(sw.false_accepts[j]) / nn;
    const double d0 = pm0 - pf0;
    const double d1 = pm1 - pf1;
    const double t = -d0 / (d1 - d0);
    const double th0 = sw.thresholds[j - 1];
    const double th1 = sw.thresholds[j];
    const double th = std::isfinite(th1) ? th0 + t * (th1 - th0) : th0;
    return {pm0 + t * (pm1 - pm0), th};
  }
  throw DegenerateInputError("EER sweep did not cross");  // unreachable
}

OperatingPoint compute_eer(const ScoreSet& set) {
  const auto ls = split_by_label(set);
  return compute_eer(ls.targets, ls.nontargets);
}

namespace {

double normalized_dcf(double p_miss, double p_fa, const DcfParams& p) {
  const double raw = p.c_miss * p.p_target * p_miss + p.c_fa * (1.0 - p.p_target) * p_fa;
  return raw / std::min(p.c_miss * p.p_target, p.c_fa * (1.0 - p.p_target));
}

}  // namespace

OperatingPoint compute_min_dcf(const std::vector<double>& targets,
                               const std::vector<double>& nontargets,
                               const DcfParams& params) {
  params.validate();
  const Sweep sw = sweep(targets, nontargets);
  const auto nt = static_cast<double>(sw.n_target);
  const auto nn = static_cast<double>(sw.n_nontarget);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  for (std::size_t j = 0; j < sw.thresholds.size(); ++j) {
    const double d = normalized_dcf(static_cast<double>(sw.misses[j]) / nt,
                                    static_cast<double>(sw.false_accepts[j]) / nn, params);
    if (d < best) {
      best = d;
      best_j = j;
    }
  }
  const std::size_t last = sw.thresholds.size() - 1;
  double th;
  if (best_j == 0) {
    th = sw.thresholds[0];
  } else if (best_j == last) {
    th = std::nextafter(sw.thresholds[last - 1], std::numeric_limits<double>::infinity());
  } else {
    th = 0.5 * (sw.thresholds[best_j - 1] + sw.thresholds[best_j]);
  }
  return {best, th};
}

OperatingPoint compute_min_dcf(const ScoreSet& set, const DcfParams& params) {
  const auto ls = split_by_label(set);
  return compute_min_dcf(ls.targets, ls.nontargets, params);
}

double dcf_at(const std::vector<double>& targets, const std::vector<double>& nontargets,
              double threshold, const DcfParams& params) {
  params.validate();
  if (targets.empty() || nontargets.empty()) {
    throw DegenerateInputError("need at least one target and one nontarget trial");
  }
  const auto miss = std::count_if(targets.begin(), targets.end(),
                                  [&](double s) { return s < threshold; });
  const auto fa = std::count_if(nontargets.begin(), nontargets.end(),
                                [&](double s) { return s >= threshold; });
  return normalized_dcf(static_cast<double>(miss) / static_cast<double>(targets.size()),
                        static_cast<double>(fa) / static_cast<double>(nontargets.size()),
                        params);
}

double fuse(double s1, double s2, double s3, const FusionWeights& w) {
  return ((s1 * w.alpha + s2 * (1.0 - w.alpha)) * w.beta) + s3 * (1.0 - w.beta);
}

namespace {

void check_aligned(const ScoreSet& a, const ScoreSet& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!a.trials[i].same_pair(b.trials[i])) {
      throw ContractViolation("trial lists of '" + a.system_name + "' and '" +
                              b.system_name + "' differ at index " + std::to_string(i));
    }
  }
  if (a.size() != b.size()) {
    throw ContractViolation("trial lists of '" + a.system_name + "' and '" +
                            b.system_name + "' differ at index " + std::to_string(n));
  }
  if (a.trials.size() != a.scores.size() || b.trials.size() != b.scores.size()) {
    throw ContractViolation("score set has mismatched trial and score counts");
  }
}

std::vector<double> min_max(const std::vector<double>& v) {
  if (v.empty()) return v;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out(v.size(), 0.5);
  if (*hi > *lo) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
  }
  return out;
}

}  // namespace

ScoreSet fuse_scores(const ScoreSet& s1, const ScoreSet& s2, const ScoreSet& s3,
                     const FusionWeights& w, bool min_max_normalize) {
  w.validate();
  check_aligned(s1, s2);
  check_aligned(s1, s3);
  const auto a = min_max_normalize ? min_max(s1.scores) : s1.scores;
  const auto b = min_max_normalize ? min_max(s2.scores) : s2.scores;
  const auto c = min_max_normalize ? min_max(s3.scores) : s3.scores;
  ScoreSet out;
  out.system_name = "fusion";
  out.trials = s1.trials;
  // Keep any label carried by either input.
  for (std::size_t i = 0; i < out.trials.size(); ++i) {
    for (const auto* s : {&s2, &s3}) {
      if (!out.trials[i].label) out.trials[i].label = s->trials[i].label;
    }
  }
  out.scores.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.scores[i] = fuse(a[i], b[i], c[i], w);
  return out;
}

FusionTuning tune_fusion(const ScoreSet& s1, const ScoreSet& s2, const ScoreSet& s3,
                         double grid_step, const DcfParams& params,
                         bool min_max_normalize, std::size_t threads) {
  params.validate();
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw ContractViolation("grid step must lie in (0, 1]");
  }
  const double inv = 1.0 / grid_step;
  const auto n = static_cast<std::size_t>(std::llround(inv));
  if (std::abs(inv - static_cast<double>(n)) > 1e-9) {
    throw ContractViolation("1 / grid step must be an integer");
  }
  const ScoreSet base = fuse_scores(s1, s2, s3, FusionWeights{}, min_max_normalize);
  if (!base.labeled()) throw ContractViolation("fusion tuning requires labeled trials");
  const auto a = min_max_normalize ? min_max(s1.scores) : s1.scores;
  const auto b = min_max_normalize ? min_max(s2.scores) : s2.scores;
  const auto c = min_max_normalize ? min_max(s3.scores) : s3.scores;

  const std::size_t side = n + 1;
  FusionTuning out;
  out.surface.resize(side * side);
  parallel_for(side * side, threads, [&](std::size_t cell) {
    const FusionWeights w{static_cast<double>(cell / side) / static_cast<double>(n),
                          static_cast<double>(cell % side) / static_cast<double>(n)};
    std::vector<double> tgt, non;
    for (std::size_t i = 0; i < a.size(); ++i) {
      (*base.trials[i].label == 1 ? tgt : non).push_back(fuse(a[i], b[i], c[i], w));
    }
    out.surface[cell] = SurfacePoint{w.alpha, w.beta, compute_eer(tgt, non).rate,
                                     compute_min_dcf(tgt, non, params).rate};
  });

  constexpr double kTieTolerance = 1e-12;
  std::size_t best = 0;
  for (std::size_t cell = 1; cell < out.surface.size(); ++cell) {
    const auto& p = out.surface[cell];
    const auto& q = out.surface[best];
    if (p.eer < q.eer - kTieTolerance ||
        (std::abs(p.eer - q.eer) <= kTieTolerance && p.min_dcf < q.min_dcf - kTieTolerance)) {
      best = cell;
    }
  }
  const auto& p = out.surface[best];
  out.best = FusionWeights{p.alpha, p.beta};
  out.eer = p.eer;
  out.min_dcf = p.min_dcf;
  return out;
}

std::vector<Trial> make_balanced_trials(
    const std::vector<std::string>& ids,
    const std::map<std::string, std::string>& speaker_of, std::size_t n,
    std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_speaker;
  std::vector<std::string> pool;
  for (const auto& id : ids) {
    auto it = speaker_of.find(id);
    if (it == speaker_of.end()) {
      throw ContractViolation("no speaker label for '" + id + "'");
    }
    by_speaker[it->second].push_back(id);
    pool.push_back(id);
  }
  std::vector<const std::vector<std::string>*> eligible;
  std::size_t target_capacity = 0;
  for (const auto& [spk, members] : by_speaker) {
    if (members.size() >= 2) {
      eligible.push_back(&members);
      target_capacity += members.size() * (members.size() - 1) / 2;
    }
  }
  const std::size_t n_target = n / 2;
  const std::size_t n_non = n - n_target;
  if (target_capacity < n_target || by_speaker.size() < 2) {
    throw DegenerateInputError("not enough utterances for " + std::to_string(n) +
                               " balanced trials");
  }

  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t size) {
    return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
  };
  std::set<std::pair<std::string, std::string>> used;
  auto key = [](const std::string& x, const std::string& y) {
    return x < y ? std::make_pair(x, y) : std::make_pair(y, x);
  };
  std::vector<Trial> trials;
  const std::size_t max_attempts = 1000 * (n + 1);
  std::size_t attempts = 0;
  while (trials.size() < n_target) {
    if (++attempts > max_attempts) throw DegenerateInputError("cannot draw target trials");
    const auto& members = *eligible[pick(eligible.size())];
    const std::size_t i = pick(members.size());
    const std::size_t j = pick(members.size());
    if (i == j || !used.insert(key(members[i], members[j])).second) continue;
    trials.push_back(Trial{members[i], members[j], 1});
  }
  attempts = 0;
  while (trials.size() < n_target + n_non) {
    if (++attempts > max_attempts) throw DegenerateInputError("cannot draw nontarget trials");
    const auto& x = pool[pick(pool.size())];
    const auto& y = pool[pick(pool.size())];
    if (speaker_of.at(x) == speaker_of.at(y) || !used.insert(key(x, y)).second) continue;
    trials.push_back(Trial{x, y, 0});
  }
  std::shuffle(trials.begin(), trials.end(), rng);
  return trials;
}

nlohmann::json metrics_json(const ScoreSet& set, const DcfParams& params) {
  const auto eer = compute_eer(set);
  const auto dcf = compute_min_dcf(set, params);
  return {{"eer", eer.rate},
          {"eer_threshold", eer.threshold},
          {"min_dcf", dcf.rate},
          {"dcf_threshold", dcf.threshold},
          {"params", params.to_json()}};
}

}  // namespace ssv::eval
