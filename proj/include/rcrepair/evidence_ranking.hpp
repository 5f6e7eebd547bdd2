#pragma once

// Crash-class-conditioned evidence scoring: OWA aggregation inside each
// evidence family, noisy-OR across families, then a file-diversity rerank.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"
#include "rcrepair/foi_pool.hpp"
#include "rcrepair/report_model.hpp"

namespace rcrepair {

struct EvidenceFamily {
  std::string id;
  TagSet members;
  double cap = 0.0;
};

struct FamilyTaxonomy {
  std::vector<EvidenceFamily> families;

  /// Families must partition the six tags and every cap must lie in (0, 1).
  void validate() const {
    std::array<int, kAllTags.size()> seen{};
    for (const auto& f : families) {
      if (!(f.cap > 0.0 && f.cap < 1.0))
        throw DomainError("family '" + f.id + "' cap must lie in (0,1)");
      for (auto t : f.members.list()) ++seen[static_cast<std::size_t>(t)];
    }
    for (auto t : kAllTags)
      if (seen[static_cast<std::size_t>(t)] != 1)
        throw DomainError("tag '" + std::string(to_string(t)) + "' must belong to exactly one family");
  }

  static FamilyTaxonomy defaults() {
    return {{{"crash", {EvidenceTag::CrashStack}, 0.97},
             {"alloc", {EvidenceTag::AllocStack, EvidenceTag::FreeStack, EvidenceTag::ObjectOrigin}, 0.95},
             {"trace", {EvidenceTag::CallTrace}, 0.80},
             {"dataflow", {EvidenceTag::VarDep}, 0.85}}};
  }
};

using TagWeights = std::array<double, kAllTags.size()>;

struct WeightTable {
  double alpha = 0.25;
  std::map<CrashClass, TagWeights> weights;

  double weight(CrashClass c, EvidenceTag t) const {
    return weights.at(c)[static_cast<std::size_t>(t)];
  }

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in [0,1)");
    for (auto c : kAllCrashClasses) {
      auto it = weights.find(c);
      if (it == weights.end())
        throw DomainError("missing weights for crash class '" + std::string(to_string(c)) + "'");
      for (double w : it->second)
        if (!(w >= 0.0 && w <= 1.0)) throw DomainError("tag weights must lie in [0,1]");
    }
  }

  static WeightTable defaults() {
    WeightTable t;
    for (auto c : kAllCrashClasses) {
      TagWeights w{};
      w[static_cast<std::size_t>(EvidenceTag::CrashStack)] = c == CrashClass::Npd ? 0.92 : 0.85;
      w[static_cast<std::size_t>(EvidenceTag::CallTrace)] = 0.45;
      w[static_cast<std::size_t>(EvidenceTag::AllocStack)] = 0.65;
      w[static_cast<std::size_t>(EvidenceTag::FreeStack)] = c == CrashClass::Uaf ? 0.90 : 0.50;
      w[static_cast<std::size_t>(EvidenceTag::ObjectOrigin)] = 0.55;
      w[static_cast<std::size_t>(EvidenceTag::VarDep)] = 0.60;
      t.weights[c] = w;
    }
    return t;
  }
};

inline constexpr std::size_t kDefaultTopK = 20;
inline constexpr std::size_t kDefaultRerankHead = 10;

struct RankingConfig {
  FamilyTaxonomy taxonomy = FamilyTaxonomy::defaults();
  WeightTable weights = WeightTable::defaults();
  std::size_t top_k = kDefaultTopK;
  std::size_t rerank_head = kDefaultRerankHead;

  void validate() const {
    taxonomy.validate();
    weights.validate();
    if (top_k < 1 || rerank_head < 1) throw DomainError("top_k and rerank_head must be >= 1");
    if (rerank_head > top_k) throw DomainError("rerank_head must not exceed top_k");
  }
};

struct ScoredCandidate {
  FoiCandidate candidate;
  /// (family id, s_f) for families with at least one active tag, taxonomy order.
  std::vector<std::pair<std::string, double>> family_scores;
  double score = 0.0;
};

/// s_f = min(cap, w(1) + alpha * sum_{i>=2} w(i)) with weights sorted descending.
inline double family_score(std::span<const double> active_weights, double alpha, double cap) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in [0,1)");
  if (!(cap > 0.0 && cap < 1.0)) throw DomainError("cap must lie in (0,1)");
  for (double w : active_weights)
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("weight must lie in [0,1]");
  if (active_weights.empty()) return 0.0;
  std::vector<double> w(active_weights.begin(), active_weights.end());
  std::sort(w.begin(), w.end(), std::greater<>());
  const double rest = std::accumulate(w.begin() + 1, w.end(), 0.0);
  return std::min(cap, w.front() + alpha * rest);
}

/// Noisy-OR: 1 - prod(1 - s_f).
inline double combine_score(std::span<const double> family_scores) {
  double keep = 1.0;
  for (double s : family_scores) {
    if (!(s >= 0.0 && s < 1.0)) throw DomainError("family score must lie in [0,1)");
    keep *= 1.0 - s;
  }
  return 1.0 - keep;
}

/// CallTrace weights are scaled by the candidate's occurrence fraction in the
/// variant family, which down-weights functions seen only in a few traces.
inline ScoredCandidate score_candidate(const FoiCandidate& candidate, CrashClass crash_class,
                                       const RankingConfig& config) {
  ScoredCandidate out{candidate, {}, 0.0};
  std::vector<double> fs;
  for (const auto& fam : config.taxonomy.families) {
    std::vector<double> active;
    for (auto t : fam.members.list()) {
      if (!candidate.tags.contains(t)) continue;
      double w = config.weights.weight(crash_class, t);
      if (t == EvidenceTag::CallTrace) w *= candidate.meta.trace_fraction.value_or(1.0);
      active.push_back(w);
    }
    if (active.empty()) continue;
    const double s = family_score(active, config.weights.alpha, fam.cap);
    out.family_scores.emplace_back(fam.id, s);
    fs.push_back(s);
  }
  out.score = combine_score(fs);
  return out;
}

inline std::vector<ScoredCandidate> score_pool(const std::vector<FoiCandidate>& pool,
                                               CrashClass crash_class, const RankingConfig& config) {
  std::vector<ScoredCandidate> out;
  out.reserve(pool.size());
  for (const auto& c : pool) out.push_back(score_candidate(c, crash_class, config));
  return out;
}

/// Score descending, then more tags, then symbol and file ascending.
inline bool score_order(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.candidate.tags.size() != b.candidate.tags.size())
    return a.candidate.tags.size() > b.candidate.tags.size();
  if (a.candidate.function != b.candidate.function) return a.candidate.function < b.candidate.function;
  return a.candidate.file.value_or("") < b.candidate.file.value_or("");
}

/// Sorts by score, keeps the first rerank_head entries, then fills the tail
/// greedily, preferring the best-scored candidate from a file not yet in the
/// output (pure score order once every remaining file is represented).
/// Candidates without a file share one bucket. Truncates to top_k.
inline std::vector<ScoredCandidate> rank_and_diversify(std::vector<ScoredCandidate> scored,
                                                       const RankingConfig& config) {
  std::stable_sort(scored.begin(), scored.end(), score_order);
  const std::size_t head = std::min(config.rerank_head, scored.size());
  std::vector<ScoredCandidate> out(scored.begin(), scored.begin() + static_cast<long>(head));
  std::set<std::string> represented;
  for (const auto& s : out) represented.insert(s.candidate.file.value_or(""));

  std::vector<ScoredCandidate> rest(scored.begin() + static_cast<long>(head), scored.end());
  std::vector<bool> used(rest.size(), false);
  for (std::size_t step = 0; step < rest.size() && out.size() < config.top_k; ++step) {
    std::size_t pick = rest.size();
    std::size_t first_unused = rest.size();
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (used[i]) continue;
      if (first_unused == rest.size()) first_unused = i;
      if (!represented.contains(rest[i].candidate.file.value_or(""))) {
        pick = i;
        break;
      }
    }
    if (pick == rest.size()) pick = first_unused;
    used[pick] = true;
    represented.insert(rest[pick].candidate.file.value_or(""));
    out.push_back(rest[pick]);
  }
  if (out.size() > config.top_k) out.resize(config.top_k);
  return out;
}

// Configuration document -------------------------------------------------------

inline nlohmann::json ranking_config_to_json(const RankingConfig& c) {
  nlohmann::json doc{{"schema_version", 1},
                     {"kind", "ranking_config"},
                     {"alpha", c.weights.alpha},
                     {"top_k", c.top_k},
                     {"rerank_head", c.rerank_head},
                     {"families", nlohmann::json::array()},
                     {"weights", nlohmann::json::object()}};
  for (const auto& f : c.taxonomy.families) {
    nlohmann::json tags = nlohmann::json::array();
    for (auto t : f.members.list()) tags.push_back(to_string(t));
    doc["families"].push_back({{"id", f.id}, {"tags", tags}, {"cap", f.cap}});
  }
  for (const auto& [cls, w] : c.weights.weights) {
    nlohmann::json row = nlohmann::json::object();
    for (auto t : kAllTags) row[std::string(to_string(t))] = w[static_cast<std::size_t>(t)];
    doc["weights"][std::string(to_string(cls))] = row;
  }
  return doc;
}

/// Missing keys fall back to the defaults; a partial "weights" object
/// overrides only the listed (class, tag) pairs.
inline RankingConfig ranking_config_from_json(const nlohmann::json& doc) {
  RankingConfig c;
  try {
    if (!doc.is_object()) throw SchemaError("evidence_ranking", "ranking config must be an object");
    if (doc.contains("schema_version") && doc["schema_version"] != 1)
      throw SchemaError("evidence_ranking", "unsupported schema_version");
    if (doc.contains("alpha")) c.weights.alpha = doc["alpha"].get<double>();
    if (doc.contains("top_k")) c.top_k = doc["top_k"].get<std::size_t>();
    if (doc.contains("rerank_head")) c.rerank_head = doc["rerank_head"].get<std::size_t>();
    if (doc.contains("families")) {
      c.taxonomy.families.clear();
      long i = 0;
      for (const auto& f : doc["families"]) {
        EvidenceFamily fam{f.at("id").get<std::string>(), {}, f.at("cap").get<double>()};
        for (const auto& t : f.at("tags")) {
          auto tag = tag_from_string(t.get<std::string>());
          if (!tag) throw SchemaError("evidence_ranking", "unknown tag " + t.dump(), i);
          fam.members.insert(*tag);
        }
        c.taxonomy.families.push_back(std::move(fam));
        ++i;
      }
    }
    if (doc.contains("weights")) {
      for (const auto& [cls_name, row] : doc["weights"].items()) {
        auto cls = crash_class_from_string(cls_name);
        if (!cls) throw SchemaError("evidence_ranking", "unknown crash class '" + cls_name + "'");
        for (const auto& [tag_name, w] : row.items()) {
          auto tag = tag_from_string(tag_name);
          if (!tag) throw SchemaError("evidence_ranking", "unknown tag '" + tag_name + "'");
          c.weights.weights[*cls][static_cast<std::size_t>(*tag)] = w.get<double>();
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("evidence_ranking", std::string("bad ranking config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace rcrepair
