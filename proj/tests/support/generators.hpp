#pragma once

// Hand-rolled random generators and brute-force reference implementations
// shared by the property tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rcrepair/callgraph.hpp"
#include "rcrepair/evidence_ranking.hpp"
#include "rcrepair/foi_pool.hpp"

namespace rcrepair::proptest {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(range(0, static_cast<int>(v.size()) - 1))];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), rng_);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Call graphs --------------------------------------------------------------------

struct GraphCase {
  CallGraph graph;
  std::vector<std::string> anchors;
  int depth = 1;
};

/// Up to 50 nodes and 150 edges; a few symbols repeat across files the way
/// static functions do, and some anchors do not resolve.
inline GraphCase random_graph_case(Gen& g) {
  const int n = g.range(1, 50);
  const int symbols = std::max(1, n - g.range(0, n / 5));
  std::vector<CallGraphNode> nodes;
  std::set<std::pair<std::string, std::string>> used;
  for (int i = 0; i < n; ++i) {
    std::string sym = "fn" + std::to_string(i < symbols ? i : g.range(0, symbols - 1));
    std::string file = "src/f" + std::to_string(g.range(0, 7)) + ".c";
    while (!used.emplace(sym, file).second) file += "x";
    nodes.push_back({"n" + std::to_string(i), sym, file});
  }
  std::vector<std::pair<std::string, std::string>> edges;
  const int m = g.range(0, std::min(150, n * n));
  for (int e = 0; e < m; ++e)
    edges.emplace_back("n" + std::to_string(g.range(0, n - 1)), "n" + std::to_string(g.range(0, n - 1)));

  GraphCase c{CallGraph(nodes, edges), {}, g.range(1, 6)};
  const int anchors = g.range(1, 4);
  for (int a = 0; a < anchors; ++a)
    c.anchors.push_back(g.coin(0.9) ? nodes[static_cast<std::size_t>(g.range(0, n - 1))].symbol : "missing_fn");
  if (std::none_of(c.anchors.begin(), c.anchors.end(), [](const auto& s) { return s != "missing_fn"; }))
    c.anchors.front() = nodes.front().symbol;
  return c;
}

/// All-pairs shortest paths (Floyd-Warshall) followed by a direct evaluation of
/// the three signals and a sort with an independently written comparator.
inline std::vector<GraphCandidate> reference_bfs(const CallGraph& g, const std::vector<std::string>& anchors,
                                                 int depth, std::size_t cap) {
  const std::size_t n = g.node_count();
  constexpr int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (auto [a, b] : g.edges()) d[a][b] = std::min(d[a][b], 1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];

  std::vector<int> count(n, 0), hits(n, 0), best(n, inf);
  std::set<std::string> done;
  for (const auto& a : anchors) {
    if (!done.insert(a).second) continue;
    std::vector<std::size_t> src;
    for (std::size_t i = 0; i < n; ++i)
      if (g.node(i).symbol == a) src.push_back(i);
    if (src.empty()) continue;
    auto down = [&](std::size_t u) {
      int m = inf;
      for (auto s : src) m = std::min(m, d[s][u]);
      return m;
    };
    auto up = [&](std::size_t u) {
      int m = inf;
      for (auto s : src) m = std::min(m, d[u][s]);
      return m;
    };
    for (std::size_t u = 0; u < n; ++u) {
      const int dist = std::min(down(u), up(u));
      if (dist <= depth) {
        ++count[u];
        best[u] = std::min(best[u], dist);
      }
    }
    for (auto [caller, callee] : g.edges()) {
      if (down(caller) < depth) ++hits[callee];
      if (up(callee) < depth) ++hits[caller];
    }
  }

  std::vector<GraphCandidate> out;
  for (std::size_t u = 0; u < n; ++u)
    if (count[u] > 0) out.push_back({g.node(u).id, g.node(u).symbol, g.node(u).file, {count[u], hits[u], best[u]}});
  std::sort(out.begin(), out.end(), [](const GraphCandidate& x, const GraphCandidate& y) {
    if (x.signals.anchors_count != y.signals.anchors_count) return x.signals.anchors_count > y.signals.anchors_count;
    if (x.signals.edge_hits != y.signals.edge_hits) return x.signals.edge_hits > y.signals.edge_hits;
    if (x.signals.min_depth != y.signals.min_depth) return x.signals.min_depth < y.signals.min_depth;
    if (x.symbol != y.symbol) return x.symbol < y.symbol;
    if (x.file != y.file) return x.file < y.file;
    return x.node_id < y.node_id;
  });
  if (out.size() > cap) out.resize(cap);
  return out;
}

// Pools --------------------------------------------------------------------------

inline FoiCandidate random_candidate(Gen& g, bool allow_fileless = true) {
  static const std::vector<std::string> symbols{
      "do_close", "parse_header", "read_records", "copy_record", "alloc_table", "main",
      "memcpy", "LLVMFuzzerTestOneInput", "__asan_memcpy", "helper", "free", "operator new"};
  static const std::vector<std::string> files{"src/a.c", "src/b.c", "lib/c.c", "tests/t.c", "fuzz/f.c",
                                              "src/testing/d.c"};
  FoiCandidate c;
  c.function = g.pick(symbols);
  if (!allow_fileless || g.coin(0.8)) c.file = g.pick(files);
  do {
    for (auto t : kAllTags)
      if (g.coin(0.3)) c.tags.insert(t);
  } while (c.tags.empty());
  if (c.tags.contains(EvidenceTag::CallTrace) && g.coin()) c.meta.trace_fraction = g.range(1, 8) / 8.0;
  if (c.tags.contains(EvidenceTag::CrashStack) && g.coin()) c.meta.crash_ordinal = g.range(0, 5);
  if (c.tags.contains(EvidenceTag::AllocStack) && g.coin()) c.meta.alloc_ordinal = g.range(0, 5);
  if (c.tags.contains(EvidenceTag::FreeStack) && g.coin()) c.meta.free_ordinal = g.range(0, 5);
  if (c.tags.contains(EvidenceTag::ObjectOrigin) && g.coin()) c.meta.origin_ordinal = g.range(0, 5);
  if (c.tags.contains(EvidenceTag::VarDep) && g.coin())
    c.meta.access = g.pick(std::vector<Access>{Access::Read, Access::Write, Access::ReadWrite});
  if (g.coin(0.3)) c.signals = AnchorSignals{g.range(1, 4), g.range(0, 9), g.range(0, 6)};
  return c;
}

inline std::vector<FoiCandidate> random_pool(Gen& g, int max_size = 25, bool allow_fileless = true) {
  std::vector<FoiCandidate> p;
  const int n = g.range(0, max_size);
  for (int i = 0; i < n; ++i) p.push_back(random_candidate(g, allow_fileless));
  return p;
}

using CandidateKey = std::tuple<std::string, std::string>;

/// Fused record set keyed by (function, file), independent of output order.
inline std::map<CandidateKey, FoiCandidate> as_set(const std::vector<FoiCandidate>& pool) {
  std::map<CandidateKey, FoiCandidate> out;
  for (const auto& c : pool) out.emplace(CandidateKey{c.function, c.file.value_or("")}, c);
  return out;
}

// Ranking ------------------------------------------------------------------------

/// Random taxonomy (a random partition of the six tags), caps, weights and alpha.
inline RankingConfig random_ranking_config(Gen& g) {
  RankingConfig c;
  c.taxonomy.families.clear();
  const int families = g.range(1, 6);
  for (int f = 0; f < families; ++f) c.taxonomy.families.push_back({"f" + std::to_string(f), {}, g.real(0.05, 0.99)});
  std::vector<int> owner;
  for (std::size_t t = 0; t < kAllTags.size(); ++t) owner.push_back(t < static_cast<std::size_t>(families) ? static_cast<int>(t) : g.range(0, families - 1));
  g.shuffle(owner);
  for (std::size_t t = 0; t < kAllTags.size(); ++t)
    c.taxonomy.families[static_cast<std::size_t>(owner[t])].members.insert(kAllTags[t]);
  c.weights.alpha = g.real(0.0, 0.999);
  for (auto cls : kAllCrashClasses) {
    TagWeights w{};
    for (auto& x : w) x = g.coin(0.1) ? (g.coin() ? 0.0 : 1.0) : g.real(0.0, 1.0);
    c.weights.weights[cls] = w;
  }
  return c;
}

/// Greedy tail diversification written against the rule, not the implementation.
inline std::vector<ScoredCandidate> reference_rerank(std::vector<ScoredCandidate> scored, std::size_t head,
                                                     std::size_t top_k) {
  std::stable_sort(scored.begin(), scored.end(), score_order);
  std::vector<ScoredCandidate> out;
  std::set<std::string> seen_files;
  std::vector<ScoredCandidate> remaining;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (i < head) {
      out.push_back(scored[i]);
      seen_files.insert(scored[i].candidate.file.value_or(""));
    } else {
      remaining.push_back(scored[i]);
    }
  }
  while (!remaining.empty() && out.size() < top_k) {
    auto it = std::find_if(remaining.begin(), remaining.end(), [&](const ScoredCandidate& s) {
      return !seen_files.count(s.candidate.file.value_or(""));
    });
    if (it == remaining.end()) it = remaining.begin();
    seen_files.insert(it->candidate.file.value_or(""));
    out.push_back(*it);
    remaining.erase(it);
  }
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

}  // namespace rcrepair::proptest
