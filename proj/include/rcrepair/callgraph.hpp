#pragma once

// Static call graph, anchor-seeded bounded bidirectional BFS, and ingestion of
// externally exported dataflow candidates.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"
#include "rcrepair/report_model.hpp"

namespace rcrepair {

inline constexpr int kDefaultDepthLimit = 6;
inline constexpr std::size_t kDefaultCandidateCap = 300;
inline constexpr std::size_t kDefaultWidenMinCount = 30;
inline constexpr std::size_t kDefaultAnchorLimit = 10;

struct CallGraphNode {
  std::string id;
  std::string symbol;
  std::string file;
};

class CallGraph {
 public:
  CallGraph() = default;

  /// Throws SchemaError on duplicate ids, duplicate (symbol, file) pairs or
  /// dangling edges.
  CallGraph(std::vector<CallGraphNode> nodes, std::vector<std::pair<std::string, std::string>> edges)
      : nodes_(std::move(nodes)) {
    std::set<std::pair<std::string, std::string>> symbol_file;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (n.id.empty() || n.symbol.empty())
        throw SchemaError("callgraph", "node needs non-empty id and symbol", static_cast<long>(i));
      if (!index_.emplace(n.id, i).second)
        throw SchemaError("callgraph", "duplicate node id '" + n.id + "'", static_cast<long>(i));
      if (!symbol_file.emplace(n.symbol, n.file).second)
        throw SchemaError("callgraph", "duplicate (symbol, file) for '" + n.symbol + "'",
                          static_cast<long>(i));
      by_symbol_[n.symbol].push_back(i);
    }
    out_.resize(nodes_.size());
    in_.resize(nodes_.size());
    edges_.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto caller = index_.find(edges[e].first);
      auto callee = index_.find(edges[e].second);
      if (caller == index_.end() || callee == index_.end())
        throw SchemaError("callgraph", "edge references unknown node", static_cast<long>(e));
      edges_.emplace_back(caller->second, callee->second);
      out_[caller->second].push_back(callee->second);
      in_[callee->second].push_back(caller->second);
    }
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<CallGraphNode>& nodes() const noexcept { return nodes_; }
  const CallGraphNode& node(std::size_t i) const { return nodes_.at(i); }
  /// Edges as (caller index, callee index); multi-edges are kept.
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& callees(std::size_t i) const { return out_.at(i); }
  const std::vector<std::size_t>& callers(std::size_t i) const { return in_.at(i); }

  std::optional<std::size_t> find_id(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// All nodes carrying `symbol` (static functions may appear in several files).
  std::vector<std::size_t> resolve(const std::string& symbol) const {
    auto it = by_symbol_.find(symbol);
    return it == by_symbol_.end() ? std::vector<std::size_t>{} : it->second;
  }

 private:
  std::vector<CallGraphNode> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_symbol_;
};

namespace detail {

inline std::string json_id(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw std::invalid_argument("id must be a string or integer");
}

inline void check_schema_version(const nlohmann::json& doc, const std::string& module) {
  if (doc.contains("schema_version") &&
      (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != 1))
    throw SchemaError(module, "unsupported schema_version");
}

}  // namespace detail

/// Document shape: {nodes: [{id, symbol, file}], edges: [{caller, callee}]}.
inline CallGraph load_graph(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array() ||
      !doc.contains("edges") || !doc["edges"].is_array())
    throw SchemaError("callgraph", "document needs 'nodes' and 'edges' arrays");
  detail::check_schema_version(doc, "callgraph");

  std::vector<CallGraphNode> nodes;
  const auto& jn = doc["nodes"];
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const auto& n = jn[i];
    try {
      if (!n.is_object() || !n.contains("symbol") || !n["symbol"].is_string())
        throw std::invalid_argument("missing symbol");
      CallGraphNode node;
      node.id = detail::json_id(n.at("id"));
      node.symbol = n["symbol"].get<std::string>();
      if (n.contains("file") && !n["file"].is_null()) node.file = n["file"].get<std::string>();
      nodes.push_back(std::move(node));
    } catch (const std::exception& e) {
      throw SchemaError("callgraph", std::string("bad node: ") + e.what(), static_cast<long>(i));
    }
  }
  std::vector<std::pair<std::string, std::string>> edges;
  const auto& je = doc["edges"];
  for (std::size_t i = 0; i < je.size(); ++i) {
    try {
      edges.emplace_back(detail::json_id(je[i].at("caller")), detail::json_id(je[i].at("callee")));
    } catch (const std::exception& e) {
      throw SchemaError("callgraph", std::string("bad edge: ") + e.what(), static_cast<long>(i));
    }
  }
  return CallGraph(std::move(nodes), std::move(edges));
}

inline nlohmann::json graph_to_json(const CallGraph& g) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes())
    doc["nodes"].push_back({{"id", n.id}, {"symbol", n.symbol}, {"file", n.file}});
  doc["edges"] = nlohmann::json::array();
  for (auto [c, e] : g.edges())
    doc["edges"].push_back({{"caller", g.node(c).id}, {"callee", g.node(e).id}});
  return doc;
}

struct AnchorSignals {
  int anchors_count = 0;
  int edge_hits = 0;
  int min_depth = 0;

  friend bool operator==(const AnchorSignals&, const AnchorSignals&) = default;

  /// Componentwise best: more anchors, more hits, shallower.
  static AnchorSignals best(const AnchorSignals& a, const AnchorSignals& b) {
    return {std::max(a.anchors_count, b.anchors_count), std::max(a.edge_hits, b.edge_hits),
            std::min(a.min_depth, b.min_depth)};
  }
};

struct GraphCandidate {
  std::string node_id;
  std::string symbol;
  std::string file;
  AnchorSignals signals;
};

struct BfsResult {
  std::vector<GraphCandidate> candidates;
  std::vector<std::string> warnings;
};

/// Ranking key <-anchors, -edge_hits, min_depth>, then symbol, file, id.
inline bool candidate_order(const GraphCandidate& a, const GraphCandidate& b) {
  return std::make_tuple(-a.signals.anchors_count, -a.signals.edge_hits, a.signals.min_depth,
                         std::cref(a.symbol), std::cref(a.file), std::cref(a.node_id)) <
         std::make_tuple(-b.signals.anchors_count, -b.signals.edge_hits, b.signals.min_depth,
                         std::cref(b.symbol), std::cref(b.file), std::cref(b.node_id));
}

namespace detail {

inline std::vector<int> bfs_distances(const CallGraph& g, const std::vector<std::size_t>& sources,
                                      int depth_limit, bool downstream) {
  std::vector<int> dist(g.node_count(), -1);
  std::deque<std::size_t> queue;
  for (auto s : sources) {
    if (dist[s] != 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    if (dist[u] >= depth_limit) continue;
    for (auto v : downstream ? g.callees(u) : g.callers(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace detail

/// Bounded bidirectional BFS from each anchor. An anchor symbol resolving to
/// several nodes (static functions) is traversed as one multi-source anchor.
/// edge_hits counts, per anchor and direction, the traversed edges that arrive
/// at a node: u->v arrives at v going downstream (u expanded) and at u going
/// upstream (v expanded). Only nodes at depth < depth_limit are expanded.
inline BfsResult bfs_candidates(const CallGraph& graph, const std::vector<std::string>& anchors,
                                int depth_limit = kDefaultDepthLimit,
                                std::size_t cap = kDefaultCandidateCap) {
  if (depth_limit < 1) throw DomainError("callgraph", "depth_limit must be >= 1");
  if (cap < 1) throw DomainError("callgraph", "cap must be >= 1");

  BfsResult result;
  const std::size_t n = graph.node_count();
  std::vector<int> count(n, 0), hits(n, 0), depth(n, std::numeric_limits<int>::max());
  std::unordered_set<std::string> seen;
  bool any = false;

  for (const auto& anchor : anchors) {
    if (!seen.insert(anchor).second) continue;
    auto sources = graph.resolve(anchor);
    if (sources.empty()) {
      result.warnings.push_back("unresolved anchor '" + anchor + "'");
      continue;
    }
    any = true;
    auto down = detail::bfs_distances(graph, sources, depth_limit, true);
    auto up = detail::bfs_distances(graph, sources, depth_limit, false);
    for (std::size_t u = 0; u < n; ++u) {
      if (down[u] >= 0 && down[u] < depth_limit)
        for (auto v : graph.callees(u)) ++hits[v];
      if (up[u] >= 0 && up[u] < depth_limit)
        for (auto c : graph.callers(u)) ++hits[c];
      int d = -1;
      if (down[u] >= 0) d = down[u];
      if (up[u] >= 0 && (d < 0 || up[u] < d)) d = up[u];
      if (d >= 0) {
        ++count[u];
        depth[u] = std::min(depth[u], d);
      }
    }
  }
  if (!any) throw EmptyAnchorSet();

  for (std::size_t u = 0; u < n; ++u) {
    if (count[u] == 0) continue;
    const auto& node = graph.node(u);
    result.candidates.push_back({node.id, node.symbol, node.file, {count[u], hits[u], depth[u]}});
  }
  std::sort(result.candidates.begin(), result.candidates.end(), candidate_order);
  if (result.candidates.size() > cap) result.candidates.resize(cap);
  return result;
}

/// When `previous` is too small, re-runs the traversal seeded with every
/// crash-, alloc- and free-stack function and merges per node id.
inline BfsResult widen_and_merge(const CallGraph& graph, const SanitizerReport& report,
                                 const std::vector<GraphCandidate>& previous,
                                 std::size_t min_count = kDefaultWidenMinCount,
                                 int depth_limit = kDefaultDepthLimit,
                                 std::size_t cap = kDefaultCandidateCap) {
  if (previous.size() >= min_count) return {previous, {}};

  std::vector<std::string> anchors;
  for (const auto* st : {&report.crash_stack, &report.alloc_stack, &report.free_stack})
    for (const auto& f : *st) anchors.push_back(f.function);
  auto widened = bfs_candidates(graph, anchors, depth_limit, std::numeric_limits<std::size_t>::max());

  std::map<std::string, GraphCandidate> merged;
  for (const auto& c : previous) merged.emplace(c.node_id, c);
  for (const auto& c : widened.candidates) {
    auto [it, inserted] = merged.emplace(c.node_id, c);
    if (!inserted) it->second.signals = AnchorSignals::best(it->second.signals, c.signals);
  }
  BfsResult out{{}, std::move(widened.warnings)};
  for (auto& [id, c] : merged) out.candidates.push_back(std::move(c));
  std::sort(out.candidates.begin(), out.candidates.end(), candidate_order);
  if (out.candidates.size() > cap) out.candidates.resize(cap);
  return out;
}

enum class Access { Read, Write, ReadWrite };

inline std::string_view to_string(Access a) {
  switch (a) {
    case Access::Read: return "read";
    case Access::Write: return "write";
    case Access::ReadWrite: return "read_write";
  }
  return "read";
}

inline std::optional<Access> access_from_string(std::string_view s) {
  if (s == "read") return Access::Read;
  if (s == "write") return Access::Write;
  if (s == "read_write") return Access::ReadWrite;
  return std::nullopt;
}

struct DataflowCandidate {
  std::string function;
  std::optional<std::string> file;
  Access access = Access::Read;
};

/// Document shape: {crash_function, functions: [{symbol, file, access}]}.
/// A non-empty `crash_function` argument must match the document's.
inline std::vector<DataflowCandidate> ingest_dataflow_candidates(const nlohmann::json& doc,
                                                                 const std::string& crash_function) {
  if (!doc.is_object() || !doc.contains("functions") || !doc["functions"].is_array())
    throw SchemaError("callgraph", "dataflow export needs a 'functions' array");
  detail::check_schema_version(doc, "callgraph");
  if (!doc.contains("crash_function") || !doc["crash_function"].is_string())
    throw SchemaError("callgraph", "dataflow export needs 'crash_function'");
  if (!crash_function.empty() && doc["crash_function"].get<std::string>() != crash_function)
    throw SchemaError("callgraph", "dataflow export is for '" +
                                       doc["crash_function"].get<std::string>() + "', expected '" +
                                       crash_function + "'");
  std::vector<DataflowCandidate> out;
  const auto& fns = doc["functions"];
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const auto& f = fns[i];
    if (!f.is_object() || !f.contains("symbol") || !f["symbol"].is_string() ||
        f["symbol"].get<std::string>().empty())
      throw SchemaError("callgraph", "dataflow entry needs a symbol", static_cast<long>(i));
    DataflowCandidate c;
    c.function = f["symbol"].get<std::string>();
    if (f.contains("file") && f["file"].is_string()) c.file = f["file"].get<std::string>();
    if (f.contains("access")) {
      auto a = f["access"].is_string() ? access_from_string(f["access"].get<std::string>())
                                       : std::nullopt;
      if (!a) throw SchemaError("callgraph", "access must be read|write", static_cast<long>(i));
      c.access = *a;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace rcrepair
