#include <gtest/gtest.h>

#include "rcrepair/callgraph.hpp"
#include "support/generators.hpp"

using namespace rcrepair;
using nlohmann::json;

namespace {

CallGraph chain() {
  return CallGraph({{"a", "A", "x.c"}, {"b", "B", "x.c"}, {"c", "C", "x.c"}}, {{"a", "b"}, {"b", "c"}});
}

std::vector<std::string> symbols(const std::vector<GraphCandidate>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.symbol);
  return out;
}

}  // namespace

TEST(LoadGraph, CountsAndValidation) {
  const json ok = {{"nodes", {{{"id", 1}, {"symbol", "f"}, {"file", "a.c"}}, {{"id", 2}, {"symbol", "g"}, {"file", "a.c"}}}},
                   {"edges", {{{"caller", 1}, {"callee", 2}}}}};
  const auto g = load_graph(ok);
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.edge_count(), 1u);

  json dangling = ok;
  dangling["edges"].push_back({{"caller", 1}, {"callee", 9}});
  try {
    load_graph(dangling);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }

  json dup = ok;
  dup["nodes"].push_back({{"id", 1}, {"symbol", "h"}});
  EXPECT_THROW(load_graph(dup), SchemaError);
  EXPECT_THROW(load_graph(json{{"nodes", json::array()}}), SchemaError);
  EXPECT_THROW(load_graph(json{{"nodes", json::array()}, {"edges", json::array()}, {"schema_version", 2}}), SchemaError);
}

TEST(LoadGraph, RandomGraphsRoundTrip) {
  proptest::Gen g(17);
  for (int i = 0; i < 20; ++i) {
    auto c = proptest::random_graph_case(g);
    const auto again = load_graph(graph_to_json(c.graph));
    EXPECT_EQ(again.node_count(), c.graph.node_count());
    EXPECT_EQ(again.edge_count(), c.graph.edge_count());
  }
}

TEST(Bfs, ChainOrdersByEdgeHitsThenDepth) {
  const auto r = bfs_candidates(chain(), {"A"}, 2, 300);
  // A is the anchor (depth 0, no traversal arrivals); B and C each receive one
  // arrival, so they lead on edge_hits and then split on depth.
  EXPECT_EQ(symbols(r.candidates), (std::vector<std::string>{"B", "C", "A"}));
  EXPECT_EQ(r.candidates[2].signals, (AnchorSignals{1, 0, 0}));
  EXPECT_EQ(r.candidates[0].signals, (AnchorSignals{1, 1, 1}));
  EXPECT_EQ(r.candidates[1].signals, (AnchorSignals{1, 1, 2}));
}

TEST(Bfs, DepthLimitAndCap) {
  EXPECT_EQ(bfs_candidates(chain(), {"A"}, 1, 300).candidates.size(), 2u);
  EXPECT_EQ(bfs_candidates(chain(), {"A"}, 6, 1).candidates.size(), 1u);
  EXPECT_EQ(kDefaultCandidateCap, 300u);
  EXPECT_EQ(kDefaultDepthLimit, 6);
}

TEST(Bfs, SharedCalleeOutranksSingleAnchorCallee) {
  const CallGraph g({{"p", "P", ""}, {"q", "Q", ""}, {"f", "F", ""}, {"g", "G", ""}},
                    {{"p", "f"}, {"q", "f"}, {"p", "g"}});
  const auto r = bfs_candidates(g, {"P", "Q"}, 1, 300);
  const auto s = symbols(r.candidates);
  auto pos = [&](const std::string& x) { return std::find(s.begin(), s.end(), x) - s.begin(); };
  EXPECT_LT(pos("F"), pos("G"));
  EXPECT_EQ(r.candidates[static_cast<std::size_t>(pos("F"))].signals.anchors_count, 2);
}

TEST(Bfs, UnresolvedAnchorsWarnAndEmptySetThrows) {
  const auto r = bfs_candidates(chain(), {"nope", "A"}, 2, 300);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("nope"), std::string::npos);
  EXPECT_THROW(bfs_candidates(chain(), {"nope"}, 2, 300), EmptyAnchorSet);
  EXPECT_THROW(bfs_candidates(chain(), {}, 2, 300), EmptyAnchorSet);
}

TEST(Bfs, MatchesBruteForceReference) {
  proptest::Gen g(2024);
  for (int i = 0; i < 100; ++i) {
    auto c = proptest::random_graph_case(g);
    const std::size_t cap = g.coin(0.2) ? static_cast<std::size_t>(g.range(1, 10)) : 300;
    const auto got = bfs_candidates(c.graph, c.anchors, c.depth, cap).candidates;
    const auto want = proptest::reference_bfs(c.graph, c.anchors, c.depth, cap);
    ASSERT_EQ(got.size(), want.size()) << "case " << i;
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].node_id, want[k].node_id) << "case " << i << " pos " << k;
      EXPECT_EQ(got[k].signals, want[k].signals) << "case " << i << " pos " << k;
      EXPECT_LE(got[k].signals.min_depth, c.depth);
    }
  }
}

TEST(Bfs, DeterministicAndAnchorMonotone) {
  proptest::Gen g(5);
  for (int i = 0; i < 50; ++i) {
    auto c = proptest::random_graph_case(g);
    const auto a = bfs_candidates(c.graph, c.anchors, c.depth, 1000).candidates;
    const auto b = bfs_candidates(c.graph, c.anchors, c.depth, 1000).candidates;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].node_id, b[k].node_id);

    auto more = c.anchors;
    more.push_back(c.graph.node(static_cast<std::size_t>(g.range(0, static_cast<int>(c.graph.node_count()) - 1))).symbol);
    const auto wider = bfs_candidates(c.graph, more, c.depth, 1000).candidates;
    std::map<std::string, int> count;
    for (const auto& w : wider) count[w.node_id] = w.signals.anchors_count;
    for (const auto& x : a) EXPECT_GE(count[x.node_id], x.signals.anchors_count);
  }
}

TEST(Widen, IdentityAtThreshold) {
  SanitizerReport r;
  r.crash_stack = {{0, "A", std::nullopt, std::nullopt}};
  const auto prev = bfs_candidates(chain(), {"A"}, 1, 300).candidates;
  const auto out = widen_and_merge(chain(), r, prev, prev.size(), 1, 300);
  EXPECT_EQ(symbols(out.candidates), symbols(prev));
}

TEST(Widen, SupersetWithComponentwiseBest) {
  // D is only reachable from the alloc-stack function E.
  const CallGraph g({{"a", "A", ""}, {"b", "B", ""}, {"e", "E", ""}, {"d", "D", ""}},
                    {{"a", "b"}, {"e", "d"}, {"e", "b"}});
  SanitizerReport r;
  r.crash_class = CrashClass::Spatial;
  r.crash_stack = {{0, "A", std::nullopt, std::nullopt}};
  r.alloc_stack = {{0, "E", std::nullopt, std::nullopt}};
  const auto prev = bfs_candidates(g, {"A"}, 2, 300).candidates;
  const auto out = widen_and_merge(g, r, prev, 30, 2, 300).candidates;
  const auto direct = bfs_candidates(g, {"A", "E"}, 2, 300).candidates;

  std::map<std::string, AnchorSignals> got;
  for (const auto& c : out) got[c.symbol] = c.signals;
  for (const auto& p : prev) ASSERT_TRUE(got.contains(p.symbol));
  EXPECT_TRUE(got.contains("D"));
  EXPECT_TRUE(got.contains("E"));
  // B is reached by both anchors in the widened run: best of (1,1,1) and (2,2,1).
  EXPECT_EQ(got["B"], (AnchorSignals{2, 2, 1}));
  EXPECT_EQ(out.size(), direct.size());
}

TEST(Dataflow, Ingestion) {
  const json empty{{"crash_function", "f"}, {"functions", json::array()}};
  EXPECT_TRUE(ingest_dataflow_candidates(empty, "f").empty());

  const json four{{"crash_function", "f"},
                  {"functions",
                   {{{"symbol", "f"}, {"file", "a.c"}, {"access", "write"}},
                    {{"symbol", "g"}},
                    {{"symbol", "h"}, {"access", "read"}},
                    {{"symbol", "k"}, {"file", "b.c"}}}}};
  const auto out = ingest_dataflow_candidates(four, "f");
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].function, "f");
  EXPECT_EQ(out[0].access, Access::Write);
  EXPECT_FALSE(out[1].file.has_value());

  EXPECT_THROW(ingest_dataflow_candidates(four, "other"), SchemaError);
  EXPECT_NO_THROW(ingest_dataflow_candidates(four, ""));
  json bad = four;
  bad["functions"][1]["access"] = "sideways";
  EXPECT_THROW(ingest_dataflow_candidates(bad, "f"), SchemaError);
  EXPECT_THROW(ingest_dataflow_candidates(json{{"functions", json::array()}}, ""), SchemaError);
}
