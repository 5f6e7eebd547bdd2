#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rcrepair/dynamic_traces.hpp"
#include "support/generators.hpp"

namespace fs = std::filesystem;
using namespace rcrepair;
using nlohmann::json;

namespace {

const fs::path kMini = fs::path(RCREPAIR_FIXTURE_DIR) / "miniproject";

ExecutionTrace trace(const std::string& id, std::vector<std::string> fns) {
  ExecutionTrace t{id, {}, std::nullopt};
  for (auto& f : fns) t.frames.push_back({std::move(f), std::nullopt});
  return t;
}

class FailingBackend : public FuzzerBackend {
 public:
  std::vector<CrashVariant> explore(const fs::path&, std::chrono::seconds) override {
    throw std::runtime_error("afl-fuzz: no instrumentation found");
  }
};

}  // namespace

TEST(ParseTrace, OrderAndCollapse) {
  const auto t = parse_trace(json{{"variant_id", "v"},
                                  {"frames", {{{"function", "a"}}, {{"function", "b"}, {"file", "x.c"}}, {{"function", "c"}}}}});
  ASSERT_EQ(t.frames.size(), 3u);
  EXPECT_EQ(t.frames[1].file, "x.c");

  const auto c = parse_trace(json{{"variant_id", "v"},
                                  {"frames", {{{"function", "A"}}, {{"function", "A"}}, {{"function", "A"}}, {{"function", "B"}}}}});
  ASSERT_EQ(c.frames.size(), 2u);
  EXPECT_EQ(c.frames[0].function, "A");
  EXPECT_EQ(c.frames[1].function, "B");

  EXPECT_THROW(parse_trace(json{{"frames", json::array()}}), SchemaError);
  EXPECT_THROW(parse_trace(json{{"variant_id", "v"}, {"frames", {{{"function", ""}}}}}), SchemaError);
}

TEST(ParseTrace, NoConsecutiveDuplicatesOnRandomInput) {
  proptest::Gen g(9);
  for (int i = 0; i < 50; ++i) {
    json frames = json::array();
    const int n = g.range(0, 60);
    for (int k = 0; k < n; ++k) frames.push_back({{"function", "f" + std::to_string(g.range(0, 3))}});
    const auto t = parse_trace(json{{"variant_id", "v"}, {"frames", frames}});
    for (std::size_t k = 1; k < t.frames.size(); ++k) EXPECT_NE(t.frames[k], t.frames[k - 1]);
  }
}

TEST(ParseTrace, ThousandFramesIsFast) {
  json frames = json::array();
  for (int k = 0; k < 1000; ++k) frames.push_back({{"function", "fn" + std::to_string(k % 97)}, {"file", "src/a.c"}});
  const json doc{{"variant_id", "big"}, {"frames", frames}};
  const auto start = std::chrono::steady_clock::now();
  const auto t = parse_trace(doc);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  EXPECT_EQ(t.frames.size(), 1000u);
  EXPECT_LT(ms.count(), 50);
}

TEST(ParseTraceStream, RecordIndexInErrors) {
  std::istringstream in("{\"variant_id\":\"a\",\"frames\":[]}\n\n{\"variant_id\":\"b\",\"frames\":[]}\nnot json\n");
  try {
    parse_trace_stream(in);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos);
  }
}

TEST(FamilyStats, Fractions) {
  auto one = family_stats({trace("s", {"F"})});
  EXPECT_DOUBLE_EQ(one.find("F")->fraction, 1.0);

  auto four = family_stats({trace("a", {"F", "G", "F"}), trace("b", {"F"}), trace("c", {"F", "H"}), trace("d", {"G"})});
  EXPECT_DOUBLE_EQ(four.find("F")->fraction, 0.75);
  EXPECT_EQ(four.find("F")->appears_in, 3);
  EXPECT_DOUBLE_EQ(four.find("H")->fraction, 0.25);

  EXPECT_THROW(family_stats({}), EmptyFamily);
  EXPECT_THROW(family_stats({trace("a", {"F"}), trace("a", {"G"})}), DomainError);
}

TEST(FamilyStats, MatchesRecountAndIsPermutationInvariant) {
  proptest::Gen g(31);
  for (int round = 0; round < 20; ++round) {
    std::vector<ExecutionTrace> fam;
    std::size_t widest = 0;
    for (int i = 0; i < 20; ++i) {
      std::vector<std::string> fns;
      const int n = g.range(1, 30);
      for (int k = 0; k < n; ++k) fns.push_back("f" + std::to_string(g.range(0, 15)));
      fam.push_back(trace("v" + std::to_string(i), fns));
      widest = std::max(widest, std::set<std::string>(fns.begin(), fns.end()).size());
    }
    const auto stats = family_stats(fam);
    long total = 0;
    for (int f = 0; f < 16; ++f) {
      const std::string name = "f" + std::to_string(f);
      int recount = 0;
      for (const auto& t : fam)
        for (const auto& fr : t.frames)
          if (fr.function == name) {
            ++recount;
            break;
          }
      const auto occ = stats.find(name);
      if (recount == 0) {
        EXPECT_FALSE(occ.has_value());
        continue;
      }
      ASSERT_TRUE(occ.has_value());
      EXPECT_EQ(occ->appears_in, recount);
      EXPECT_DOUBLE_EQ(occ->fraction, recount / 20.0);
      total += recount;
    }
    EXPECT_LE(total, static_cast<long>(fam.size() * widest));

    auto shuffled = fam;
    g.shuffle(shuffled);
    const auto again = family_stats(shuffled);
    for (const auto& [k, occ] : stats.functions) EXPECT_EQ(again.functions.at(k).appears_in, occ.appears_in);
  }
}

TEST(SameClass, DropsOtherClassesKeepsUnlabelled) {
  auto a = trace("a", {"F"});
  a.bug_label = "heap-buffer-overflow";
  auto b = trace("b", {"F"});
  b.bug_label = "heap-use-after-free";
  auto c = trace("c", {"F"});
  const auto kept = same_class_traces({a, b, c}, CrashClass::Spatial);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].variant_id, "a");
  EXPECT_EQ(kept[1].variant_id, "c");
}

TEST(Exploration, RecordedVariants) {
  RecordedVariantsBackend stub(kMini / "variants");
  const auto found = run_crash_exploration(stub, kMini / "poc.bin", std::chrono::seconds(5));
  // Four recorded variants, one of which no longer crashes.
  ASSERT_EQ(found.size(), 3u);
  for (const auto& v : found) EXPECT_TRUE(v.crashes);
  const auto fam = load_family_traces(found, CrashClass::Spatial);
  EXPECT_EQ(fam.size(), 3u);
  EXPECT_TRUE(load_family_traces(found, CrashClass::Uaf).empty());
}

TEST(Exploration, ZeroBudgetIsSeedOnly) {
  RecordedVariantsBackend stub(kMini / "variants");
  const auto found = run_crash_exploration(stub, kMini / "poc.bin", std::chrono::seconds(0));
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].input_ref, kMini / "poc.bin");
  EXPECT_EQ(kDefaultExplorationBudget, std::chrono::hours(12));
}

TEST(Exploration, BackendFailuresBecomeAdapterErrors) {
  FailingBackend bad;
  try {
    run_crash_exploration(bad, kMini / "poc.bin", std::chrono::seconds(1));
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_NE(std::string(e.what()).find("no instrumentation"), std::string::npos);
  }
  RecordedVariantsBackend missing(kMini / "no-such-dir");
  EXPECT_THROW(run_crash_exploration(missing, kMini / "poc.bin", std::chrono::seconds(1)), AdapterError);
}

TEST(Exploration, CommandBackendReadsItsOutputDirectory) {
  const auto out = fs::temp_directory_path() / ("rcrepair-cmd-fuzz-" + std::to_string(::getpid()));
  fs::remove_all(out);
  const std::string cmd = "cp -r " + shell_quote((kMini / "variants").string()) + "/. {out_dir} && test {budget_seconds} = 3";
  CommandFuzzerBackend real(cmd, out);
  EXPECT_EQ(run_crash_exploration(real, kMini / "poc.bin", std::chrono::seconds(3)).size(), 3u);
  fs::remove_all(out);
  CommandFuzzerBackend failing("exit 4", out);
  EXPECT_THROW(run_crash_exploration(failing, kMini / "poc.bin", std::chrono::seconds(3)), AdapterError);
  fs::remove_all(out);
}
