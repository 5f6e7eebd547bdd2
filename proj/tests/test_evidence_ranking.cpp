#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "rcrepair/evidence_ranking.hpp"
#include "rcrepair/interchange.hpp"
#include "support/generators.hpp"

namespace fs = std::filesystem;
using namespace rcrepair;

namespace {

FoiCandidate cand(std::string fn, std::optional<std::string> file, TagSet tags) {
  return {std::move(fn), std::move(file), tags, {}, std::nullopt};
}

std::vector<FoiCandidate> example1_pool() {
  std::ifstream in(fs::path(RCREPAIR_FIXTURE_DIR) / "example1" / "pool.json");
  return interchange::pool_from_json(nlohmann::json::parse(in));
}

double fam(std::initializer_list<double> w, double alpha, double cap) {
  const std::vector<double> v(w);
  return family_score(v, alpha, cap);
}

}  // namespace

TEST(FamilyScore, Examples) {
  EXPECT_DOUBLE_EQ(fam({0.9, 0.65}, 0.25, 0.95), 0.95);
  EXPECT_DOUBLE_EQ(fam({0.5, 0.4}, 0.25, 0.95), 0.6);
  EXPECT_DOUBLE_EQ(fam({0.4, 0.5}, 0.25, 0.95), 0.6);
  EXPECT_DOUBLE_EQ(fam({0.7}, 0.25, 0.95), 0.7);
  EXPECT_DOUBLE_EQ(fam({}, 0.25, 0.95), 0.0);
  EXPECT_DOUBLE_EQ(fam({0.3, 0.3, 0.3}, 0.0, 0.9), 0.3);
  EXPECT_THROW(fam({0.5}, 1.0, 0.9), DomainError);
  EXPECT_THROW(fam({0.5}, 0.2, 1.0), DomainError);
  EXPECT_THROW(fam({1.5}, 0.2, 0.9), DomainError);
}

TEST(CombineScore, Examples) {
  const std::vector<double> two{0.85, 0.95};
  EXPECT_NEAR(combine_score(two), 0.9925, 1e-12);
  EXPECT_DOUBLE_EQ(combine_score(std::vector<double>{}), 0.0);
  EXPECT_DOUBLE_EQ(combine_score(std::vector<double>{0.4}), 0.4);
  EXPECT_THROW(combine_score(std::vector<double>{1.0}), DomainError);
}

TEST(Ranking, Example1UseAfterFree) {
  const auto ranked = rank_and_diversify(score_pool(example1_pool(), CrashClass::Uaf, RankingConfig{}), RankingConfig{});
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].candidate.function, "do_close");
  EXPECT_NEAR(ranked[0].score, 0.9925, 1e-12);
  EXPECT_EQ(ranked[1].candidate.function, "conn_cache_swap");
  EXPECT_NEAR(ranked[1].score, 0.95, 1e-12);
  EXPECT_EQ(ranked[2].candidate.function, "event_loop");
  EXPECT_NEAR(ranked[2].score, 0.85, 1e-12);
  ASSERT_EQ(ranked[0].family_scores.size(), 2u);
  EXPECT_EQ(ranked[0].family_scores[1].first, "alloc");
}

TEST(Ranking, TraceFractionScalesCallTrace) {
  auto c = cand("f", "a.c", {EvidenceTag::CallTrace});
  c.meta.trace_fraction = 0.5;
  EXPECT_NEAR(score_candidate(c, CrashClass::Spatial, RankingConfig{}).score, 0.225, 1e-12);
  c.meta.trace_fraction.reset();
  EXPECT_NEAR(score_candidate(c, CrashClass::Spatial, RankingConfig{}).score, 0.45, 1e-12);
}

TEST(Ranking, NpdAndUafWeights) {
  const auto crash = cand("f", "a.c", {EvidenceTag::CrashStack});
  EXPECT_NEAR(score_candidate(crash, CrashClass::Npd, RankingConfig{}).score, 0.92, 1e-12);
  const auto fr = cand("f", "a.c", {EvidenceTag::FreeStack});
  EXPECT_NEAR(score_candidate(fr, CrashClass::Uaf, RankingConfig{}).score, 0.90, 1e-12);
  EXPECT_NEAR(score_candidate(fr, CrashClass::Spatial, RankingConfig{}).score, 0.50, 1e-12);
}

TEST(Ranking, BreadthBeatsDepthInOneFamily) {
  RankingConfig cfg;
  // Two independent families outscore the same two weights stacked in one family.
  const auto wide = cand("w", "a.c", {EvidenceTag::CrashStack, EvidenceTag::VarDep});
  const auto deep = cand("d", "a.c", {EvidenceTag::AllocStack, EvidenceTag::ObjectOrigin});
  EXPECT_GT(score_candidate(wide, CrashClass::Spatial, cfg).score,
            score_candidate(deep, CrashClass::Spatial, cfg).score);
}

TEST(RankingProperties, BoundsMonotonicityAndPermutation) {
  proptest::Gen g(4242);
  for (int i = 0; i < 300; ++i) {
    const auto cfg = proptest::random_ranking_config(g);
    ASSERT_NO_THROW(cfg.validate());
    const auto cls = g.pick(std::vector<CrashClass>(std::begin(kAllCrashClasses), std::end(kAllCrashClasses)));
    auto c = proptest::random_candidate(g);
    const auto s = score_candidate(c, cls, cfg);
    EXPECT_GE(s.score, 0.0);
    EXPECT_LT(s.score, 1.0);
    double max_cap = 0.0;
    for (const auto& [id, v] : s.family_scores) {
      for (const auto& f : cfg.taxonomy.families)
        if (f.id == id) EXPECT_LE(v, f.cap);
      max_cap = std::max(max_cap, v);
    }
    EXPECT_GE(s.score + 1e-12, max_cap);

    // Adding a tag never lowers the score.
    auto more = c;
    const auto extra = g.pick(std::vector<EvidenceTag>(kAllTags.begin(), kAllTags.end()));
    more.tags.insert(extra);
    if (extra == EvidenceTag::CallTrace && !c.tags.contains(EvidenceTag::CallTrace)) more.meta.trace_fraction = 1.0;
    EXPECT_GE(score_candidate(more, cls, cfg).score + 1e-12, s.score);

    // Raising one weight never lowers a score.
    auto heavier = cfg;
    auto& w = heavier.weights.weights[cls][static_cast<std::size_t>(extra)];
    w = std::min(1.0, w + g.real(0.0, 0.5));
    EXPECT_GE(score_candidate(c, cls, heavier).score + 1e-12, s.score);
  }
}

TEST(RankingProperties, OrderIsPermutationInvariantAndMatchesReference) {
  proptest::Gen g(99);
  for (int i = 0; i < 150; ++i) {
    auto cfg = proptest::random_ranking_config(g);
    cfg.top_k = static_cast<std::size_t>(g.range(1, 25));
    cfg.rerank_head = static_cast<std::size_t>(g.range(1, static_cast<int>(cfg.top_k)));
    const auto pool = merge_pool({proptest::random_pool(g, 30)});
    const auto scored = score_pool(pool, CrashClass::Spatial, cfg);
    const auto got = rank_and_diversify(scored, cfg);
    const auto want = proptest::reference_rerank(scored, cfg.rerank_head, cfg.top_k);
    ASSERT_EQ(got.size(), want.size());
    EXPECT_LE(got.size(), cfg.top_k);
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].candidate.function, want[k].candidate.function);
      EXPECT_EQ(got[k].candidate.file, want[k].candidate.file);
    }

    auto shuffled = scored;
    g.shuffle(shuffled);
    const auto again = rank_and_diversify(shuffled, cfg);
    ASSERT_EQ(again.size(), got.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(again[k].candidate.function, got[k].candidate.function);

    // The head is exactly the score-ordered prefix.
    auto sorted = scored;
    std::stable_sort(sorted.begin(), sorted.end(), score_order);
    for (std::size_t k = 0; k < std::min(cfg.rerank_head, got.size()); ++k)
      EXPECT_EQ(got[k].candidate.function, sorted[k].candidate.function);
  }
}

TEST(Diversify, ThirtyCandidatesOverFiveFiles) {
  std::vector<ScoredCandidate> scored;
  // File f0 dominates the score order; the tail should pull in the other files first.
  for (int i = 0; i < 30; ++i) {
    const int file = i < 14 ? 0 : 1 + (i % 4);
    scored.push_back({cand("fn" + std::to_string(i), "src/f" + std::to_string(file) + ".c", {EvidenceTag::VarDep}),
                      {},
                      1.0 - i / 100.0});
  }
  const auto out = rank_and_diversify(scored, RankingConfig{});
  ASSERT_EQ(out.size(), 20u);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(out[static_cast<std::size_t>(k)].candidate.function, "fn" + std::to_string(k));
  std::set<std::string> tail_files;
  for (std::size_t k = 10; k < 14; ++k) tail_files.insert(*out[k].candidate.file);
  EXPECT_EQ(tail_files.size(), 4u);
  EXPECT_FALSE(tail_files.contains("src/f0.c"));
}

TEST(Config, JsonRoundTripAndValidation) {
  proptest::Gen g(12);
  for (int i = 0; i < 20; ++i) {
    const auto cfg = proptest::random_ranking_config(g);
    const auto again = ranking_config_from_json(ranking_config_to_json(cfg));
    EXPECT_EQ(ranking_config_to_json(again), ranking_config_to_json(cfg));
  }
  auto doc = ranking_config_to_json(RankingConfig{});
  doc["alpha"] = 1.2;
  EXPECT_THROW(ranking_config_from_json(doc), DomainError);

  RankingConfig bad;
  bad.taxonomy.families.pop_back();
  EXPECT_THROW(bad.validate(), DomainError);
  RankingConfig head;
  head.rerank_head = 30;
  EXPECT_THROW(head.validate(), DomainError);
}
