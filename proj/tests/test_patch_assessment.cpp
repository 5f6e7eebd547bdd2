#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rcrepair/patch_assessment.hpp"
#include "support/generators.hpp"

namespace fs = std::filesystem;
using namespace rcrepair;

namespace {

using Q = Quality;

RatingsStore load_store(const std::string& name) {
  std::ifstream in(fs::path(RCREPAIR_FIXTURE_DIR) / "ratings" / name);
  return parse_ratings_store(in);
}

/// Two-sided exact p-value by direct summation of the pmf (no log-gamma).
double summed_p(long a, long b) {
  const long n = a + b;
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  pmf[0] = std::pow(0.5, static_cast<double>(n));
  for (long k = 1; k <= n; ++k) pmf[static_cast<std::size_t>(k)] = pmf[static_cast<std::size_t>(k - 1)] * static_cast<double>(n - k + 1) / static_cast<double>(k);
  double lo = 0, hi = 0;
  for (long k = 0; k <= a; ++k) lo += pmf[static_cast<std::size_t>(k)];
  for (long k = a; k <= n; ++k) hi += pmf[static_cast<std::size_t>(k)];
  return std::min(1.0, 2.0 * std::min(lo, hi));
}

}  // namespace

TEST(Majority, Votes) {
  EXPECT_EQ(majority_vote({Q::RootCauseFix, Q::RootCauseFix, Q::SymptomFix}), Q::RootCauseFix);
  EXPECT_EQ(majority_vote({Q::SymptomFix, Q::Abstain, Q::SymptomFix}), Q::SymptomFix);
  EXPECT_FALSE(majority_vote({Q::RootCauseFix, Q::SymptomFix, Q::Abstain}).has_value());
  EXPECT_EQ(majority_vote({Q::Abstain, Q::Abstain, Q::RootCauseFix, Q::Abstain, Q::SymptomFix}), Q::Abstain);
  EXPECT_THROW(majority_vote({Q::RootCauseFix, Q::SymptomFix}), ProtocolError);
  EXPECT_THROW(majority_vote({Q::RootCauseFix, Q::SymptomFix, Q::RootCauseFix, Q::SymptomFix}), ProtocolError);
}

TEST(Kappa, KnownTables) {
  EXPECT_NEAR(fleiss_kappa({{2, 1}, {1, 2}}, 3), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(fleiss_kappa({{3, 0}, {0, 3}}, 3), 1.0, 1e-12);
  // 10 items, 14 raters, 5 categories; value cross-checked with statsmodels.
  const std::vector<std::vector<int>> classic{{0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0},
                                              {2, 2, 8, 1, 1},  {7, 7, 0, 0, 0}, {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2},
                                              {6, 5, 2, 1, 0},  {0, 2, 2, 3, 7}};
  EXPECT_NEAR(fleiss_kappa(classic, 14), 0.20993070442195522, 1e-12);
  EXPECT_THROW(fleiss_kappa({{3, 0}, {3, 0}}, 3), DegenerateError);
  EXPECT_THROW(fleiss_kappa({{2, 0}}, 3), ProtocolError);
  EXPECT_THROW(fleiss_kappa({}, 3), ProtocolError);
  EXPECT_THROW(fleiss_kappa({{1, 0}}, 1), ProtocolError);
}

TEST(Kappa, BoundedAndInvariantUnderRelabelling) {
  proptest::Gen g(61);
  for (int round = 0; round < 200; ++round) {
    const int n = g.range(2, 7), k = g.range(2, 5), items = g.range(1, 20);
    std::vector<std::vector<int>> t;
    for (int i = 0; i < items; ++i) {
      std::vector<int> row(static_cast<std::size_t>(k), 0);
      for (int r = 0; r < n; ++r) ++row[static_cast<std::size_t>(g.range(0, k - 1))];
      t.push_back(row);
    }
    double kappa = 0;
    try {
      kappa = fleiss_kappa(t, n);
    } catch (const DegenerateError&) {
      continue;
    }
    EXPECT_LE(kappa, 1.0 + 1e-12);
    EXPECT_GE(kappa, -1.0 / (n - 1) - 1e-12);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    g.shuffle(perm);
    auto relabelled = t;
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < perm.size(); ++j) relabelled[i][static_cast<std::size_t>(perm[j])] = t[i][j];
    g.shuffle(relabelled);
    EXPECT_NEAR(fleiss_kappa(relabelled, n), kappa, 1e-12);
  }
}

TEST(Agreement, MatchesPairEnumeration) {
  proptest::Gen g(62);
  for (int round = 0; round < 100; ++round) {
    const int raters = g.range(2, 5), items = g.range(1, 12);
    std::vector<std::vector<int>> t;
    for (int i = 0; i < items; ++i) {
      std::vector<int> row;
      for (int r = 0; r < raters; ++r) row.push_back(g.range(0, 2));
      t.push_back(row);
    }
    long agree = 0, total = 0;
    for (const auto& row : t)
      for (int a = 0; a < raters; ++a)
        for (int b = a + 1; b < raters; ++b) {
          agree += row[static_cast<std::size_t>(a)] == row[static_cast<std::size_t>(b)];
          ++total;
        }
    EXPECT_NEAR(raw_agreement(t), static_cast<double>(agree) / static_cast<double>(total), 1e-12);
  }
  EXPECT_DOUBLE_EQ(raw_agreement<int>({{1, 1, 1}, {2, 2, 2}}), 1.0);
  EXPECT_THROW(raw_agreement<int>({{1}}), ProtocolError);
}

TEST(Prevalence, ExcludesAbstentions) {
  EXPECT_NEAR(*prevalence<Q>({Q::RootCauseFix, Q::SymptomFix, Q::Abstain, Q::RootCauseFix}, Q::RootCauseFix, Q::Abstain),
              2.0 / 3.0, 1e-12);
  EXPECT_FALSE(prevalence<Q>({Q::Abstain}, Q::RootCauseFix, Q::Abstain).has_value());
}

TEST(SignTest, FrozenValues) {
  const auto r = pairwise_sign_test(68, 39);
  EXPECT_NEAR(r.p_value, 0.006517764631278962, 1e-12);
  EXPECT_NEAR(r.win_rate, 68.0 / 107.0, 1e-12);
  EXPECT_NEAR(r.ci_low, 0.54432, 1e-5);
  EXPECT_NEAR(r.ci_high, 0.72671, 1e-5);
  EXPECT_NEAR(pairwise_sign_test(10, 0).p_value, 0.001953125, 1e-15);
  EXPECT_DOUBLE_EQ(pairwise_sign_test(5, 5).p_value, 1.0);
  EXPECT_NEAR(pairwise_sign_test(3, 17).p_value, 0.0025768280029296875, 1e-14);
  EXPECT_NEAR(pairwise_sign_test(12, 1).p_value, 0.00341796875, 1e-14);
  EXPECT_THROW(pairwise_sign_test(0, 0), DomainError);
  EXPECT_THROW(pairwise_sign_test(-1, 3), DomainError);
}

TEST(SignTest, MatchesSummationAndIsSymmetric) {
  for (long a = 0; a <= 40; ++a)
    for (long b = 0; b <= 40; ++b) {
      if (a + b == 0) continue;
      const auto r = pairwise_sign_test(a, b);
      EXPECT_NEAR(r.p_value, summed_p(a, b), 1e-10) << a << "," << b;
      EXPECT_NEAR(r.p_value, pairwise_sign_test(b, a).p_value, 1e-12);
      EXPECT_GT(r.p_value, 0.0);
      EXPECT_LE(r.p_value, 1.0);
      EXPECT_LE(r.ci_low, r.win_rate);
      EXPECT_GE(r.ci_high, r.win_rate);
    }
}

TEST(Rubric, CorrectnessDecidesThenHumans) {
  const PatchJudgement root{Q::RootCauseFix, true}, symptom{Q::SymptomFix, false}, abstain{Q::Abstain, false};
  EXPECT_EQ(rubric_compare(root, symptom).winner, Winner::ToolA);
  EXPECT_EQ(rubric_compare(symptom, root, Winner::ToolA).winner, Winner::ToolB);
  const auto tie = rubric_compare(root, root);
  EXPECT_EQ(tie.winner, Winner::Tie);
  EXPECT_TRUE(tie.missing_tiebreak);
  const auto decided = rubric_compare(root, {Q::RootCauseFix, false}, Winner::ToolB);
  EXPECT_EQ(decided.winner, Winner::ToolB);
  EXPECT_FALSE(decided.missing_tiebreak);
  EXPECT_TRUE(rubric_compare(abstain, symptom).missing_tiebreak);
}

TEST(Alias, SeededAndSealed) {
  AliasAssignment a({"ours", "baseline"}, 7), b({"ours", "baseline"}, 7);
  EXPECT_EQ(a.alias_of("ours"), b.alias_of("ours"));
  EXPECT_NE(a.alias_of("ours"), a.alias_of("baseline"));
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 32; ++s) seen.insert(AliasAssignment({"x", "y"}, s).alias_of("x"));
  EXPECT_EQ(seen.size(), 2u);

  a.expect_ratings(2);
  a.submit_rating();
  EXPECT_THROW(a.unseal(), ProtocolError);
  EXPECT_TRUE(a.sealed());
  a.submit_rating();
  const auto reveal = a.unseal();
  EXPECT_EQ(reveal.at(a.alias_of("ours")), "ours");
  EXPECT_FALSE(a.sealed());
  EXPECT_EQ(a.log().size(), 3u);
  EXPECT_THROW(AliasAssignment({"same", "same"}, 1), ProtocolError);
  EXPECT_THROW(a.alias_of("other"), ProtocolError);
}

TEST(RatingsStore, ParseErrorsCarryLineNumbers) {
  auto fails_on = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      parse_ratings_store(in);
      ADD_FAILURE() << "expected ProtocolError for " << text;
    } catch (const ProtocolError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  const std::string good = R"({"type":"verdict","bug":"b","rater":"r","winner":"tie"})";
  fails_on(good + "\n\n{bad json\n", "line 3");
  fails_on(R"({"type":"rating","rater":"r","bug":"b","tool_alias":"tool_a","quality":"great"})", "line 1");
  fails_on(R"({"type":"rating","rater":"r","bug":"b","tool_alias":"tool_a","quality":"symptom_fix","strategy":"bound_check"})",
           "not valid");
  fails_on(R"({"type":"opinion"})", "unknown record type");
  fails_on(R"({"type":"verdict","bug":"b","rater":"r","winner":"both"})", "unknown winner");
}

TEST(Stats, FixtureSummary) {
  const auto rep = compute_stats(load_store("pairwise_68_39_37.ndjson"));
  EXPECT_EQ(rep.wins_a, 68);
  EXPECT_EQ(rep.wins_b, 39);
  EXPECT_EQ(rep.ties, 37);
  ASSERT_TRUE(rep.sign_test.has_value());
  EXPECT_NEAR(rep.sign_test->p_value, 0.006517764631278962, 1e-12);
  const auto text = format_stats(rep);
  EXPECT_NE(text.find("tool_a wins 68, tool_b wins 39, ties 37; sign test p=0.0065, win-rate=63.6%, 95% CI (54.4%, 72.7%)"),
            std::string::npos)
      << text;
  const auto j = stats_to_json(rep);
  EXPECT_EQ(j["wins_a"], 68);
  EXPECT_EQ(j["kind"], "stats");
  for (const auto& row : rep.rows) {
    EXPECT_GE(row.raw_agreement, 0.0);
    EXPECT_LE(row.raw_agreement, 1.0);
  }
}

TEST(Stats, UnanimousRatersGiveKappaOne) {
  const auto rep = compute_stats(load_store("unanimous.ndjson"));
  EXPECT_EQ(rep.wins_a, 6);
  EXPECT_EQ(rep.wins_b, 2);
  EXPECT_EQ(rep.ties, 1);
  bool saw_winner = false;
  for (const auto& row : rep.rows) {
    EXPECT_DOUBLE_EQ(row.raw_agreement, 1.0) << row.label;
    if (row.kappa) EXPECT_NEAR(*row.kappa, 1.0, 1e-12) << row.label;
    if (row.label == "Winner (pairwise)") {
      saw_winner = true;
      ASSERT_TRUE(row.kappa.has_value());
    }
  }
  EXPECT_TRUE(saw_winner);
}

TEST(Stats, EmptyStoreIsRejected) {
  std::istringstream in("\n\n");
  EXPECT_THROW(compute_stats(parse_ratings_store(in)), ProtocolError);
}

TEST(Stats, SplitVerdictCountsAsTie) {
  RatingsStore s;
  s.verdicts = {{"b1", "r1", Winner::ToolA}, {"b1", "r2", Winner::ToolB}, {"b1", "r3", Winner::Tie},
                {"b2", "r1", Winner::ToolA}, {"b2", "r2", Winner::ToolA}, {"b2", "r3", Winner::Tie}};
  const auto rep = compute_stats(s);
  EXPECT_EQ(rep.wins_a, 1);
  EXPECT_EQ(rep.ties, 1);
  EXPECT_EQ(rep.wins_b, 0);
}
