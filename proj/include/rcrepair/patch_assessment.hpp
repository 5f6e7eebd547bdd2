#pragma once

// Expert-rating capture and agreement statistics for patch comparisons.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"

namespace rcrepair {

enum class Quality { RootCauseFix, SymptomFix, Abstain };

inline std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::RootCauseFix: return "root_cause_fix";
    case Quality::SymptomFix: return "symptom_fix";
    case Quality::Abstain: return "abstain";
  }
  return "abstain";
}

inline std::optional<Quality> quality_from_string(std::string_view s) {
  if (s == "root_cause_fix") return Quality::RootCauseFix;
  if (s == "symptom_fix") return Quality::SymptomFix;
  if (s == "abstain") return Quality::Abstain;
  return std::nullopt;
}

inline constexpr std::array<std::string_view, 8> kRootCauseStrategies{
    "bound_check",  "api_contract",         "size_arithmetic", "control_flow_fix",
    "ownership_repair", "invariant_validation", "state_sync",   "type_representation"};

inline constexpr std::array<std::string_view, 9> kSymptomStrategies{
    "crash_site_guard", "downstream_guard",   "value_masking",    "corrupt_state_tolerance", "trigger_block",
    "incomplete_coverage", "lifetime_masking", "wrong_location", "ineffective_guard"};

inline bool strategy_matches(Quality q, std::string_view strategy) {
  auto in = [&](const auto& set) { return std::find(set.begin(), set.end(), strategy) != set.end(); };
  switch (q) {
    case Quality::RootCauseFix: return in(kRootCauseStrategies);
    case Quality::SymptomFix: return in(kSymptomStrategies);
    case Quality::Abstain: return false;
  }
  return false;
}

struct RatingRecord {
  std::string rater;
  std::string bug;
  std::string tool_alias;
  Quality quality = Quality::Abstain;
  bool has_unrelated_changes = false;
  std::optional<std::string> strategy;
  std::string justification;

  void validate() const {
    if (rater.empty() || bug.empty() || tool_alias.empty())
      throw ProtocolError("rating needs rater, bug and tool_alias");
    if (strategy && !strategy_matches(quality, *strategy))
      throw ProtocolError("strategy '" + *strategy + "' is not valid for quality '" +
                          std::string(to_string(quality)) + "'");
  }
};

enum class Winner { ToolA, ToolB, Tie };

inline std::string_view to_string(Winner w) {
  switch (w) {
    case Winner::ToolA: return "tool_a";
    case Winner::ToolB: return "tool_b";
    case Winner::Tie: return "tie";
  }
  return "tie";
}

inline std::optional<Winner> winner_from_string(std::string_view s) {
  if (s == "tool_a") return Winner::ToolA;
  if (s == "tool_b") return Winner::ToolB;
  if (s == "tie") return Winner::Tie;
  return std::nullopt;
}

struct PairVerdict {
  std::string bug;
  std::string rater;
  Winner winner = Winner::Tie;
};

// Voting and agreement ---------------------------------------------------------

/// The label held by more than half of an odd number (>= 3) of ratings;
/// nullopt when no label reaches a majority.
template <typename Label>
std::optional<Label> majority_of(const std::vector<Label>& labels) {
  if (labels.size() < 3) throw ProtocolError("majority vote needs at least 3 ratings");
  if (labels.size() % 2 == 0) throw ProtocolError("majority vote needs an odd rater count");
  for (const auto& l : labels)
    if (static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l)) * 2 > labels.size()) return l;
  return std::nullopt;
}

inline std::optional<Quality> majority_vote(const std::vector<Quality>& labels) { return majority_of(labels); }

/// Fleiss's kappa over an items x categories count table with n raters per item.
inline double fleiss_kappa(const std::vector<std::vector<int>>& table, int n) {
  if (n < 2) throw ProtocolError("kappa needs at least 2 raters per item");
  if (table.empty()) throw ProtocolError("kappa needs at least one item");
  const std::size_t k = table.front().size();
  if (k < 2) throw ProtocolError("kappa needs at least 2 categories");
  std::vector<double> col(k, 0.0);
  double p_bar = 0.0;
  for (const auto& row : table) {
    if (row.size() != k) throw ProtocolError("ragged kappa table");
    long sum = 0, sq = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] < 0) throw ProtocolError("negative count in kappa table");
      sum += row[j];
      sq += static_cast<long>(row[j]) * row[j];
      col[j] += row[j];
    }
    if (sum != n) throw ProtocolError("every kappa row must sum to the rater count");
    p_bar += static_cast<double>(sq - n) / (static_cast<double>(n) * (n - 1));
  }
  const double items = static_cast<double>(table.size());
  p_bar /= items;
  double p_e = 0.0;
  for (double c : col) {
    const double p = c / (items * n);
    p_e += p * p;
  }
  if (std::abs(1.0 - p_e) < 1e-15) throw DegenerateError("chance agreement is 1; kappa undefined");
  return (p_bar - p_e) / (1.0 - p_e);
}

/// Mean over rater pairs of the fraction of items on which the pair agrees.
/// `table[i][r]` is rater r's label for item i.
template <typename Label>
double raw_agreement(const std::vector<std::vector<Label>>& table) {
  if (table.empty()) throw ProtocolError("agreement needs at least one item");
  const std::size_t raters = table.front().size();
  if (raters < 2) throw ProtocolError("agreement needs at least 2 raters");
  for (const auto& row : table)
    if (row.size() != raters) throw ProtocolError("ragged agreement table");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < raters; ++a) {
    for (std::size_t b = a + 1; b < raters; ++b) {
      std::size_t agree = 0;
      for (const auto& row : table) agree += row[a] == row[b] ? 1 : 0;
      total += static_cast<double>(agree) / static_cast<double>(table.size());
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

/// Converts a label table into Fleiss counts over `categories`.
template <typename Label>
std::vector<std::vector<int>> count_table(const std::vector<std::vector<Label>>& table,
                                          const std::vector<Label>& categories) {
  std::vector<std::vector<int>> out;
  for (const auto& row : table) {
    std::vector<int> counts(categories.size(), 0);
    for (const auto& l : row) {
      auto it = std::find(categories.begin(), categories.end(), l);
      if (it == categories.end()) throw ProtocolError("label outside the category set");
      ++counts[static_cast<std::size_t>(it - categories.begin())];
    }
    out.push_back(std::move(counts));
  }
  return out;
}

/// Positive share among labels that are neither missing nor `excluded`.
template <typename Label>
std::optional<double> prevalence(const std::vector<Label>& labels, const Label& positive,
                                 const std::optional<Label>& excluded = std::nullopt) {
  std::size_t pos = 0, total = 0;
  for (const auto& l : labels) {
    if (excluded && l == *excluded) continue;
    ++total;
    if (l == positive) ++pos;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(pos) / static_cast<double>(total);
}

// Sign test --------------------------------------------------------------------

struct SignTestResult {
  long n = 0;
  double p_value = 1.0;
  double win_rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline constexpr double kWaldZ = 1.96;

namespace stats_detail {

inline double log_binom_pmf_half(long n, long k) {
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1) - static_cast<double>(n) * std::log(2.0);
}

/// P(X <= k) for X ~ Binomial(n, 1/2).
inline double lower_tail(long n, long k) {
  double s = 0.0;
  for (long i = 0; i <= k; ++i) s += std::exp(log_binom_pmf_half(n, i));
  return std::min(1.0, s);
}

}  // namespace stats_detail

/// Exact two-sided binomial sign test with a Wald 95% interval on the win rate.
inline SignTestResult pairwise_sign_test(long wins_a, long wins_b) {
  if (wins_a < 0 || wins_b < 0) throw DomainError("patch_assessment", "win counts must be non-negative");
  const long n = wins_a + wins_b;
  if (n == 0) throw DomainError("patch_assessment", "sign test needs at least one decisive pair");
  SignTestResult r;
  r.n = n;
  const double lo = stats_detail::lower_tail(n, wins_a);
  const double hi = stats_detail::lower_tail(n, wins_b);  // P(X >= a) by symmetry
  r.p_value = std::min(1.0, 2.0 * std::min(lo, hi));
  r.win_rate = static_cast<double>(wins_a) / static_cast<double>(n);
  const double half = kWaldZ * std::sqrt(r.win_rate * (1.0 - r.win_rate) / static_cast<double>(n));
  r.ci_low = std::clamp(r.win_rate - half, 0.0, 1.0);
  r.ci_high = std::clamp(r.win_rate + half, 0.0, 1.0);
  return r;
}

// Rubric -----------------------------------------------------------------------

struct PatchJudgement {
  Quality quality = Quality::Abstain;
  bool has_unrelated_changes = false;
};

struct RubricDecision {
  Winner winner = Winner::Tie;
  /// Set when the labels tie and no human verdict was recorded.
  bool missing_tiebreak = false;
};

/// Correctness decides alone: a root-cause fix beats a symptom fix. Everything
/// else is a human judgement passed in as `human_tiebreak`.
inline RubricDecision rubric_compare(const PatchJudgement& a, const PatchJudgement& b,
                                     std::optional<Winner> human_tiebreak = std::nullopt) {
  if (a.quality == Quality::RootCauseFix && b.quality == Quality::SymptomFix) return {Winner::ToolA, false};
  if (b.quality == Quality::RootCauseFix && a.quality == Quality::SymptomFix) return {Winner::ToolB, false};
  if (human_tiebreak) {
    return {*human_tiebreak, false};
  }
  return {Winner::Tie, true};
}

// Anonymisation ----------------------------------------------------------------

/// Seeded tool -> {tool_a, tool_b} bijection whose reverse map stays sealed
/// until every expected rating has been submitted.
class AliasAssignment {
 public:
  AliasAssignment(const std::array<std::string, 2>& tools, std::uint64_t seed) : tools_(tools) {
    if (tools[0] == tools[1]) throw ProtocolError("the two tools must differ");
    std::mt19937_64 rng(seed);
    swapped_ = (rng() & 1u) != 0;
    log_.push_back("assigned aliases with seed " + std::to_string(seed));
  }

  std::string alias_of(const std::string& tool) const {
    if (tool == tools_[0]) return swapped_ ? "tool_b" : "tool_a";
    if (tool == tools_[1]) return swapped_ ? "tool_a" : "tool_b";
    throw ProtocolError("unknown tool '" + tool + "'");
  }

  void expect_ratings(std::size_t n) { expected_ = n; }
  void submit_rating() { ++submitted_; }
  bool sealed() const noexcept { return sealed_; }
  const std::vector<std::string>& log() const noexcept { return log_; }

  /// Reveals alias -> tool once all expected ratings are in.
  std::map<std::string, std::string> unseal() {
    const auto progress = std::to_string(submitted_) + "/" + std::to_string(expected_);
    if (expected_ == 0 || submitted_ < expected_) {
      log_.push_back("unseal refused at " + progress + " ratings");
      throw ProtocolError("cannot unseal aliases before all ratings are submitted (" + progress + ")");
    }
    sealed_ = false;
    log_.push_back("unsealed at " + progress + " ratings");
    return {{alias_of(tools_[0]), tools_[0]}, {alias_of(tools_[1]), tools_[1]}};
  }

 private:
  std::array<std::string, 2> tools_;
  bool swapped_ = false;
  bool sealed_ = true;
  std::size_t expected_ = 0;
  std::size_t submitted_ = 0;
  std::vector<std::string> log_;
};

// Ratings store ----------------------------------------------------------------

struct RatingsStore {
  std::vector<RatingRecord> ratings;
  std::vector<PairVerdict> verdicts;
};

inline nlohmann::json rating_to_json(const RatingRecord& r) {
  nlohmann::json j{{"type", "rating"},       {"rater", r.rater},
                   {"bug", r.bug},           {"tool_alias", r.tool_alias},
                   {"quality", to_string(r.quality)}, {"has_unrelated_changes", r.has_unrelated_changes},
                   {"justification", r.justification}};
  j["strategy"] = r.strategy ? nlohmann::json(*r.strategy) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json verdict_to_json(const PairVerdict& v) {
  return {{"type", "verdict"}, {"bug", v.bug}, {"rater", v.rater}, {"winner", to_string(v.winner)}};
}

/// Newline-delimited records with "type" = "rating" | "verdict"; blank lines skipped.
inline RatingsStore parse_ratings_store(std::istream& in) {
  RatingsStore store;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return " (line " + std::to_string(lineno) + ")"; };
    try {
      const auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "rating") {
        RatingRecord r;
        r.rater = j.at("rater").get<std::string>();
        r.bug = j.at("bug").get<std::string>();
        r.tool_alias = j.at("tool_alias").get<std::string>();
        auto q = quality_from_string(j.at("quality").get<std::string>());
        if (!q) throw ProtocolError("unknown quality label" + where());
        r.quality = *q;
        r.has_unrelated_changes = j.value("has_unrelated_changes", false);
        if (j.contains("strategy") && !j["strategy"].is_null()) r.strategy = j["strategy"].get<std::string>();
        r.justification = j.value("justification", "");
        r.validate();
        store.ratings.push_back(std::move(r));
      } else if (type == "verdict") {
        auto w = winner_from_string(j.at("winner").get<std::string>());
        if (!w) throw ProtocolError("unknown winner" + where());
        store.verdicts.push_back({j.at("bug").get<std::string>(), j.at("rater").get<std::string>(), *w});
      } else {
        throw ProtocolError("unknown record type '" + type + "'" + where());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed ratings record: ") + e.what() + where());
    } catch (const ProtocolError& e) {
      const std::string msg = e.what();
      if (msg.find("(line ") != std::string::npos) throw;
      throw ProtocolError(msg.substr(msg.find(": ") + 2) + where());
    }
  }
  return store;
}

// Stats report -----------------------------------------------------------------

struct AgreementRow {
  std::string label;
  std::string tool;
  std::optional<double> prevalence_positive;
  double raw_agreement = 0.0;
  std::optional<double> kappa;  // nullopt when degenerate
  std::size_t items = 0;
};

struct StatsReport {
  std::vector<AgreementRow> rows;
  long wins_a = 0, wins_b = 0, ties = 0;
  std::optional<SignTestResult> sign_test;
};

namespace stats_detail {

/// Groups labels by item; keeps items rated by exactly the modal rater count.
template <typename Label>
std::vector<std::vector<Label>> complete_items(const std::map<std::string, std::vector<Label>>& by_item) {
  std::map<std::size_t, std::size_t> freq;
  for (const auto& [item, labels] : by_item) ++freq[labels.size()];
  std::size_t n = 0, best = 0;
  for (const auto& [size, count] : freq)
    if (count > best) { best = count; n = size; }
  std::vector<std::vector<Label>> out;
  for (const auto& [item, labels] : by_item)
    if (labels.size() == n) out.push_back(labels);
  return out;
}

template <typename Label>
AgreementRow agreement_row(std::string label, std::string tool, const std::vector<std::vector<Label>>& table,
                           const std::vector<Label>& categories, std::optional<Label> positive,
                           std::optional<Label> excluded) {
  AgreementRow row{std::move(label), std::move(tool), std::nullopt, 0.0, std::nullopt, table.size()};
  if (table.empty() || table.front().size() < 2) return row;
  row.raw_agreement = raw_agreement(table);
  try {
    row.kappa = fleiss_kappa(count_table(table, categories), static_cast<int>(table.front().size()));
  } catch (const DegenerateError&) {
    row.kappa = std::nullopt;
  }
  if (positive) {
    std::vector<Label> flat;
    for (const auto& r : table) flat.insert(flat.end(), r.begin(), r.end());
    row.prevalence_positive = prevalence(flat, *positive, excluded);
  }
  return row;
}

}  // namespace stats_detail

inline StatsReport compute_stats(const RatingsStore& store) {
  if (store.ratings.empty() && store.verdicts.empty()) throw ProtocolError("ratings store is empty");
  StatsReport rep;
  std::set<std::string> aliases;
  for (const auto& r : store.ratings) aliases.insert(r.tool_alias);

  for (const auto& alias : aliases) {
    std::map<std::string, std::vector<Quality>> quality;
    std::map<std::string, std::vector<std::string>> unrelated;
    // Rater order inside an item is fixed by rater id so pairwise agreement lines up.
    std::map<std::string, std::map<std::string, const RatingRecord*>> by_bug;
    for (const auto& r : store.ratings)
      if (r.tool_alias == alias) by_bug[r.bug][r.rater] = &r;
    for (const auto& [bug, raters] : by_bug) {
      for (const auto& [rater, rec] : raters) {
        quality[bug].push_back(rec->quality);
        unrelated[bug].push_back(rec->quality == Quality::Abstain ? "abstain"
                                 : rec->has_unrelated_changes     ? "true"
                                                                  : "false");
      }
    }
    rep.rows.push_back(stats_detail::agreement_row<Quality>(
        "Patch quality (root cause)", alias, stats_detail::complete_items(quality),
        {Quality::RootCauseFix, Quality::SymptomFix, Quality::Abstain}, Quality::RootCauseFix, Quality::Abstain));
    rep.rows.push_back(stats_detail::agreement_row<std::string>(
        "Unrelated change (True)", alias, stats_detail::complete_items(unrelated), {"true", "false", "abstain"},
        std::string("true"), std::string("abstain")));
  }

  if (!store.verdicts.empty()) {
    std::map<std::string, std::map<std::string, Winner>> by_bug;
    for (const auto& v : store.verdicts) by_bug[v.bug][v.rater] = v.winner;
    std::map<std::string, std::vector<Winner>> table;
    for (const auto& [bug, raters] : by_bug)
      for (const auto& [rater, w] : raters) table[bug].push_back(w);
    rep.rows.push_back(stats_detail::agreement_row<Winner>("Winner (pairwise)", "---",
                                                           stats_detail::complete_items(table),
                                                           {Winner::ToolA, Winner::ToolB, Winner::Tie},
                                                           std::nullopt, std::nullopt));
    for (const auto& [bug, labels] : table) {
      std::optional<Winner> w;
      if (labels.size() >= 3 && labels.size() % 2 == 1) w = majority_of(labels);
      else if (labels.size() == 1) w = labels.front();
      switch (w.value_or(Winner::Tie)) {
        case Winner::ToolA: ++rep.wins_a; break;
        case Winner::ToolB: ++rep.wins_b; break;
        case Winner::Tie: ++rep.ties; break;
      }
    }
    if (rep.wins_a + rep.wins_b > 0) rep.sign_test = pairwise_sign_test(rep.wins_a, rep.wins_b);
  }
  return rep;
}

inline std::string format_stats(const StatsReport& rep) {
  std::ostringstream out;
  out << std::fixed;
  auto num = [](std::optional<double> v, int prec = 2) {
    if (!v) return std::string("---");
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << *v;
    return s.str();
  };
  out << std::left << std::setw(30) << "label" << std::setw(10) << "tool" << std::setw(10) << "Prev.(+)"
      << std::setw(8) << "Agree" << "kappa\n";
  for (const auto& r : rep.rows)
    out << std::setw(30) << r.label << std::setw(10) << r.tool << std::setw(10) << num(r.prevalence_positive)
        << std::setw(8) << num(r.raw_agreement) << num(r.kappa) << "\n";
  if (rep.wins_a + rep.wins_b + rep.ties > 0) {
    out << "Pairwise: tool_a wins " << rep.wins_a << ", tool_b wins " << rep.wins_b << ", ties " << rep.ties;
    if (rep.sign_test) {
      const auto& s = *rep.sign_test;
      out << "; sign test p=" << std::setprecision(4) << s.p_value << ", win-rate=" << std::setprecision(1)
          << 100.0 * s.win_rate << "%, 95% CI (" << 100.0 * s.ci_low << "%, " << 100.0 * s.ci_high << "%)";
    }
    out << "\n";
  }
  return out.str();
}

inline nlohmann::json stats_to_json(const StatsReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  for (const auto& r : rep.rows)
    rows.push_back({{"label", r.label},
                    {"tool", r.tool},
                    {"prevalence_positive", opt(r.prevalence_positive)},
                    {"raw_agreement", r.raw_agreement},
                    {"kappa", opt(r.kappa)},
                    {"items", r.items}});
  nlohmann::json j{{"schema_version", 1}, {"kind", "stats"}, {"rows", rows},
                   {"wins_a", rep.wins_a}, {"wins_b", rep.wins_b}, {"ties", rep.ties}};
  if (rep.sign_test)
    j["sign_test"] = {{"n", rep.sign_test->n},
                      {"p_value", rep.sign_test->p_value},
                      {"win_rate", rep.sign_test->win_rate},
                      {"ci_low", rep.sign_test->ci_low},
                      {"ci_high", rep.sign_test->ci_high}};
  return j;
}

}  // namespace rcrepair
