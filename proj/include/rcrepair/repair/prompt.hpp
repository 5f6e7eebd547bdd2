#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcrepair/error.hpp"
#include "rcrepair/evidence_ranking.hpp"
#include "rcrepair/repair/function_index.hpp"
#include "rcrepair/repair/prompt_template.hpp"
#include "rcrepair/report_model.hpp"

namespace rcrepair::repair {

/// One ranked function as shown to the agent.
struct RcaEntry {
  std::size_t rank = 0;  // 1-based
  std::string function;
  std::optional<std::string> file;
  double score = 0.0;
  TagSet tags;
  std::optional<std::string> source;  // definition text when the index found it
};

/// Source labels the agent prompt uses for each evidence tag.
inline std::string_view prompt_label(EvidenceTag t) {
  switch (t) {
    case EvidenceTag::CrashStack: return "STACK_TRACE";
    case EvidenceTag::CallTrace: return "CALL_TRACE";
    case EvidenceTag::AllocStack: return "ALLOC_STACK";
    case EvidenceTag::FreeStack: return "FREE_STACK";
    case EvidenceTag::ObjectOrigin: return "OBJECT_ORIGIN";
    case EvidenceTag::VarDep: return "VAR_DEP";
  }
  return "";
}

/// Builds the prompt-facing list from a ranked list, attaching definitions
/// from `index` (preferring the ranked file when a name is defined twice).
inline std::vector<RcaEntry> make_rca_entries(const std::vector<ScoredCandidate>& ranked,
                                              const FunctionIndex& index, std::size_t limit) {
  std::vector<RcaEntry> out;
  for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) {
    const auto& c = ranked[i].candidate;
    RcaEntry e{i + 1, c.function, c.file, ranked[i].score, c.tags, std::nullopt};
    const FunctionInfo* pick = nullptr;
    for (const auto* f : index.find(c.function)) {
      if (!pick) pick = f;
      if (c.file && (f->file == *c.file || c.file->ends_with("/" + f->file) || f->file.ends_with("/" + *c.file))) {
        pick = f;
        break;
      }
    }
    if (pick) {
      e.source = pick->source;
      if (!e.file) e.file = pick->file;
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string format_score(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", s);
  return buf;
}

inline std::string render_tags(const TagSet& tags) {
  std::string out;
  for (auto t : tags.list()) {
    if (!out.empty()) out += ", ";
    out += prompt_label(t);
  }
  return out;
}

/// Full source for the first `full_entries` entries, one compact line for the rest.
inline std::string render_rca_summary(const std::vector<RcaEntry>& entries, std::size_t full_entries = 5) {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string head = "#" + std::to_string(e.rank) + " " + e.function + " (" +
                             e.file.value_or("<unknown file>") + ") score=" + format_score(e.score) +
                             " sources=[" + render_tags(e.tags) + "]";
    if (i < full_entries) {
      out += "### " + head + "\n";
      if (e.source) {
        out += "```c\n" + *e.source;
        if (!e.source->empty() && e.source->back() != '\n') out += "\n";
        out += "```\n";
      } else {
        out += "(source not found in the index)\n";
      }
      out += "\n";
    } else {
      if (i == full_entries) out += "Additional candidates (use get_rca_results(index) for source):\n";
      out += "- " + head + "\n";
    }
  }
  return out;
}

/// Fills the two template slots in one left-to-right pass, so slot-like text
/// inside the report is never substituted again.
inline std::string fill_template(std::string_view tmpl, std::string_view crash_report,
                                 std::string_view rca_summary) {
  static constexpr std::string_view kReport = "{crash_report}";
  static constexpr std::string_view kRca = "{rca_summary}";
  const auto p_report = tmpl.find(kReport);
  const auto p_rca = tmpl.find(kRca);
  if (p_report == std::string_view::npos) throw TemplateError("template lacks the {crash_report} slot");
  if (p_rca == std::string_view::npos) throw TemplateError("template lacks the {rca_summary} slot");
  struct Slot {
    std::size_t pos;
    std::size_t len;
    std::string_view value;
  };
  Slot first{p_report, kReport.size(), crash_report};
  Slot second{p_rca, kRca.size(), rca_summary};
  if (second.pos < first.pos) std::swap(first, second);
  std::string out;
  out.reserve(tmpl.size() + crash_report.size() + rca_summary.size());
  out += tmpl.substr(0, first.pos);
  out += first.value;
  out += tmpl.substr(first.pos + first.len, second.pos - first.pos - first.len);
  out += second.value;
  out += tmpl.substr(second.pos + second.len);
  return out;
}

inline std::string assemble_prompt(const SanitizerReport& report, const std::vector<RcaEntry>& rca,
                                   std::size_t full_entries = 5,
                                   std::string_view tmpl = kPromptTemplate) {
  if (rca.empty()) throw TemplateError("root-cause list is empty");
  std::string raw = report.raw_text;
  while (!raw.empty() && (raw.back() == '\n' || raw.back() == '\r')) raw.pop_back();
  std::string rca_text = render_rca_summary(rca, full_entries);
  while (!rca_text.empty() && rca_text.back() == '\n') rca_text.pop_back();
  return fill_template(tmpl, raw, rca_text);
}

}  // namespace rcrepair::repair
