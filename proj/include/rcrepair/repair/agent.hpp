#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"
#include "rcrepair/repair/llm.hpp"
#include "rcrepair/repair/prompt.hpp"
#include "rcrepair/repair/run_config.hpp"
#include "rcrepair/repair/tools.hpp"
#include "rcrepair/repair/verifier.hpp"
#include "rcrepair/repair/working_copy.hpp"

namespace rcrepair::repair {

enum class Termination { Validated, ValidatedWithoutChanges, TurnCap, AdapterFailure };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Validated: return "validated";
    case Termination::ValidatedWithoutChanges: return "validated_without_changes";
    case Termination::TurnCap: return "turn_cap";
    case Termination::AdapterFailure: return "adapter_error";
  }
  return "turn_cap";
}

struct AgentResult {
  std::optional<std::string> patch;  // unified diff against the baseline
  nlohmann::json transcript;
  std::optional<VerifierResult> last_verification;
  int turns = 0;
  Termination termination = Termination::TurnCap;
};

inline constexpr std::string_view kFreeTextRejection =
    "Free-text replies are not executed. Respond with exactly one structured tool call.";

namespace agent_detail {

inline std::string clip(std::string s, std::size_t limit) {
  if (s.size() <= limit) return s;
  s.resize(limit);
  s += "\n[output truncated]";
  return s;
}

}  // namespace agent_detail

/// Drives the model through at most turn_cap tool calls. The run ends at the
/// first validate_patch that passes every stage; the patch is the copy's diff
/// against its baseline at that moment.
inline AgentResult run_agent(const RunConfig& config, LanguageModel& llm, WorkingCopy& copy,
                             OracleBackend& oracle, const SanitizerReport& report,
                             const std::vector<RcaEntry>& rca, const std::filesystem::path& poc_path) {
  config.validate();
  std::vector<RcaEntry> context(rca.begin(),
                                rca.begin() + static_cast<long>(std::min(rca.size(), config.top_k_context)));
  const std::string prompt = assemble_prompt(report, context, config.full_source_entries);
  ToolSurface surface(copy, oracle, context, config, poc_path);

  AgentResult out;
  nlohmann::json turns = nlohmann::json::array();
  long prompt_tokens = 0, completion_tokens = 0;
  std::optional<std::string> error;

  ModelRequest req;
  req.tools = tool_schemas();
  req.messages.push_back({"user", prompt, std::nullopt, ""});

  for (int turn = 1; turn <= config.turn_cap; ++turn) {
    ModelResponse resp;
    try {
      resp = llm.complete(req);
    } catch (const std::exception& e) {
      out.termination = Termination::AdapterFailure;
      error = e.what();
      break;
    }
    out.turns = turn;
    prompt_tokens += resp.prompt_tokens;
    completion_tokens += resp.completion_tokens;

    nlohmann::json rec{{"turn", turn}, {"text", resp.text}};
    if (!resp.tool_call) {
      rec["tool"] = nullptr;
      rec["rejected"] = kFreeTextRejection;
      turns.push_back(std::move(rec));
      req.messages.push_back({"assistant", resp.text, std::nullopt, ""});
      req.messages.push_back({"user", std::string(kFreeTextRejection), std::nullopt, ""});
      continue;
    }

    const auto& call = *resp.tool_call;
    auto result = surface.dispatch(call.name, call.arguments, turn);
    rec["tool"] = call.name;
    rec["args"] = call.arguments;
    rec["result"] = result;
    turns.push_back(std::move(rec));
    req.messages.push_back({"assistant", resp.text, call, ""});
    req.messages.push_back({"tool", agent_detail::clip(result.dump(2), config.max_tool_output), std::nullopt,
                            call.id});

    if (call.name == "validate_patch" && result.value("status", "") == "ALL CHECKS PASSED") {
      auto diff = copy.diff();
      if (diff.empty()) {
        out.termination = Termination::ValidatedWithoutChanges;
      } else {
        out.termination = Termination::Validated;
        out.patch = std::move(diff);
      }
      break;
    }
  }

  out.last_verification = surface.last_verification();
  out.transcript = {{"schema_version", 1},
                    {"kind", "transcript"},
                    {"turn_cap", config.turn_cap},
                    {"baseline_id", copy.baseline_id()},
                    {"prompt", prompt},
                    {"turns", std::move(turns)},
                    {"turns_used", out.turns},
                    {"termination", to_string(out.termination)},
                    {"prompt_tokens", prompt_tokens},
                    {"completion_tokens", completion_tokens}};
  if (error) out.transcript["error"] = *error;
  return out;
}

}  // namespace rcrepair::repair
