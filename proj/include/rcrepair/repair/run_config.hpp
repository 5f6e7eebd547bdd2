#pragma once

#include <chrono>
#include <map>
#include <string>

#include "rcrepair/dynamic_traces.hpp"
#include "rcrepair/error.hpp"
#include "rcrepair/repair/verifier.hpp"
#include "rcrepair/repair/working_copy.hpp"

namespace rcrepair::repair {

inline constexpr int kDefaultTurnCap = 150;
inline constexpr std::size_t kDefaultTopKContext = 20;
inline constexpr std::size_t kDefaultFullSourceEntries = 5;
inline constexpr int kDefaultValidateGap = 2;

struct RunConfig {
  int turn_cap = kDefaultTurnCap;
  std::size_t top_k_context = kDefaultTopKContext;
  std::size_t full_source_entries = kDefaultFullSourceEntries;
  /// Minimum number of turns between two validate_patch executions.
  int validate_min_gap = kDefaultValidateGap;
  ProtectedPaths protected_paths = ProtectedPaths::defaults();
  std::map<OracleStage, std::string> oracle_commands;
  OracleTimeouts timeouts;
  std::chrono::seconds fuzz_budget = kDefaultExplorationBudget;
  /// Tool results longer than this are truncated before reaching the model.
  std::size_t max_tool_output = 20000;

  void validate() const {
    if (turn_cap < 1) throw DomainError("repair_loop", "turn_cap must be >= 1");
    if (top_k_context < 1) throw DomainError("repair_loop", "top_k_context must be >= 1");
    if (validate_min_gap < 1) throw DomainError("repair_loop", "validate_min_gap must be >= 1");
  }
};

}  // namespace rcrepair::repair
