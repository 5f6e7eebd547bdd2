#pragma once

#include <optional>
#include <string_view>

#include "rcrepair/repair/verifier.hpp"

namespace rcrepair::repair {

enum class PatchOutcome { NoPatch, PartialPatch, PlausiblePatch };

inline std::string_view to_string(PatchOutcome o) {
  switch (o) {
    case PatchOutcome::NoPatch: return "NoPatch";
    case PatchOutcome::PartialPatch: return "PartialPatch";
    case PatchOutcome::PlausiblePatch: return "PlausiblePatch";
  }
  return "NoPatch";
}

inline std::optional<PatchOutcome> patch_outcome_from_string(std::string_view s) {
  if (s == "NoPatch") return PatchOutcome::NoPatch;
  if (s == "PartialPatch") return PatchOutcome::PartialPatch;
  if (s == "PlausiblePatch") return PatchOutcome::PlausiblePatch;
  return std::nullopt;
}

/// Compile, replay and tests must all pass for any patch credit; the fuzz
/// oracle then separates plausible from partial. A skipped fuzz stage never
/// earns the top tier.
inline PatchOutcome tier1_classify(const VerifierResult& verify, StageStatus fuzz) {
  if (!verify.all_pass()) return PatchOutcome::NoPatch;
  return fuzz == StageStatus::Pass ? PatchOutcome::PlausiblePatch : PatchOutcome::PartialPatch;
}

}  // namespace rcrepair::repair
