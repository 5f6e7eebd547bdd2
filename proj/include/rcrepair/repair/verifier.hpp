#pragma once

// Staged patch oracles: compile, PoC replay, test suite (short-circuiting),
// plus the variant-replay fuzz oracle used for tier-1 classification.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/dynamic_traces.hpp"
#include "rcrepair/error.hpp"
#include "rcrepair/process.hpp"
#include "rcrepair/repair/working_copy.hpp"

namespace rcrepair::repair {

enum class StageStatus { Fail, Skipped, Pass };

inline std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Pass: return "pass";
    case StageStatus::Fail: return "fail";
    case StageStatus::Skipped: return "skipped";
  }
  return "skipped";
}

struct StageResult {
  StageStatus status = StageStatus::Skipped;
  int exit_code = 0;
  std::string output;
};

struct VerifierResult {
  StageResult compile;
  StageResult poc_replay;
  StageResult tests;

  bool all_pass() const {
    return compile.status == StageStatus::Pass && poc_replay.status == StageStatus::Pass &&
           tests.status == StageStatus::Pass;
  }
};

inline std::optional<StageStatus> stage_status_from_string(std::string_view s) {
  if (s == "pass") return StageStatus::Pass;
  if (s == "fail") return StageStatus::Fail;
  if (s == "skipped") return StageStatus::Skipped;
  return std::nullopt;
}

inline nlohmann::json stage_to_json(const StageResult& s) {
  return {{"status", to_string(s.status)}, {"exit_code", s.exit_code}, {"output", s.output}};
}

inline StageResult stage_from_json(const nlohmann::json& j) {
  auto st = stage_status_from_string(j.at("status").get<std::string>());
  if (!st) throw SchemaError("repair_loop", "unknown stage status " + j.at("status").dump());
  return {*st, j.value("exit_code", 0), j.value("output", "")};
}

inline nlohmann::json verifier_to_json(const VerifierResult& r) {
  return {{"compile", stage_to_json(r.compile)},
          {"poc_replay", stage_to_json(r.poc_replay)},
          {"tests", stage_to_json(r.tests)},
          {"all_pass", r.all_pass()}};
}

inline VerifierResult verifier_from_json(const nlohmann::json& j) {
  return {stage_from_json(j.at("compile")), stage_from_json(j.at("poc_replay")), stage_from_json(j.at("tests"))};
}

enum class OracleStage { Compile, PocReplay, Tests };

inline std::string_view to_string(OracleStage s) {
  switch (s) {
    case OracleStage::Compile: return "compile";
    case OracleStage::PocReplay: return "poc_replay";
    case OracleStage::Tests: return "tests";
  }
  return "compile";
}

struct OracleContext {
  std::filesystem::path root;
  std::filesystem::path poc_path;
};

class OracleBackend {
 public:
  virtual ~OracleBackend() = default;
  virtual ProcessResult run(OracleStage stage, const OracleContext& ctx,
                            std::chrono::milliseconds timeout) = 0;
};

/// Runs shell command templates with {root} and {poc_path} slots.
class ShellOracleBackend : public OracleBackend {
 public:
  explicit ShellOracleBackend(std::map<OracleStage, std::string> templates)
      : templates_(std::move(templates)) {}

  ProcessResult run(OracleStage stage, const OracleContext& ctx,
                    std::chrono::milliseconds timeout) override {
    auto it = templates_.find(stage);
    if (it == templates_.end())
      throw ConfigError("no command configured for oracle stage '" + std::string(to_string(stage)) + "'");
    const std::map<std::string, std::string> slots{{"root", shell_quote(ctx.root.string())},
                                                   {"poc_path", shell_quote(ctx.poc_path.string())}};
    return run_command(substitute_slots(it->second, slots), ctx.root, timeout);
  }

 private:
  std::map<OracleStage, std::string> templates_;
};

/// Fixture oracle: each stage answers from an ordered rule list evaluated
/// against the working-copy files, falling back to a default response.
///
///   {"stages": {"compile": {"default": {"exit_code": 0, "output": "..."},
///                           "rules": [{"when": [{"file": "src/a.c", "contains": "x"}],
///                                      "exit_code": 1, "output": "..."}]}}}
///
/// Conditions: {"file", "contains"} / {"file", "lacks"} / {"poc_suffix"}.
class StubOracleBackend : public OracleBackend {
 public:
  explicit StubOracleBackend(nlohmann::json spec) : spec_(std::move(spec)) {
    if (!spec_.is_object() || !spec_.contains("stages") || !spec_["stages"].is_object())
      throw SchemaError("repair_loop", "stub oracle spec needs a 'stages' object");
  }

  ProcessResult run(OracleStage stage, const OracleContext& ctx, std::chrono::milliseconds) override {
    const std::string key(to_string(stage));
    ProcessResult r;
    const auto& stages = spec_["stages"];
    if (!stages.contains(key)) return r;  // unspecified stage: clean exit
    const auto& st = stages[key];
    if (st.contains("rules")) {
      for (const auto& rule : st["rules"]) {
        if (matches(rule.value("when", nlohmann::json::array()), ctx)) return response(rule);
      }
    }
    if (st.contains("default")) return response(st["default"]);
    return r;
  }

 private:
  static ProcessResult response(const nlohmann::json& j) {
    ProcessResult r;
    r.exit_code = j.value("exit_code", 0);
    r.output = j.value("output", "");
    r.timed_out = j.value("timed_out", false);
    return r;
  }

  static bool matches(const nlohmann::json& conds, const OracleContext& ctx) {
    for (const auto& c : conds) {
      if (c.contains("poc_suffix")) {
        const auto suffix = c["poc_suffix"].get<std::string>();
        const auto poc = ctx.poc_path.generic_string();
        if (poc.size() < suffix.size() || poc.compare(poc.size() - suffix.size(), suffix.size(), suffix) != 0)
          return false;
        continue;
      }
      const auto p = ctx.root / c.at("file").get<std::string>();
      const std::string content = std::filesystem::exists(p) ? read_text(p) : std::string{};
      if (c.contains("contains") && content.find(c["contains"].get<std::string>()) == std::string::npos)
        return false;
      if (c.contains("lacks") && content.find(c["lacks"].get<std::string>()) != std::string::npos)
        return false;
    }
    return true;
  }

  nlohmann::json spec_;
};

struct OracleTimeouts {
  std::chrono::milliseconds compile{std::chrono::minutes(30)};
  std::chrono::milliseconds poc_replay{std::chrono::minutes(2)};
  std::chrono::milliseconds tests{std::chrono::minutes(30)};

  std::chrono::milliseconds for_stage(OracleStage s) const {
    switch (s) {
      case OracleStage::Compile: return compile;
      case OracleStage::PocReplay: return poc_replay;
      case OracleStage::Tests: return tests;
    }
    return compile;
  }
};

/// True when `output` carries a sanitizer error report.
inline bool has_sanitizer_marker(std::string_view output) {
  static constexpr std::string_view markers[] = {
      "ERROR: AddressSanitizer",      "ERROR: LeakSanitizer", "ERROR: MemorySanitizer",
      "ERROR: UndefinedBehaviorSanitizer", "WARNING: ThreadSanitizer", "runtime error:",
      "CRASH: Sanitizer detected"};
  for (auto m : markers)
    if (output.find(m) != std::string_view::npos) return true;
  return false;
}

namespace verifier_detail {

inline StageResult run_stage(OracleBackend& backend, OracleStage stage, const OracleContext& ctx,
                             const OracleTimeouts& limits) {
  auto res = backend.run(stage, ctx, limits.for_stage(stage));
  if (res.timed_out)
    throw OracleTimeout(std::string(to_string(stage)), static_cast<long>(limits.for_stage(stage).count()));
  StageResult out{StageStatus::Fail, res.exit_code, res.output};
  if (stage == OracleStage::PocReplay) {
    // Replay passes when no sanitizer fires, whatever the exit status;
    // death by signal still counts as a crash.
    out.status = (!has_sanitizer_marker(res.output) && !res.signaled) ? StageStatus::Pass : StageStatus::Fail;
  } else {
    out.status = res.exit_code == 0 && !res.signaled ? StageStatus::Pass : StageStatus::Fail;
  }
  return out;
}

}  // namespace verifier_detail

/// Compile, replay the PoC, run the tests; a failing stage skips the rest.
inline VerifierResult run_verifier(const WorkingCopy& copy, OracleBackend& backend,
                                   const std::filesystem::path& poc_path,
                                   const OracleTimeouts& limits = {}) {
  const OracleContext ctx{copy.root(), poc_path};
  VerifierResult r;
  r.compile = verifier_detail::run_stage(backend, OracleStage::Compile, ctx, limits);
  if (r.compile.status != StageStatus::Pass) return r;
  r.poc_replay = verifier_detail::run_stage(backend, OracleStage::PocReplay, ctx, limits);
  if (r.poc_replay.status != StageStatus::Pass) return r;
  r.tests = verifier_detail::run_stage(backend, OracleStage::Tests, ctx, limits);
  return r;
}

struct FuzzOracleResult {
  StageStatus status = StageStatus::Skipped;
  std::vector<std::string> surviving_variants;
};

/// Replays every crash variant found around the PoC against the patched copy;
/// passes when none still triggers a sanitizer report.
inline FuzzOracleResult run_fuzz_oracle(const WorkingCopy& copy, OracleBackend& backend,
                                        FuzzerBackend& fuzzer, const std::filesystem::path& poc_path,
                                        std::chrono::seconds budget, const OracleTimeouts& limits = {}) {
  FuzzOracleResult out;
  auto variants = run_crash_exploration(fuzzer, poc_path, budget);
  for (const auto& v : variants) {
    const OracleContext ctx{copy.root(), v.input_ref};
    auto res = backend.run(OracleStage::PocReplay, ctx, limits.poc_replay);
    if (res.timed_out || res.signaled || has_sanitizer_marker(res.output))
      out.surviving_variants.push_back(v.id);
  }
  out.status = out.surviving_variants.empty() ? StageStatus::Pass : StageStatus::Fail;
  return out;
}

}  // namespace rcrepair::repair
