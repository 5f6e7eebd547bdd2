#pragma once

// Crash-variant families, per-variant function-entry traces and occurrence
// statistics.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"
#include "rcrepair/process.hpp"
#include "rcrepair/report_model.hpp"

namespace rcrepair {

inline constexpr std::chrono::seconds kDefaultExplorationBudget{12 * 3600};

struct CrashVariant {
  std::string id;
  std::filesystem::path input_ref;
  bool crashes = false;
  std::optional<std::filesystem::path> trace_ref;
  std::optional<std::filesystem::path> report_ref;
};

struct TraceFrame {
  std::string function;
  std::optional<std::string> file;

  friend bool operator==(const TraceFrame&, const TraceFrame&) = default;
};

struct ExecutionTrace {
  std::string variant_id;
  std::vector<TraceFrame> frames;
  /// Sanitizer label of the variant's replay, when the exporter recorded it.
  std::optional<std::string> bug_label;
};

/// Record shape: {variant_id, frames: [{function, file?}], bug_label?}.
/// Consecutive identical frames collapse to one.
inline ExecutionTrace parse_trace(const nlohmann::json& doc, long record_index = -1) {
  if (!doc.is_object() || !doc.contains("variant_id") || !doc["variant_id"].is_string() ||
      !doc.contains("frames") || !doc["frames"].is_array())
    throw SchemaError("dynamic_traces", "trace needs 'variant_id' and 'frames'", record_index);
  ExecutionTrace t;
  t.variant_id = doc["variant_id"].get<std::string>();
  if (doc.contains("bug_label") && doc["bug_label"].is_string())
    t.bug_label = doc["bug_label"].get<std::string>();
  for (const auto& f : doc["frames"]) {
    if (!f.is_object() || !f.contains("function") || !f["function"].is_string() ||
        f["function"].get<std::string>().empty())
      throw SchemaError("dynamic_traces", "frame needs a non-empty 'function'", record_index);
    TraceFrame frame{f["function"].get<std::string>(), std::nullopt};
    if (f.contains("file") && f["file"].is_string()) frame.file = f["file"].get<std::string>();
    if (!t.frames.empty() && t.frames.back() == frame) continue;
    t.frames.push_back(std::move(frame));
  }
  return t;
}

inline nlohmann::json trace_to_json(const ExecutionTrace& t) {
  nlohmann::json doc{{"variant_id", t.variant_id}, {"frames", nlohmann::json::array()}};
  for (const auto& f : t.frames) {
    nlohmann::json jf{{"function", f.function}};
    if (f.file) jf["file"] = *f.file;
    doc["frames"].push_back(std::move(jf));
  }
  if (t.bug_label) doc["bug_label"] = *t.bug_label;
  return doc;
}

/// Newline-delimited trace records; blank lines are ignored.
inline std::vector<ExecutionTrace> parse_trace_stream(std::istream& in) {
  std::vector<ExecutionTrace> out;
  std::string line;
  long index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("dynamic_traces", std::string("malformed JSON: ") + e.what(), index);
    }
    out.push_back(parse_trace(doc, index));
    ++index;
  }
  return out;
}

struct Occurrence {
  int appears_in = 0;
  double fraction = 0.0;
};

/// Key is (function, file or ""), so same-named statics in different files stay apart.
using TraceKey = std::pair<std::string, std::string>;

struct OccurrenceStats {
  int total_traces = 0;
  std::map<TraceKey, Occurrence> functions;

  std::optional<Occurrence> find(const std::string& function, const std::string& file = {}) const {
    auto it = functions.find({function, file});
    if (it == functions.end()) return std::nullopt;
    return it->second;
  }
};

inline OccurrenceStats family_stats(const std::vector<ExecutionTrace>& traces) {
  if (traces.empty()) throw EmptyFamily();
  std::set<std::string> ids;
  OccurrenceStats stats;
  stats.total_traces = static_cast<int>(traces.size());
  for (const auto& t : traces) {
    if (!ids.insert(t.variant_id).second)
      throw DomainError("dynamic_traces", "duplicate variant_id '" + t.variant_id + "'");
    std::set<TraceKey> present;
    for (const auto& f : t.frames) present.emplace(f.function, f.file.value_or(""));
    for (const auto& k : present) ++stats.functions[k].appears_in;
  }
  for (auto& [k, occ] : stats.functions)
    occ.fraction = static_cast<double>(occ.appears_in) / stats.total_traces;
  return stats;
}

/// Drops traces whose recorded replay label falls in a different crash class
/// than the seed's; traces without a label are kept.
inline std::vector<ExecutionTrace> same_class_traces(std::vector<ExecutionTrace> traces,
                                                     CrashClass seed_class) {
  std::erase_if(traces, [&](const ExecutionTrace& t) {
    return t.bug_label && classify_crash(*t.bug_label) != seed_class;
  });
  return traces;
}

// Fuzzer backends ------------------------------------------------------------

class FuzzerBackend {
 public:
  virtual ~FuzzerBackend() = default;
  /// Returns the variants found within `budget`; replay confirmation is the
  /// backend's job (crashes=false entries are filtered by the caller).
  virtual std::vector<CrashVariant> explore(const std::filesystem::path& seed,
                                            std::chrono::seconds budget) = 0;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool replay_report_crashes(const std::filesystem::path& report) {
  if (!std::filesystem::exists(report)) return false;
  try {
    parse_report(read_file(report));
    return true;
  } catch (const ParseError&) {
    return false;
  }
}

}  // namespace detail

/// Reads a directory of variant sub-directories, each holding `input`,
/// `trace.json` and `report.txt`. A variant crashes when its recorded replay
/// report parses as a sanitizer crash.
inline std::vector<CrashVariant> read_variant_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw AdapterError("dynamic_traces", "variant directory '" + dir.string() + "' not found");
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());

  std::vector<CrashVariant> out;
  for (const auto& d : entries) {
    CrashVariant v;
    v.id = d.filename().string();
    v.input_ref = d / "input";
    if (fs::exists(d / "trace.json")) v.trace_ref = d / "trace.json";
    if (fs::exists(d / "report.txt")) v.report_ref = d / "report.txt";
    v.crashes = fs::exists(v.input_ref) && v.report_ref && detail::replay_report_crashes(*v.report_ref);
    out.push_back(std::move(v));
  }
  return out;
}

/// Test backend: replays a recorded variant directory regardless of budget.
class RecordedVariantsBackend : public FuzzerBackend {
 public:
  explicit RecordedVariantsBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::vector<CrashVariant> explore(const std::filesystem::path&, std::chrono::seconds) override {
    return read_variant_directory(dir_);
  }

 private:
  std::filesystem::path dir_;
};

/// Real backend: runs a command template with {seed}, {out_dir} and
/// {budget_seconds} slots. The command (typically a wrapper around AFL++ crash
/// exploration plus traced replay) must leave a variant directory in out_dir.
class CommandFuzzerBackend : public FuzzerBackend {
 public:
  CommandFuzzerBackend(std::string command_template, std::filesystem::path out_dir)
      : template_(std::move(command_template)), out_dir_(std::move(out_dir)) {}

  std::vector<CrashVariant> explore(const std::filesystem::path& seed,
                                    std::chrono::seconds budget) override {
    std::filesystem::create_directories(out_dir_);
    const std::map<std::string, std::string> slots{
        {"seed", shell_quote(seed.string())},
        {"out_dir", shell_quote(out_dir_.string())},
        {"budget_seconds", std::to_string(budget.count())}};
    auto cmd = substitute_slots(template_, slots);
    // The fuzzer owns the budget; allow a grace period for replay and export.
    auto res = run_command(cmd, {}, std::chrono::duration_cast<std::chrono::milliseconds>(budget) +
                                        std::chrono::minutes(10));
    if (res.timed_out || res.exit_code != 0)
      throw AdapterError("dynamic_traces", "fuzzer command failed (exit " +
                                               std::to_string(res.exit_code) + "): " + res.output);
    return read_variant_directory(out_dir_);
  }

 private:
  std::string template_;
  std::filesystem::path out_dir_;
};

/// Crash exploration around `seed`. A zero budget yields the seed-only family.
inline std::vector<CrashVariant> run_crash_exploration(FuzzerBackend& backend,
                                                       const std::filesystem::path& seed,
                                                       std::chrono::seconds budget) {
  if (budget.count() <= 0) return {CrashVariant{"seed", seed, true, std::nullopt, std::nullopt}};
  std::vector<CrashVariant> found;
  try {
    found = backend.explore(seed, budget);
  } catch (const AdapterError&) {
    throw;
  } catch (const std::exception& e) {
    throw AdapterError("dynamic_traces", std::string("fuzzer backend failed: ") + e.what());
  }
  std::erase_if(found, [](const CrashVariant& v) { return !v.crashes; });
  return found;
}

/// Loads traces of crashing variants whose replay report shares the seed's
/// crash class. Variants without a recorded trace are skipped.
inline std::vector<ExecutionTrace> load_family_traces(const std::vector<CrashVariant>& variants,
                                                      CrashClass seed_class) {
  std::vector<ExecutionTrace> out;
  for (const auto& v : variants) {
    if (!v.crashes || !v.trace_ref) continue;
    if (v.report_ref) {
      auto rep = parse_report(detail::read_file(*v.report_ref));
      if (rep.crash_class != seed_class) continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(detail::read_file(*v.trace_ref));
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("dynamic_traces", "malformed trace for variant " + v.id + ": " + e.what());
    }
    auto t = parse_trace(doc);
    t.variant_id = v.id;
    if (!t.frames.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace rcrepair
