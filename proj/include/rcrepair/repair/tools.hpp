#pragma once

// The eight agent tools over one working copy. Typed methods throw library
// errors; dispatch() turns every failure into a structured result so a bad
// call costs the agent a turn rather than the run.

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"
#include "rcrepair/repair/function_index.hpp"
#include "rcrepair/repair/prompt.hpp"
#include "rcrepair/repair/run_config.hpp"
#include "rcrepair/repair/verifier.hpp"
#include "rcrepair/repair/working_copy.hpp"

namespace rcrepair::repair {

using nlohmann::json;

inline json tool_schemas() {
  auto fn = [](const char* name, const char* desc, json props, std::vector<std::string> required) {
    return json{{"name", name},
                {"description", desc},
                {"parameters", {{"type", "object"}, {"properties", std::move(props)}, {"required", required}}}};
  };
  const json str{{"type", "string"}};
  const json integer{{"type", "integer"}};
  return json::array({
      fn("view_function", "Show a function's source, its callees and the globals it references.",
         {{"name", str}}, {"name"}),
      fn("read_source_file", "Read a file, optionally limited to an inclusive 1-based line range.",
         {{"path", str}, {"start_line", integer}, {"end_line", integer}}, {"path"}),
      fn("search_functions", "Find functions whose name contains the pattern; also searches source text.",
         {{"pattern", str}}, {"pattern"}),
      fn("list_functions_in_file", "List the functions defined in a file.", {{"path", str}}, {"path"}),
      fn("get_rca_results", "Show one ranked root-cause candidate with its source.", {{"index", integer}},
         {"index"}),
      fn("edit_file", "Replace the single exact occurrence of old_text with new_text.",
         {{"path", str}, {"old_text", str}, {"new_text", str}}, {"path", "old_text", "new_text"}),
      fn("revert_edits", "Restore every file to the baseline.", json::object(), {}),
      fn("validate_patch", "Compile, replay the crashing input and run the tests.", json::object(), {}),
  });
}

class ToolSurface {
 public:
  ToolSurface(WorkingCopy& copy, OracleBackend& oracle, std::vector<RcaEntry> rca, const RunConfig& config,
              std::filesystem::path poc_path)
      : copy_(copy), oracle_(oracle), rca_(std::move(rca)), config_(config), poc_(std::move(poc_path)) {}

  const FunctionIndex& index() {
    if (dirty_) {
      index_ = FunctionIndex::build(copy_.root());
      dirty_ = false;
    }
    return index_;
  }

  json view_function(const std::string& name) {
    auto hits = index().find(name);
    if (hits.empty()) return {{"status", "not_found"}, {"name", name}};
    json defs = json::array();
    for (const auto* f : hits)
      defs.push_back({{"file", f->file},
                      {"start_line", f->start_line},
                      {"end_line", f->end_line},
                      {"source", f->source},
                      {"callees", f->callees},
                      {"globals", f->globals}});
    return {{"status", "ok"}, {"name", name}, {"definitions", defs}};
  }

  json read_source_file(const std::string& path, std::optional<int> start, std::optional<int> end) {
    const auto rel = copy_.relative(path);
    if (!std::filesystem::is_regular_file(copy_.root() / rel)) return {{"status", "not_found"}, {"path", rel}};
    const auto text = copy_.read(rel);
    const auto lines = diff_detail::split_lines(text);
    const int total = static_cast<int>(lines.size());
    const int lo = std::max(1, start.value_or(1));
    const int hi = std::min(total, end.value_or(total));
    std::string out;
    for (int i = lo; i <= hi; ++i) out += lines[static_cast<std::size_t>(i - 1)];
    return {{"status", "ok"}, {"path", rel}, {"start_line", lo}, {"end_line", hi},
            {"total_lines", total}, {"text", out}};
  }

  /// Name matches from the index; when none, a plain text search over sources.
  json search_functions(const std::string& pattern) {
    if (pattern.empty()) return {{"status", "error"}, {"message", "empty pattern"}};
    json matches = json::array();
    for (const auto* f : index().search(pattern))
      matches.push_back({{"name", f->name}, {"file", f->file}, {"line", f->start_line}});
    if (!matches.empty()) return {{"status", "ok"}, {"mode", "name"}, {"matches", matches}};
    for (const auto& rel : copy_.tracked_files()) {
      if (!index_detail::is_source_file(rel)) continue;
      const auto abs = copy_.root() / rel;
      if (!std::filesystem::exists(abs)) continue;
      std::istringstream in(read_text(abs));
      std::string line;
      for (int n = 1; std::getline(in, line); ++n) {
        if (line.find(pattern) == std::string::npos) continue;
        matches.push_back({{"file", rel}, {"line", n}, {"text", line}});
        if (matches.size() >= kMaxTextMatches) break;
      }
      if (matches.size() >= kMaxTextMatches) break;
    }
    return {{"status", matches.empty() ? "not_found" : "ok"}, {"mode", "text"}, {"matches", matches}};
  }

  json list_functions_in_file(const std::string& path) {
    const auto rel = copy_.relative(path);
    return {{"status", "ok"}, {"path", rel}, {"functions", index().functions_in_file(rel)}};
  }

  json get_rca_results(long rank) {
    for (const auto& e : rca_) {
      if (static_cast<long>(e.rank) != rank) continue;
      json j{{"status", "ok"},
             {"rank", e.rank},
             {"function", e.function},
             {"file", e.file ? json(*e.file) : json(nullptr)},
             {"score", e.score},
             {"sources", render_tags(e.tags)}};
      j["source"] = e.source ? json(*e.source) : json(nullptr);
      return j;
    }
    return {{"status", "not_found"}, {"message", "no candidate with rank " + std::to_string(rank)},
            {"available", rca_.size()}};
  }

  json edit_file(const std::string& path, const std::string& old_text, const std::string& new_text) {
    auto r = copy_.edit(path, old_text, new_text);
    if (r.status == EditStatus::Applied) dirty_ = true;
    return {{"status", to_string(r.status)}, {"occurrences", r.occurrences}, {"path", copy_.relative(path)}};
  }

  json revert_edits() {
    copy_.revert();
    dirty_ = true;
    return {{"status", "reverted"}};
  }

  /// Runs the verifier unless the previous run was fewer than
  /// validate_min_gap turns ago.
  json validate_patch(int turn) {
    if (last_validate_turn_ && turn - *last_validate_turn_ < config_.validate_min_gap)
      return {{"status", "rate_limited"},
              {"message", "validate_patch may run at most once every " +
                              std::to_string(config_.validate_min_gap) + " turns; batch your edits"}};
    last_validate_turn_ = turn;
    last_ = run_verifier(copy_, oracle_, poc_, config_.timeouts);
    json j = verifier_to_json(*last_);
    j["status"] = last_->all_pass() ? "ALL CHECKS PASSED" : "CHECKS FAILED";
    return j;
  }

  const std::optional<VerifierResult>& last_verification() const noexcept { return last_; }

  /// Executes a named tool call. `error` is set in the result for rejected calls.
  json dispatch(const std::string& name, const json& args, int turn) {
    try {
      if (!args.is_object()) return error_result("ArgumentError", "arguments must be an object");
      if (name == "view_function") return view_function(args.at("name").get<std::string>());
      if (name == "read_source_file")
        return read_source_file(args.at("path").get<std::string>(), opt_int(args, "start_line"),
                                opt_int(args, "end_line"));
      if (name == "search_functions") return search_functions(args.at("pattern").get<std::string>());
      if (name == "list_functions_in_file") return list_functions_in_file(args.at("path").get<std::string>());
      if (name == "get_rca_results") return get_rca_results(args.at("index").get<long>());
      if (name == "edit_file")
        return edit_file(args.at("path").get<std::string>(), args.at("old_text").get<std::string>(),
                         args.at("new_text").get<std::string>());
      if (name == "revert_edits") return revert_edits();
      if (name == "validate_patch") return validate_patch(turn);
      return error_result("UnknownTool", "no tool named '" + name + "'");
    } catch (const ProtectedFileError& e) {
      return error_result("ProtectedFileError", e.what());
    } catch (const PathEscapeError& e) {
      return error_result("PathEscapeError", e.what());
    } catch (const OracleTimeout& e) {
      return error_result("OracleTimeout", e.what());
    } catch (const json::exception& e) {
      return error_result("ArgumentError", std::string("bad arguments: ") + e.what());
    } catch (const Error& e) {
      return error_result("ToolError", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
      return error_result("ToolError", e.what());
    }
  }

 private:
  static constexpr std::size_t kMaxTextMatches = 50;

  static json error_result(const std::string& kind, const std::string& message) {
    return {{"status", "error"}, {"error", kind}, {"message", message}};
  }

  static std::optional<int> opt_int(const json& args, const char* key) {
    if (!args.contains(key) || args[key].is_null()) return std::nullopt;
    return args[key].get<int>();
  }

  WorkingCopy& copy_;
  OracleBackend& oracle_;
  std::vector<RcaEntry> rca_;
  const RunConfig& config_;
  std::filesystem::path poc_;
  FunctionIndex index_;
  bool dirty_ = true;
  std::optional<int> last_validate_turn_;
  std::optional<VerifierResult> last_;
};

}  // namespace rcrepair::repair
