#pragma once

// Configuration loading and stage wiring used by the command-line tool.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/callgraph.hpp"
#include "rcrepair/dynamic_traces.hpp"
#include "rcrepair/error.hpp"
#include "rcrepair/evidence_ranking.hpp"
#include "rcrepair/foi_pool.hpp"
#include "rcrepair/interchange.hpp"
#include "rcrepair/repair/agent.hpp"
#include "rcrepair/repair/function_index.hpp"
#include "rcrepair/repair/llm.hpp"
#include "rcrepair/repair/outcome.hpp"
#include "rcrepair/repair/run_config.hpp"
#include "rcrepair/repair/verifier.hpp"
#include "rcrepair/report_model.hpp"

namespace rcrepair::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

struct PipelinePaths {
  std::optional<fs::path> report;
  std::optional<fs::path> traces;     // NDJSON trace file or a variant directory
  std::optional<fs::path> variants;   // recorded variants for the stub fuzzer
  std::optional<fs::path> callgraph;
  std::optional<fs::path> dataflow;
  std::optional<fs::path> project;
  std::optional<fs::path> poc;
  std::optional<fs::path> mock_decisions;
  std::optional<fs::path> stub_oracles;
};

struct AdapterSelection {
  std::string fuzzer = "none";  // none | stub | real
  std::string llm = "mock";     // mock | real
  std::string oracles = "stub"; // stub | real
  std::string fuzzer_command;   // real fuzzer: {seed} {out_dir} {budget_seconds}
  std::string llm_model;
  std::string llm_base_url = "https://api.openai.com";
  std::string llm_path = "/v1/chat/completions";
  std::string api_key_env = "RCREPAIR_API_KEY";
};

struct PipelineConfig {
  PipelinePaths paths;
  RankingConfig ranking;
  repair::RunConfig run;
  AdapterSelection adapters;
  FilterPolicy filter = FilterPolicy::defaults();
  int bfs_depth = kDefaultDepthLimit;
  std::size_t bfs_cap = kDefaultCandidateCap;
  std::size_t widen_min_count = kDefaultWidenMinCount;
  std::uint64_t seed = 0;

  /// Checks that each selected adapter has what it needs.
  void validate_for_repair() const {
    run.validate();
    if (!paths.report) throw ConfigError("repair needs a report path");
    if (!paths.project) throw ConfigError("repair needs a project path");
    if (!paths.poc) throw ConfigError("repair needs a poc path");
    if (adapters.llm == "mock" && !paths.mock_decisions)
      throw ConfigError("mock llm adapter needs paths.mock_decisions");
    if (adapters.llm == "real" && adapters.llm_model.empty())
      throw ConfigError("real llm adapter needs adapters.llm_model");
    if (adapters.llm != "mock" && adapters.llm != "real")
      throw ConfigError("llm adapter must be mock or real");
    if (adapters.oracles == "stub" && !paths.stub_oracles)
      throw ConfigError("stub oracles need paths.stub_oracles");
    if (adapters.oracles == "real")
      for (auto st : {repair::OracleStage::Compile, repair::OracleStage::PocReplay, repair::OracleStage::Tests})
        if (!run.oracle_commands.contains(st))
          throw ConfigError("real oracles need a '" + std::string(repair::to_string(st)) + "' command");
    if (adapters.oracles != "stub" && adapters.oracles != "real")
      throw ConfigError("oracle adapter must be stub or real");
    validate_fuzzer();
  }

  void validate_fuzzer() const {
    if (adapters.fuzzer == "stub" && !paths.variants && !(paths.traces && fs::is_directory(*paths.traces)))
      throw ConfigError("stub fuzzer needs paths.variants");
    if (adapters.fuzzer == "real" && adapters.fuzzer_command.empty())
      throw ConfigError("real fuzzer needs adapters.fuzzer_command");
    if (adapters.fuzzer != "none" && adapters.fuzzer != "stub" && adapters.fuzzer != "real")
      throw ConfigError("fuzzer adapter must be none, stub or real");
  }
};

namespace detail {

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json load_json(const fs::path& p, const std::string& module) {
  try {
    return json::parse(slurp(p));
  } catch (const json::parse_error& e) {
    throw SchemaError(module, p.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Reads a pipeline configuration; relative paths resolve against the
/// configuration file's directory.
inline PipelineConfig pipeline_config_from_json(const json& doc, const fs::path& base_dir) {
  PipelineConfig c;
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  if (doc.contains("schema_version") && doc["schema_version"] != 1)
    throw ConfigError("unsupported configuration schema_version");
  try {
    if (doc.contains("paths")) {
      const auto& p = doc["paths"];
      auto get = [&](const char* key, std::optional<fs::path>& slot) {
        if (!p.contains(key) || p[key].is_null()) return;
        fs::path v = p[key].get<std::string>();
        slot = v.is_absolute() ? v : (base_dir / v).lexically_normal();
      };
      get("report", c.paths.report);
      get("traces", c.paths.traces);
      get("variants", c.paths.variants);
      get("callgraph", c.paths.callgraph);
      get("dataflow", c.paths.dataflow);
      get("project", c.paths.project);
      get("poc", c.paths.poc);
      get("mock_decisions", c.paths.mock_decisions);
      get("stub_oracles", c.paths.stub_oracles);
    }
    if (doc.contains("ranking")) c.ranking = ranking_config_from_json(doc["ranking"]);
    if (doc.contains("run")) {
      const auto& r = doc["run"];
      c.run.turn_cap = r.value("turn_cap", c.run.turn_cap);
      c.run.top_k_context = r.value("top_k_context", c.run.top_k_context);
      c.run.full_source_entries = r.value("full_source_entries", c.run.full_source_entries);
      c.run.validate_min_gap = r.value("validate_min_gap", c.run.validate_min_gap);
      if (r.contains("protected_paths"))
        c.run.protected_paths = repair::ProtectedPaths(r["protected_paths"].get<std::vector<std::string>>());
      if (r.contains("oracle_commands")) {
        const auto& oc = r["oracle_commands"];
        if (oc.contains("compile")) c.run.oracle_commands[repair::OracleStage::Compile] = oc["compile"];
        if (oc.contains("poc_replay")) c.run.oracle_commands[repair::OracleStage::PocReplay] = oc["poc_replay"];
        if (oc.contains("tests")) c.run.oracle_commands[repair::OracleStage::Tests] = oc["tests"];
      }
      if (r.contains("timeouts_ms")) {
        const auto& t = r["timeouts_ms"];
        using ms = std::chrono::milliseconds;
        if (t.contains("compile")) c.run.timeouts.compile = ms(t["compile"].get<long>());
        if (t.contains("poc_replay")) c.run.timeouts.poc_replay = ms(t["poc_replay"].get<long>());
        if (t.contains("tests")) c.run.timeouts.tests = ms(t["tests"].get<long>());
      }
      if (r.contains("fuzz_budget_seconds"))
        c.run.fuzz_budget = std::chrono::seconds(r["fuzz_budget_seconds"].get<long>());
    }
    if (doc.contains("adapters")) {
      const auto& a = doc["adapters"];
      c.adapters.fuzzer = a.value("fuzzer", c.adapters.fuzzer);
      c.adapters.llm = a.value("llm", c.adapters.llm);
      c.adapters.oracles = a.value("oracles", c.adapters.oracles);
      c.adapters.fuzzer_command = a.value("fuzzer_command", c.adapters.fuzzer_command);
      c.adapters.llm_model = a.value("llm_model", c.adapters.llm_model);
      c.adapters.llm_base_url = a.value("llm_base_url", c.adapters.llm_base_url);
      c.adapters.llm_path = a.value("llm_path", c.adapters.llm_path);
      c.adapters.api_key_env = a.value("api_key_env", c.adapters.api_key_env);
    }
    if (doc.contains("callgraph")) {
      const auto& g = doc["callgraph"];
      c.bfs_depth = g.value("depth_limit", c.bfs_depth);
      c.bfs_cap = g.value("cap", c.bfs_cap);
      c.widen_min_count = g.value("widen_min_count", c.widen_min_count);
    }
    if (doc.contains("filter")) {
      const auto& f = doc["filter"];
      if (f.contains("symbol_denylist")) c.filter.symbol_denylist = f["symbol_denylist"].get<std::vector<std::string>>();
      if (f.contains("prefix_denylist")) c.filter.prefix_denylist = f["prefix_denylist"].get<std::vector<std::string>>();
      if (f.contains("path_patterns")) c.filter.path_patterns = f["path_patterns"].get<std::vector<std::string>>();
    }
    c.seed = doc.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration: ") + e.what());
  }
  c.run.validate();
  return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
  return pipeline_config_from_json(detail::load_json(path, "cli"), fs::absolute(path).parent_path());
}

// Adapters -----------------------------------------------------------------------

inline std::unique_ptr<FuzzerBackend> make_fuzzer(const PipelineConfig& c, const fs::path& scratch) {
  c.validate_fuzzer();
  if (c.adapters.fuzzer == "stub")
    return std::make_unique<RecordedVariantsBackend>(c.paths.variants ? *c.paths.variants : *c.paths.traces);
  if (c.adapters.fuzzer == "real") return std::make_unique<CommandFuzzerBackend>(c.adapters.fuzzer_command, scratch);
  return nullptr;
}

// Ranking ------------------------------------------------------------------------

struct RankOutput {
  SanitizerReport report;
  std::vector<FoiCandidate> pool;
  std::vector<ScoredCandidate> ranked;
  std::vector<std::string> warnings;
};

/// Loads the trace family from an NDJSON file or a variant directory.
inline std::vector<ExecutionTrace> load_traces(const fs::path& p, CrashClass seed_class) {
  if (fs::is_directory(p)) return load_family_traces(read_variant_directory(p), seed_class);
  std::ifstream in(p);
  if (!in) throw AdapterError("dynamic_traces", "cannot read traces '" + p.string() + "'");
  return same_class_traces(parse_trace_stream(in), seed_class);
}

/// Report ingestion, optional traces / call graph / dataflow, pool fusion,
/// filtering, scoring and diversification.
inline RankOutput run_rank(const PipelineConfig& c, FuzzerBackend* fuzzer = nullptr) {
  if (!c.paths.report) throw ConfigError("rank needs a report path");
  c.ranking.validate();
  RankOutput out;
  out.report = parse_report(detail::slurp(*c.paths.report));
  const auto& report = out.report;

  std::vector<std::vector<FoiCandidate>> sources;
  sources.push_back(candidates_from_report(report));

  std::vector<ExecutionTrace> traces;
  if (c.paths.traces) {
    traces = load_traces(*c.paths.traces, report.crash_class);
  } else if (fuzzer && c.paths.poc) {
    traces = load_family_traces(run_crash_exploration(*fuzzer, *c.paths.poc, c.run.fuzz_budget), report.crash_class);
  }
  if (!traces.empty()) sources.push_back(candidates_from_traces(traces, family_stats(traces)));

  if (c.paths.callgraph) {
    const auto graph = load_graph(detail::load_json(*c.paths.callgraph, "callgraph"));
    BfsResult bfs;
    try {
      bfs = bfs_candidates(graph, anchors_from_report(report, kDefaultAnchorLimit), c.bfs_depth, c.bfs_cap);
    } catch (const EmptyAnchorSet& e) {
      out.warnings.push_back(e.what());
    }
    out.warnings.insert(out.warnings.end(), bfs.warnings.begin(), bfs.warnings.end());
    try {
      auto widened = widen_and_merge(graph, report, bfs.candidates, c.widen_min_count, c.bfs_depth, c.bfs_cap);
      bfs.candidates = std::move(widened.candidates);
    } catch (const EmptyAnchorSet&) {
    }
    sources.push_back(candidates_from_graph(bfs.candidates));
  }

  if (c.paths.dataflow) {
    // Interceptor frames such as __asan_memcpy are skipped: the export names
    // the first project function on the crash stack.
    std::string crash_fn;
    for (const auto& f : report.crash_stack) {
      FoiCandidate probe;
      probe.function = f.function;
      probe.file = f.file;
      if (!c.filter.denies(probe)) {
        crash_fn = f.function;
        break;
      }
    }
    sources.push_back(candidates_from_dataflow(
        ingest_dataflow_candidates(detail::load_json(*c.paths.dataflow, "callgraph"), crash_fn)));
  }

  out.pool = filter_pool(merge_pool(sources), c.filter);
  out.ranked = rank_and_diversify(score_pool(out.pool, report.crash_class, c.ranking), c.ranking);
  return out;
}

// Repair -------------------------------------------------------------------------

struct RepairOutput {
  RankOutput rank;
  repair::AgentResult agent;
  repair::FuzzOracleResult fuzz;
  repair::PatchOutcome outcome = repair::PatchOutcome::NoPatch;
};

/// Model construction is injected so the tool links the HTTP adapter only
/// where it is used.
using ModelFactory = std::function<std::unique_ptr<repair::LanguageModel>(const PipelineConfig&)>;

inline std::unique_ptr<repair::LanguageModel> make_mock_model(const PipelineConfig& c) {
  if (!c.paths.mock_decisions) throw ConfigError("mock llm adapter needs paths.mock_decisions");
  return std::make_unique<repair::ScriptedModel>(repair::ScriptedModel::from_file(*c.paths.mock_decisions));
}

inline std::unique_ptr<repair::OracleBackend> make_oracle(const PipelineConfig& c) {
  if (c.adapters.oracles == "stub")
    return std::make_unique<repair::StubOracleBackend>(detail::load_json(*c.paths.stub_oracles, "repair_loop"));
  return std::make_unique<repair::ShellOracleBackend>(c.run.oracle_commands);
}

/// Ranks, runs the agent on a fresh copy at `work_root`, then applies the
/// fuzz oracle to a validated patch and classifies the result.
inline RepairOutput run_repair(const PipelineConfig& c, const fs::path& work_root,
                               const ModelFactory& real_model = {}) {
  c.validate_for_repair();
  RepairOutput out;
  auto fuzzer = make_fuzzer(c, work_root.parent_path() / (work_root.filename().string() + "-fuzz"));
  out.rank = run_rank(c, fuzzer.get());

  auto copy = repair::WorkingCopy::create(*c.paths.project, work_root, c.run.protected_paths);
  const auto index = repair::FunctionIndex::build(copy.root());
  const auto rca = repair::make_rca_entries(out.rank.ranked, index, c.run.top_k_context);

  std::unique_ptr<repair::LanguageModel> llm;
  if (c.adapters.llm == "mock") {
    llm = make_mock_model(c);
  } else {
    if (!real_model) throw ConfigError("this build has no real llm adapter");
    llm = real_model(c);
  }
  auto oracle = make_oracle(c);

  out.agent = repair::run_agent(c.run, *llm, copy, *oracle, out.rank.report, rca, *c.paths.poc);
  if (out.agent.patch && out.agent.last_verification) {
    if (fuzzer)
      out.fuzz = repair::run_fuzz_oracle(copy, *oracle, *fuzzer, *c.paths.poc, c.run.fuzz_budget, c.run.timeouts);
    out.outcome = repair::tier1_classify(*out.agent.last_verification, out.fuzz.status);
  }
  return out;
}

inline json outcome_to_json(const RepairOutput& r, std::uint64_t seed) {
  json doc = interchange::envelope("outcome");
  doc["outcome"] = repair::to_string(r.outcome);
  doc["verification"] = r.agent.last_verification ? repair::verifier_to_json(*r.agent.last_verification) : json(nullptr);
  doc["fuzz"] = {{"status", repair::to_string(r.fuzz.status)}, {"surviving_variants", r.fuzz.surviving_variants}};
  doc["turns"] = r.agent.turns;
  doc["termination"] = repair::to_string(r.agent.termination);
  doc["has_patch"] = r.agent.patch.has_value();
  doc["seed"] = seed;
  interchange::validate_document(doc, "outcome");
  return doc;
}

}  // namespace rcrepair::pipeline
