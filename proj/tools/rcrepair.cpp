// rcrepair: parse-report, rank, repair and stats commands.
//
// Exit codes: 0 success (repair: plausible patch), 1 the pipeline ran but the
// outcome is negative, 2 input or configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>

#include "rcrepair/interchange.hpp"
#include "rcrepair/patch_assessment.hpp"
#include "rcrepair/pipeline.hpp"
#include "rcrepair/repair/llm_http.hpp"

namespace fs = std::filesystem;
using namespace rcrepair;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitInput = 2;

struct CommonFlags {
  std::string config, report, traces, callgraph, dataflow, project, poc;
  std::string adapter_llm, adapter_fuzzer, out;
  std::optional<std::uint64_t> seed;
};

void add_pipeline_flags(CLI::App* cmd, CommonFlags& f, bool with_llm) {
  cmd->add_option("--config", f.config, "pipeline configuration (JSON)");
  cmd->add_option("--report", f.report, "sanitizer report text");
  cmd->add_option("--traces", f.traces, "trace NDJSON file or variant directory");
  cmd->add_option("--callgraph", f.callgraph, "call-graph document");
  cmd->add_option("--dataflow", f.dataflow, "dataflow candidate document");
  cmd->add_option("--project", f.project, "project source tree");
  cmd->add_option("--poc", f.poc, "crashing input");
  cmd->add_option("--adapter-fuzzer", f.adapter_fuzzer, "fuzzer backend")->check(CLI::IsMember({"none", "stub", "real"}));
  if (with_llm) cmd->add_option("--adapter-llm", f.adapter_llm, "language model backend")->check(CLI::IsMember({"real", "mock"}));
  cmd->add_option("--seed", f.seed, "seed recorded with the outputs");
  cmd->add_option("--out", f.out, "output directory");
}

pipeline::PipelineConfig resolve_config(const CommonFlags& f) {
  auto c = f.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_pipeline_config(f.config);
  auto set = [](std::optional<fs::path>& slot, const std::string& v) {
    if (!v.empty()) slot = fs::absolute(v);
  };
  set(c.paths.report, f.report);
  set(c.paths.traces, f.traces);
  set(c.paths.callgraph, f.callgraph);
  set(c.paths.dataflow, f.dataflow);
  set(c.paths.project, f.project);
  set(c.paths.poc, f.poc);
  if (!f.adapter_llm.empty()) c.adapters.llm = f.adapter_llm;
  if (!f.adapter_fuzzer.empty()) c.adapters.fuzzer = f.adapter_fuzzer;
  if (f.seed) c.seed = *f.seed;
  return c;
}

void emit(const nlohmann::json& doc, const std::string& kind, const std::string& out_dir, const std::string& name) {
  if (out_dir.empty()) {
    interchange::validate_document(doc, kind);
    std::cout << doc.dump(2) << "\n";
    return;
  }
  fs::create_directories(out_dir);
  interchange::write_document(fs::path(out_dir) / name, doc, kind);
}

std::unique_ptr<repair::LanguageModel> make_http_model(const pipeline::PipelineConfig& c) {
  repair::HttpModelConfig h;
  h.base_url = c.adapters.llm_base_url;
  h.path = c.adapters.llm_path;
  h.model = c.adapters.llm_model;
  h.api_key_env = c.adapters.api_key_env;
  return std::make_unique<repair::HttpChatModel>(h);
}

int cmd_parse_report(const std::string& path, const std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  emit(interchange::report_to_json(parse_report(ss.str())), "report", out, "report.json");
  return kExitOk;
}

int cmd_rank(const CommonFlags& f) {
  auto c = resolve_config(f);
  std::unique_ptr<FuzzerBackend> fuzzer;
  if (!c.paths.traces && c.adapters.fuzzer != "none")
    fuzzer = pipeline::make_fuzzer(c, fs::temp_directory_path() / ("rcrepair-fuzz-" + std::to_string(::getpid())));
  auto r = pipeline::run_rank(c, fuzzer.get());
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  emit(interchange::ranked_to_json(r.ranked, r.report.crash_class), "ranked", f.out, "ranked.json");
  if (!f.out.empty()) emit(interchange::pool_to_json(r.pool), "pool", f.out, "pool.json");
  return kExitOk;
}

int cmd_repair(const CommonFlags& f, bool keep_work) {
  if (f.out.empty()) throw ConfigError("repair needs --out");
  auto c = resolve_config(f);
  c.validate_for_repair();

  std::string tmpl = (fs::temp_directory_path() / "rcrepair-work-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw Error("cli", "cannot create a scratch directory");
  const fs::path scratch = tmpl;
  const fs::path work = scratch / "copy";

  pipeline::RepairOutput r;
  try {
    r = pipeline::run_repair(c, work, make_http_model);
  } catch (...) {
    if (!keep_work) fs::remove_all(scratch);
    throw;
  }

  const fs::path out = f.out;
  fs::create_directories(out);
  interchange::write_document(out / "ranked.json", interchange::ranked_to_json(r.rank.ranked, r.rank.report.crash_class),
                              "ranked");
  interchange::write_document(out / "transcript.json", r.agent.transcript, "transcript");
  interchange::write_document(out / "outcome.json", pipeline::outcome_to_json(r, c.seed), "outcome");
  if (r.agent.patch) {
    std::ofstream(out / "patch.diff", std::ios::binary) << *r.agent.patch;
  } else {
    fs::remove(out / "patch.diff");
  }
  if (keep_work)
    std::cerr << "working copy kept at " << work << "\n";
  else
    fs::remove_all(scratch);

  std::cout << "outcome: " << repair::to_string(r.outcome) << " (turns " << r.agent.turns << ", "
            << repair::to_string(r.agent.termination) << ")\n";
  return r.outcome == repair::PatchOutcome::PlausiblePatch ? kExitOk : kExitNegative;
}

int cmd_stats(const std::string& path, const std::string& out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  const auto rep = compute_stats(parse_ratings_store(in));
  std::cout << format_stats(rep);
  if (!out.empty()) {
    fs::create_directories(out);
    interchange::write_document(fs::path(out) / "stats.json", stats_to_json(rep), "stats");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Root-cause-guided vulnerability repair pipeline"};
  app.require_subcommand(1);

  std::string report_path, report_out;
  auto* parse = app.add_subcommand("parse-report", "Parse a sanitizer report into a report document");
  parse->add_option("report", report_path, "sanitizer report text")->required();
  parse->add_option("--out", report_out, "output directory (stdout when omitted)");

  CommonFlags rank_flags;
  auto* rank = app.add_subcommand("rank", "Build, score and rank the candidate functions");
  add_pipeline_flags(rank, rank_flags, false);

  CommonFlags repair_flags;
  bool keep_work = false;
  auto* rep = app.add_subcommand("repair", "Rank, run the repair agent and classify the patch");
  add_pipeline_flags(rep, repair_flags, true);
  rep->add_flag("--keep-work", keep_work, "keep the scratch working copy");

  std::string ratings_path, stats_out;
  auto* stats = app.add_subcommand("stats", "Agreement and sign-test report for a ratings store");
  stats->add_option("ratings", ratings_path, "ratings store (NDJSON)")->required();
  stats->add_option("--out", stats_out, "directory for stats.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*parse) return cmd_parse_report(report_path, report_out);
    if (*rank) return cmd_rank(rank_flags);
    if (*rep) return cmd_repair(repair_flags, keep_work);
    if (*stats) return cmd_stats(ratings_path, stats_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
