#pragma once

// Versioned JSON documents exchanged between pipeline stages. Every document
// carries schema_version and kind and is validated when written and read.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"
#include "rcrepair/evidence_ranking.hpp"
#include "rcrepair/foi_pool.hpp"
#include "rcrepair/report_model.hpp"

namespace rcrepair::interchange {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

enum class T { String, Number, Integer, Boolean, Array, Object, StringOrNull, Any };

inline bool has_type(const json& v, T t) {
  switch (t) {
    case T::String: return v.is_string();
    case T::Number: return v.is_number();
    case T::Integer: return v.is_number_integer();
    case T::Boolean: return v.is_boolean();
    case T::Array: return v.is_array();
    case T::Object: return v.is_object();
    case T::StringOrNull: return v.is_string() || v.is_null();
    case T::Any: return true;
  }
  return false;
}

inline void require(const json& obj, const std::string& key, T t, const std::string& where, long index = -1) {
  if (!obj.is_object() || !obj.contains(key))
    throw SchemaError("cli", where + ": missing field '" + key + "'", index);
  if (!has_type(obj[key], t)) throw SchemaError("cli", where + ": field '" + key + "' has the wrong type", index);
}

inline void validate_frames(const json& arr, const std::string& where) {
  long i = 0;
  for (const auto& f : arr) {
    require(f, "ordinal", T::Integer, where, i);
    require(f, "function", T::String, where, i);
    ++i;
  }
}

inline void validate_candidate(const json& c, const std::string& where, long i) {
  require(c, "function", T::String, where, i);
  require(c, "file", T::StringOrNull, where, i);
  require(c, "tags", T::Array, where, i);
  for (const auto& t : c["tags"])
    if (!t.is_string() || !tag_from_string(t.get<std::string>()))
      throw SchemaError("cli", where + ": unknown evidence tag " + t.dump(), i);
}

}  // namespace detail

/// Checks the envelope and the fields each kind requires.
inline void validate_document(const json& doc, const std::string& kind) {
  using detail::require;
  using detail::T;
  if (!doc.is_object()) throw SchemaError("cli", "document must be a JSON object");
  require(doc, "schema_version", T::Integer, kind);
  if (doc["schema_version"].get<int>() != kSchemaVersion)
    throw SchemaError("cli", "unsupported schema_version " + doc["schema_version"].dump());
  require(doc, "kind", T::String, kind);
  if (doc["kind"] != kind)
    throw SchemaError("cli", "expected a '" + kind + "' document, found '" + doc["kind"].get<std::string>() + "'");

  if (kind == "report") {
    require(doc, "raw_text", T::String, kind);
    require(doc, "bug_label", T::String, kind);
    require(doc, "crash_class", T::String, kind);
    if (!crash_class_from_string(doc["crash_class"].get<std::string>()))
      throw SchemaError("cli", "report: unknown crash_class");
    for (const char* k : {"crash_stack", "alloc_stack", "free_stack", "object_origin"}) {
      require(doc, k, T::Array, kind);
      detail::validate_frames(doc[k], std::string("report.") + k);
    }
  } else if (kind == "pool") {
    require(doc, "candidates", T::Array, kind);
    long i = 0;
    for (const auto& c : doc["candidates"]) detail::validate_candidate(c, "pool", i++);
  } else if (kind == "ranked") {
    require(doc, "crash_class", T::String, kind);
    require(doc, "entries", T::Array, kind);
    long i = 0;
    for (const auto& e : doc["entries"]) {
      detail::validate_candidate(e, "ranked", i);
      require(e, "rank", T::Integer, "ranked", i);
      require(e, "score", T::Number, "ranked", i);
      require(e, "family_scores", T::Object, "ranked", i);
      if (e["rank"].get<long>() != i + 1) throw SchemaError("cli", "ranked: ranks must be 1..n in order", i);
      ++i;
    }
  } else if (kind == "transcript") {
    require(doc, "turn_cap", T::Integer, kind);
    require(doc, "turns", T::Array, kind);
    require(doc, "turns_used", T::Integer, kind);
    require(doc, "termination", T::String, kind);
    if (doc["turns"].size() > doc["turn_cap"].get<std::size_t>())
      throw SchemaError("cli", "transcript: more turns than the cap");
  } else if (kind == "outcome") {
    require(doc, "outcome", T::String, kind);
    require(doc, "verification", T::Any, kind);
    require(doc, "fuzz", T::Object, kind);
    require(doc, "turns", T::Integer, kind);
    require(doc, "termination", T::String, kind);
  } else if (kind == "stats") {
    require(doc, "rows", T::Array, kind);
  }
}

inline json envelope(const std::string& kind) { return {{"schema_version", kSchemaVersion}, {"kind", kind}}; }

inline void write_document(const std::filesystem::path& path, const json& doc, const std::string& kind) {
  validate_document(doc, kind);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cli", "cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

inline json read_document(const std::filesystem::path& path, const std::string& kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cli", "cannot read '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("cli", path.string() + ": " + e.what());
  }
  validate_document(doc, kind);
  return doc;
}

// Reports ------------------------------------------------------------------------

inline json frames_to_json(const std::vector<StackFrame>& st) {
  json arr = json::array();
  for (const auto& f : st) {
    json j{{"ordinal", f.ordinal}, {"function", f.function}};
    j["file"] = f.file ? json(*f.file) : json(nullptr);
    j["line"] = f.line ? json(*f.line) : json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline std::vector<StackFrame> frames_from_json(const json& arr) {
  std::vector<StackFrame> out;
  for (const auto& j : arr) {
    StackFrame f{j.at("ordinal").get<int>(), j.at("function").get<std::string>(), std::nullopt, std::nullopt};
    if (j.contains("file") && !j["file"].is_null()) f.file = j["file"].get<std::string>();
    if (j.contains("line") && !j["line"].is_null()) f.line = j["line"].get<int>();
    out.push_back(std::move(f));
  }
  return out;
}

inline json report_to_json(const SanitizerReport& r) {
  json doc = envelope("report");
  doc["raw_text"] = r.raw_text;
  doc["bug_label"] = r.bug_label;
  doc["crash_class"] = to_string(r.crash_class);
  doc["crash_stack"] = frames_to_json(r.crash_stack);
  doc["alloc_stack"] = frames_to_json(r.alloc_stack);
  doc["free_stack"] = frames_to_json(r.free_stack);
  doc["object_origin"] = frames_to_json(r.object_origin);
  validate_document(doc, "report");
  return doc;
}

inline SanitizerReport report_from_json(const json& doc) {
  validate_document(doc, "report");
  SanitizerReport r;
  r.raw_text = doc["raw_text"].get<std::string>();
  r.bug_label = doc["bug_label"].get<std::string>();
  r.crash_class = *crash_class_from_string(doc["crash_class"].get<std::string>());
  r.crash_stack = frames_from_json(doc["crash_stack"]);
  r.alloc_stack = frames_from_json(doc["alloc_stack"]);
  r.free_stack = frames_from_json(doc["free_stack"]);
  r.object_origin = frames_from_json(doc["object_origin"]);
  return r;
}

// Candidates -------------------------------------------------------------------

inline json candidate_to_json(const FoiCandidate& c) {
  json j{{"function", c.function}};
  j["file"] = c.file ? json(*c.file) : json(nullptr);
  json tags = json::array();
  for (auto t : c.tags.list()) tags.push_back(to_string(t));
  j["tags"] = tags;
  json meta = json::object();
  if (c.meta.trace_fraction) meta["trace_fraction"] = *c.meta.trace_fraction;
  if (c.meta.crash_ordinal) meta["crash_ordinal"] = *c.meta.crash_ordinal;
  if (c.meta.alloc_ordinal) meta["alloc_ordinal"] = *c.meta.alloc_ordinal;
  if (c.meta.free_ordinal) meta["free_ordinal"] = *c.meta.free_ordinal;
  if (c.meta.origin_ordinal) meta["origin_ordinal"] = *c.meta.origin_ordinal;
  if (c.meta.access) meta["access"] = to_string(*c.meta.access);
  j["meta"] = meta;
  if (c.signals)
    j["signals"] = {{"anchors_count", c.signals->anchors_count},
                    {"edge_hits", c.signals->edge_hits},
                    {"min_depth", c.signals->min_depth}};
  return j;
}

inline FoiCandidate candidate_from_json(const json& j) {
  FoiCandidate c;
  c.function = j.at("function").get<std::string>();
  if (!j.at("file").is_null()) c.file = j["file"].get<std::string>();
  for (const auto& t : j.at("tags")) c.tags.insert(*tag_from_string(t.get<std::string>()));
  const json meta = j.value("meta", json::object());
  if (meta.contains("trace_fraction")) c.meta.trace_fraction = meta["trace_fraction"].get<double>();
  if (meta.contains("crash_ordinal")) c.meta.crash_ordinal = meta["crash_ordinal"].get<int>();
  if (meta.contains("alloc_ordinal")) c.meta.alloc_ordinal = meta["alloc_ordinal"].get<int>();
  if (meta.contains("free_ordinal")) c.meta.free_ordinal = meta["free_ordinal"].get<int>();
  if (meta.contains("origin_ordinal")) c.meta.origin_ordinal = meta["origin_ordinal"].get<int>();
  if (meta.contains("access")) {
    auto a = access_from_string(meta["access"].get<std::string>());
    if (!a) throw SchemaError("cli", "unknown access mode " + meta["access"].dump());
    c.meta.access = *a;
  }
  if (j.contains("signals"))
    c.signals = AnchorSignals{j["signals"].at("anchors_count").get<int>(), j["signals"].at("edge_hits").get<int>(),
                              j["signals"].at("min_depth").get<int>()};
  return c;
}

inline json pool_to_json(const std::vector<FoiCandidate>& pool) {
  json doc = envelope("pool");
  doc["candidates"] = json::array();
  for (const auto& c : pool) doc["candidates"].push_back(candidate_to_json(c));
  validate_document(doc, "pool");
  return doc;
}

inline std::vector<FoiCandidate> pool_from_json(const json& doc) {
  validate_document(doc, "pool");
  std::vector<FoiCandidate> out;
  for (const auto& c : doc["candidates"]) out.push_back(candidate_from_json(c));
  return out;
}

inline json ranked_to_json(const std::vector<ScoredCandidate>& ranked, CrashClass crash_class) {
  json doc = envelope("ranked");
  doc["crash_class"] = to_string(crash_class);
  doc["entries"] = json::array();
  std::size_t rank = 1;
  for (const auto& s : ranked) {
    json e = candidate_to_json(s.candidate);
    e["rank"] = rank++;
    e["score"] = s.score;
    json fam = json::object();
    for (const auto& [id, v] : s.family_scores) fam[id] = v;
    e["family_scores"] = fam;
    doc["entries"].push_back(std::move(e));
  }
  validate_document(doc, "ranked");
  return doc;
}

inline std::vector<ScoredCandidate> ranked_from_json(const json& doc) {
  validate_document(doc, "ranked");
  std::vector<ScoredCandidate> out;
  for (const auto& e : doc["entries"]) {
    ScoredCandidate s{candidate_from_json(e), {}, e["score"].get<double>()};
    for (const auto& [id, v] : e["family_scores"].items()) s.family_scores.emplace_back(id, v.get<double>());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace rcrepair::interchange
