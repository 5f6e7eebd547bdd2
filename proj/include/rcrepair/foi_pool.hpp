#pragma once

// Tagged Function-of-Interest pool: construction from each evidence source,
// fusion of duplicates, and consolidation filters.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcrepair/callgraph.hpp"
#include "rcrepair/dynamic_traces.hpp"
#include "rcrepair/report_model.hpp"

namespace rcrepair {

enum class EvidenceTag : std::uint8_t {
  CrashStack,
  CallTrace,
  AllocStack,
  FreeStack,
  ObjectOrigin,
  VarDep,
};

inline constexpr std::array<EvidenceTag, 6> kAllTags{
    EvidenceTag::CrashStack, EvidenceTag::CallTrace,    EvidenceTag::AllocStack,
    EvidenceTag::FreeStack,  EvidenceTag::ObjectOrigin, EvidenceTag::VarDep};

inline std::string_view to_string(EvidenceTag t) {
  switch (t) {
    case EvidenceTag::CrashStack: return "crash_stack";
    case EvidenceTag::CallTrace: return "call_trace";
    case EvidenceTag::AllocStack: return "alloc_stack";
    case EvidenceTag::FreeStack: return "free_stack";
    case EvidenceTag::ObjectOrigin: return "object_origin";
    case EvidenceTag::VarDep: return "var_dep";
  }
  return "crash_stack";
}

inline std::optional<EvidenceTag> tag_from_string(std::string_view s) {
  for (auto t : kAllTags)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

/// Set of evidence tags backed by a bitmask; iterates in declaration order.
class TagSet {
 public:
  TagSet() = default;
  TagSet(std::initializer_list<EvidenceTag> tags) {
    for (auto t : tags) insert(t);
  }

  void insert(EvidenceTag t) { bits_ |= bit(t); }
  void erase(EvidenceTag t) { bits_ &= static_cast<std::uint8_t>(~bit(t)); }
  bool contains(EvidenceTag t) const { return (bits_ & bit(t)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const { return static_cast<std::size_t>(__builtin_popcount(bits_)); }
  TagSet& operator|=(const TagSet& o) {
    bits_ |= o.bits_;
    return *this;
  }
  std::vector<EvidenceTag> list() const {
    std::vector<EvidenceTag> out;
    for (auto t : kAllTags)
      if (contains(t)) out.push_back(t);
    return out;
  }
  std::uint8_t bits() const { return bits_; }

  friend bool operator==(const TagSet&, const TagSet&) = default;

 private:
  static std::uint8_t bit(EvidenceTag t) { return static_cast<std::uint8_t>(1u << static_cast<int>(t)); }
  std::uint8_t bits_ = 0;
};

/// Per-tag metadata. Each field may only be set when its tag is present.
struct TagMeta {
  std::optional<double> trace_fraction;  // CallTrace
  std::optional<int> crash_ordinal;      // CrashStack
  std::optional<int> alloc_ordinal;      // AllocStack
  std::optional<int> free_ordinal;       // FreeStack
  std::optional<int> origin_ordinal;     // ObjectOrigin
  std::optional<Access> access;          // VarDep

  friend bool operator==(const TagMeta&, const TagMeta&) = default;
};

struct FoiCandidate {
  std::string function;
  std::optional<std::string> file;
  TagSet tags;
  TagMeta meta;
  std::optional<AnchorSignals> signals;

  friend bool operator==(const FoiCandidate&, const FoiCandidate&) = default;

  bool meta_consistent() const {
    return !tags.empty() && (!meta.trace_fraction || tags.contains(EvidenceTag::CallTrace)) &&
           (!meta.crash_ordinal || tags.contains(EvidenceTag::CrashStack)) &&
           (!meta.alloc_ordinal || tags.contains(EvidenceTag::AllocStack)) &&
           (!meta.free_ordinal || tags.contains(EvidenceTag::FreeStack)) &&
           (!meta.origin_ordinal || tags.contains(EvidenceTag::ObjectOrigin)) &&
           (!meta.access || tags.contains(EvidenceTag::VarDep));
  }
};

// Source adapters ------------------------------------------------------------

/// Crash, alloc, free and object-origin frames of a report, one candidate per frame.
inline std::vector<FoiCandidate> candidates_from_report(const SanitizerReport& r) {
  std::vector<FoiCandidate> out;
  auto add = [&](const std::vector<StackFrame>& st, EvidenceTag tag, std::optional<int> TagMeta::*slot) {
    for (const auto& f : st) {
      FoiCandidate c{f.function, f.file, {tag}, {}, std::nullopt};
      c.meta.*slot = f.ordinal;
      out.push_back(std::move(c));
    }
  };
  add(r.crash_stack, EvidenceTag::CrashStack, &TagMeta::crash_ordinal);
  add(r.alloc_stack, EvidenceTag::AllocStack, &TagMeta::alloc_ordinal);
  add(r.free_stack, EvidenceTag::FreeStack, &TagMeta::free_ordinal);
  add(r.object_origin, EvidenceTag::ObjectOrigin, &TagMeta::origin_ordinal);
  return out;
}

/// One CallTrace candidate per function of the family, carrying its occurrence fraction.
inline std::vector<FoiCandidate> candidates_from_traces(const std::vector<ExecutionTrace>& traces,
                                                        const OccurrenceStats& stats) {
  std::vector<FoiCandidate> out;
  std::set<TraceKey> emitted;
  for (const auto& t : traces) {
    for (const auto& f : t.frames) {
      TraceKey key{f.function, f.file.value_or("")};
      if (!emitted.insert(key).second) continue;
      FoiCandidate c{f.function, f.file, {EvidenceTag::CallTrace}, {}, std::nullopt};
      auto occ = stats.functions.find(key);
      c.meta.trace_fraction = occ == stats.functions.end() ? 1.0 : occ->second.fraction;
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline std::vector<FoiCandidate> candidates_from_dataflow(const std::vector<DataflowCandidate>& df) {
  std::vector<FoiCandidate> out;
  for (const auto& d : df) {
    FoiCandidate c{d.function, d.file, {EvidenceTag::VarDep}, {}, std::nullopt};
    c.meta.access = d.access;
    out.push_back(std::move(c));
  }
  return out;
}

/// Call-graph traversal results join the static-dependency evidence.
inline std::vector<FoiCandidate> candidates_from_graph(const std::vector<GraphCandidate>& gc) {
  std::vector<FoiCandidate> out;
  for (const auto& g : gc) {
    FoiCandidate c{g.symbol, std::nullopt, {EvidenceTag::VarDep}, {}, g.signals};
    if (!g.file.empty()) c.file = g.file;
    out.push_back(std::move(c));
  }
  return out;
}

// Fusion -----------------------------------------------------------------------

namespace detail {

template <typename T, typename Pick>
void merge_opt(std::optional<T>& into, const std::optional<T>& from, Pick pick) {
  if (!from) return;
  into = into ? pick(*into, *from) : *from;
}

inline void fuse_into(FoiCandidate& into, const FoiCandidate& from) {
  into.tags |= from.tags;
  auto mn = [](int a, int b) { return std::min(a, b); };
  merge_opt(into.meta.trace_fraction, from.meta.trace_fraction,
            [](double a, double b) { return std::max(a, b); });
  merge_opt(into.meta.crash_ordinal, from.meta.crash_ordinal, mn);
  merge_opt(into.meta.alloc_ordinal, from.meta.alloc_ordinal, mn);
  merge_opt(into.meta.free_ordinal, from.meta.free_ordinal, mn);
  merge_opt(into.meta.origin_ordinal, from.meta.origin_ordinal, mn);
  merge_opt(into.meta.access, from.meta.access,
            [](Access a, Access b) { return a == b ? a : Access::ReadWrite; });
  merge_opt(into.signals, from.signals, AnchorSignals::best);
  if (!into.file && from.file) into.file = from.file;
}

}  // namespace detail

/// Fuses candidates with equal (function, file) keys. A missing file acts as
/// a wildcard when the symbol is seen with at most one file; when the symbol
/// appears in two or more files the file-less entries stay a separate record,
/// so the fused set never depends on input order. Output follows first
/// appearance.
inline std::vector<FoiCandidate> merge_pool(const std::vector<std::vector<FoiCandidate>>& sources) {
  struct Entry {
    std::size_t first;
    const FoiCandidate* c;
  };
  std::map<std::string, std::vector<Entry>> by_symbol;
  std::size_t index = 0;
  for (const auto& src : sources)
    for (const auto& c : src) by_symbol[c.function].push_back({index++, &c});

  std::vector<std::pair<std::size_t, FoiCandidate>> fused;
  for (auto& [symbol, entries] : by_symbol) {
    std::set<std::string> files;
    for (const auto& e : entries)
      if (e.c->file) files.insert(*e.c->file);
    const bool wildcard = files.size() <= 1;

    std::map<std::optional<std::string>, std::pair<std::size_t, FoiCandidate>> records;
    for (const auto& e : entries) {
      std::optional<std::string> key = wildcard ? std::nullopt : e.c->file;
      auto it = records.find(key);
      if (it == records.end()) {
        records.emplace(key, std::make_pair(e.first, *e.c));
      } else {
        it->second.first = std::min(it->second.first, e.first);
        detail::fuse_into(it->second.second, *e.c);
      }
    }
    for (auto& [key, rec] : records) fused.push_back(std::move(rec));
  }
  std::sort(fused.begin(), fused.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<FoiCandidate> out;
  out.reserve(fused.size());
  for (auto& [pos, c] : fused) out.push_back(std::move(c));
  return out;
}

// Filtering --------------------------------------------------------------------

struct FilterPolicy {
  std::vector<std::string> symbol_denylist;
  std::vector<std::string> prefix_denylist;
  /// Directory markers such as "/test": a file matches when one of its
  /// directory components equals the marker (so "src/tests/a.c" matches "/tests").
  std::vector<std::string> path_patterns;

  static FilterPolicy defaults() {
    return {{"main", "memcpy", "memmove", "memset", "malloc", "calloc", "realloc", "free", "strlen",
             "strcpy", "strncpy"},
            {"LLVMFuzzer", "__asan_", "__sanitizer_", "operator new", "operator delete"},
            {"/test", "/tests", "/fuzz", "/fuzzer", "/oss-fuzz"}};
  }

  bool denies(const FoiCandidate& c) const {
    for (const auto& s : symbol_denylist)
      if (c.function == s) return true;
    for (const auto& p : prefix_denylist)
      if (c.function.rfind(p, 0) == 0) return true;
    if (c.file) {
      auto slash = c.file->rfind('/');
      const std::string dir =
          "/" + (slash == std::string::npos ? std::string{} : c.file->substr(0, slash + 1));
      for (auto p : path_patterns) {
        if (p.empty()) continue;
        if (p.front() != '/') p.insert(p.begin(), '/');
        if (p.back() != '/') p.push_back('/');
        if (dir.find(p) != std::string::npos) return true;
      }
    }
    return false;
  }
};

inline std::vector<FoiCandidate> filter_pool(std::vector<FoiCandidate> pool,
                                             const FilterPolicy& policy = FilterPolicy::defaults()) {
  std::erase_if(pool, [&](const FoiCandidate& c) { return policy.denies(c); });
  return pool;
}

}  // namespace rcrepair
