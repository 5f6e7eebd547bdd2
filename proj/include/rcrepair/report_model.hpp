#pragma once

// Sanitizer (ASan-style) crash report parsing and crash-class grouping.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rcrepair/error.hpp"

namespace rcrepair {

struct StackFrame {
  int ordinal = 0;
  std::string function;
  std::optional<std::string> file;
  std::optional<int> line;

  friend bool operator==(const StackFrame&, const StackFrame&) = default;
};

enum class CrashClass { Spatial, Uaf, Npd, Num, Other };

inline constexpr CrashClass kAllCrashClasses[] = {CrashClass::Spatial, CrashClass::Uaf,
                                                  CrashClass::Npd, CrashClass::Num,
                                                  CrashClass::Other};

inline std::string_view to_string(CrashClass c) {
  switch (c) {
    case CrashClass::Spatial: return "spatial";
    case CrashClass::Uaf: return "uaf";
    case CrashClass::Npd: return "npd";
    case CrashClass::Num: return "num";
    case CrashClass::Other: return "other";
  }
  return "other";
}

inline std::optional<CrashClass> crash_class_from_string(std::string_view s) {
  for (auto c : kAllCrashClasses)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

struct SanitizerReport {
  std::string raw_text;
  std::string bug_label;
  CrashClass crash_class = CrashClass::Other;
  std::vector<StackFrame> crash_stack;
  std::vector<StackFrame> alloc_stack;
  std::vector<StackFrame> free_stack;
  std::vector<StackFrame> object_origin;

  /// Equality over the structured fields only (raw_text excluded).
  bool same_structure(const SanitizerReport& o) const {
    return bug_label == o.bug_label && crash_class == o.crash_class &&
           crash_stack == o.crash_stack && alloc_stack == o.alloc_stack &&
           free_stack == o.free_stack && object_origin == o.object_origin;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

inline std::vector<std::string> split_tokens(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) pos = s.size();
    if (pos > start) out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// "path:line" or "path:line:col"; returns false when the token is not a location.
inline bool split_location(std::string_view tok, std::string& file, int& line) {
  auto last = tok.rfind(':');
  if (last == std::string_view::npos || last == 0) return false;
  auto tail = tok.substr(last + 1);
  auto head = tok.substr(0, last);
  if (!all_digits(tail)) return false;
  auto prev = head.rfind(':');
  if (prev != std::string_view::npos && all_digits(head.substr(prev + 1))) {
    // path:line:col
    line = std::stoi(std::string(head.substr(prev + 1)));
    file = std::string(head.substr(0, prev));
  } else {
    line = std::stoi(std::string(tail));
    file = std::string(head);
  }
  return !file.empty() && line > 0;
}

// Parses `#<n> 0x<hex> in <symbol> <file>:<line>[:col]`. Frames whose symbol
// is unknown (bare module+offset) yield nullopt and are dropped by the caller.
inline std::optional<StackFrame> parse_frame_line(std::string_view line) {
  auto s = trim(line);
  if (s.size() < 2 || s.front() != '#') return std::nullopt;
  std::size_t i = 1;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == 1) return std::nullopt;
  s = trim(s.substr(i));
  if (s.rfind("0x", 0) == 0) {
    auto sp = s.find_first_of(" \t");
    s = sp == std::string_view::npos ? std::string_view{} : trim(s.substr(sp));
  }
  if (s.rfind("in ", 0) != 0 && s.rfind("in\t", 0) != 0) return std::nullopt;
  s = trim(s.substr(3));
  if (s.empty()) return std::nullopt;

  StackFrame f;
  auto sp = s.find_last_of(" \t");
  if (sp != std::string_view::npos) {
    auto last_tok = s.substr(sp + 1);
    std::string file;
    int ln = 0;
    if (last_tok.front() == '(' && last_tok.back() == ')') {
      s = trim(s.substr(0, sp));  // module+offset, no source location
    } else if (split_location(last_tok, file, ln)) {
      f.file = file;
      f.line = ln;
      s = trim(s.substr(0, sp));
    }
  }
  f.function = std::string(s);
  if (f.function.empty()) return std::nullopt;
  return f;
}

enum class Section { None, Crash, Alloc, Free, Origin, Ignored };

inline bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

// First word after "<Sanitizer>: " on an ERROR or SUMMARY line.
inline std::string label_after_tool(std::string_view line) {
  auto pos = line.find("Sanitizer: ");
  if (pos == std::string_view::npos) return {};
  auto rest = trim(line.substr(pos + 11));
  if (rest.rfind("attempting ", 0) == 0) rest = trim(rest.substr(11));
  auto end = rest.find_first_of(" \t");
  return std::string(rest.substr(0, end));
}

}  // namespace detail

/// Lowercase, map spaces and underscores to hyphens, collapse repeated hyphens.
inline std::string normalize_label(std::string_view label) {
  std::string out;
  for (char c : detail::trim(label)) {
    char n = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == ' ' || n == '_' || n == '\t') n = '-';
    if (n == '-' && (out.empty() || out.back() == '-')) continue;
    out.push_back(n);
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

/// Total mapping from a sanitizer label to one of the five crash classes.
/// Rules are checked in a fixed order, so every label has exactly one class.
inline CrashClass classify_crash(std::string_view bug_label) {
  const std::string l = normalize_label(bug_label);
  const auto tokens = detail::split_tokens(l, '-');
  auto has_token = [&](std::string_view t) {
    return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
  };
  using detail::contains;

  if (contains(l, "use-after") || contains(l, "double-free") || contains(l, "invalid-free") ||
      contains(l, "bad-free"))
    return CrashClass::Uaf;
  if (contains(l, "null-pointer") || contains(l, "null-deref") || has_token("nullptr") ||
      contains(l, "null-dereference"))
    return CrashClass::Npd;
  if (contains(l, "divide-by-zero") || contains(l, "div-by-zero") || has_token("fpe") ||
      contains(l, "integer-overflow") || contains(l, "invalid-shift") ||
      contains(l, "invalid-bit-shift") || contains(l, "shift-exponent") ||
      contains(l, "shift-base"))
    return CrashClass::Num;
  if (contains(l, "buffer-overflow") || contains(l, "buffer-underflow") ||
      contains(l, "out-of-bound") || contains(l, "container-overflow") || has_token("oob"))
    return CrashClass::Spatial;
  return CrashClass::Other;
}

/// Parses an ASan-style report. The crash stack is the first frame block after
/// the ERROR line; "allocated by"/"freed by" blocks and the "in frame" block of
/// a stack-address description become the alloc, free and object-origin stacks.
inline SanitizerReport parse_report(std::string_view text) {
  using detail::contains;
  using detail::Section;
  if (detail::trim(text).empty()) throw ParseError("empty report", 0);

  SanitizerReport r;
  r.raw_text = std::string(text);
  std::string error_label;
  std::string summary_label;
  bool zero_page = false;
  bool seen_error = false;
  bool crash_done = false;
  std::size_t last_good = 0;
  Section section = Section::None;

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    const std::size_t line_start = pos;
    pos = eol + 1;
    const auto t = detail::trim(line);

    if (auto frame = detail::parse_frame_line(t)) {
      std::vector<StackFrame>* target = nullptr;
      switch (section) {
        case Section::Crash: target = &r.crash_stack; break;
        case Section::Alloc: target = &r.alloc_stack; break;
        case Section::Free: target = &r.free_stack; break;
        case Section::Origin: target = &r.object_origin; break;
        default: break;
      }
      if (target) {
        frame->ordinal = static_cast<int>(target->size());
        target->push_back(std::move(*frame));
        last_good = line_start;
      }
      continue;
    }
    if (t.rfind("#", 0) == 0 && section != Section::None) continue;  // symbol-less frame

    if (section == Section::Crash && !r.crash_stack.empty()) crash_done = true;

    if (contains(t, "ERROR: ") && contains(t, "Sanitizer")) {
      seen_error = true;
      error_label = detail::label_after_tool(t);
      if (contains(t, "0x000000000000")) zero_page = true;
      section = Section::Crash;
      last_good = line_start;
    } else if (contains(t, "SUMMARY: ")) {
      summary_label = detail::label_after_tool(t);
      section = Section::None;
      last_good = line_start;
    } else if (contains(t, "freed by thread")) {
      section = Section::Free;
      last_good = line_start;
    } else if (contains(t, "allocated by thread")) {
      section = Section::Alloc;
      last_good = line_start;
    } else if (contains(t, "is located in stack of thread") && contains(t, "in frame")) {
      section = Section::Origin;
      last_good = line_start;
    } else if (contains(t, "created by") && contains(t, "here:")) {
      section = Section::Ignored;
    } else if (contains(t, "points to the zero page")) {
      zero_page = true;
    } else if (t.empty() && section != Section::Crash) {
      section = Section::None;
    } else if (section == Section::Crash && crash_done) {
      section = Section::None;
    }
    // READ/WRITE lines, hints and blank lines inside the crash block are skipped.
  }

  if (!seen_error || r.crash_stack.empty())
    throw ParseError("no crash stack section found", last_good);

  r.bug_label = !summary_label.empty() ? summary_label : error_label;
  if (normalize_label(r.bug_label) == "segv" && zero_page) r.bug_label = "null-pointer-dereference";
  r.crash_class = classify_crash(r.bug_label);
  return r;
}

/// Renders the structured fields back into an ASan-shaped report that
/// parse_report maps to the same structure.
inline std::string render_report(const SanitizerReport& r) {
  std::string out = "==1==ERROR: AddressSanitizer: " + r.bug_label + " on address 0x1000\n";
  auto frames = [&](const std::vector<StackFrame>& st) {
    for (const auto& f : st) {
      out += "    #" + std::to_string(f.ordinal) + " 0x" + std::to_string(400000 + f.ordinal) +
             " in " + f.function;
      if (f.file) {
        out += " " + *f.file;
        if (f.line) out += ":" + std::to_string(*f.line);
      }
      out += "\n";
    }
    out += "\n";
  };
  frames(r.crash_stack);
  if (!r.object_origin.empty()) {
    out += "Address 0x1000 is located in stack of thread T0 at offset 0 in frame\n";
    frames(r.object_origin);
  }
  if (!r.free_stack.empty()) {
    out += "freed by thread T0 here:\n";
    frames(r.free_stack);
  }
  if (!r.alloc_stack.empty()) {
    out += "previously allocated by thread T0 here:\n";
    frames(r.alloc_stack);
  }
  out += "SUMMARY: AddressSanitizer: " + r.bug_label + "\n";
  return out;
}

/// Anchor functions for call-graph traversal: crash stack first, then
/// allocation frames for spatial/temporal bugs, then free frames for
/// temporal bugs. Deduplicated, at most `limit` entries.
inline std::vector<std::string> anchors_from_report(const SanitizerReport& report,
                                                    std::size_t limit) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto take = [&](const std::vector<StackFrame>& st) {
    for (const auto& f : st) {
      if (out.size() >= limit) return;
      if (seen.insert(f.function).second) out.push_back(f.function);
    }
  };
  take(report.crash_stack);
  if (report.crash_class == CrashClass::Spatial || report.crash_class == CrashClass::Uaf)
    take(report.alloc_stack);
  if (report.crash_class == CrashClass::Uaf) take(report.free_stack);
  return out;
}

}  // namespace rcrepair
