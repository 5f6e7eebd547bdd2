#pragma once

// Line-based unified diff (Myers shortest edit script) and a strict applier
// that requires every context and removed line to match exactly.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rcrepair/error.hpp"

namespace rcrepair::repair {

class PatchApplyError : public Error {
 public:
  explicit PatchApplyError(const std::string& what) : Error("repair_loop", what) {}
};

namespace diff_detail {

/// Splits into lines that keep their '\n' terminator; only the last line may lack it.
inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, nl - start + 1));
    start = nl + 1;
  }
  return out;
}

enum class Op { Keep, Del, Ins };

struct Edit {
  Op op;
  std::size_t a;  // index into old lines (Keep/Del)
  std::size_t b;  // index into new lines (Keep/Ins)
};

inline std::vector<Edit> myers(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const long n = static_cast<long>(a.size());
  const long m = static_cast<long>(b.size());
  const long max = n + m;
  std::vector<long> v(static_cast<std::size_t>(2 * max + 2), 0);
  std::vector<std::vector<long>> trace;
  const long off = max + 1;
  long found_d = -1;
  for (long d = 0; d <= max && found_d < 0; ++d) {
    trace.push_back(v);
    for (long k = -d; k <= d; k += 2) {
      long x;
      if (k == -d || (k != d && v[off + k - 1] < v[off + k + 1]))
        x = v[off + k + 1];
      else
        x = v[off + k - 1] + 1;
      long y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[off + k] = x;
      if (x >= n && y >= m) {
        found_d = d;
        break;
      }
    }
  }
  trace.push_back(v);

  std::vector<Edit> edits;
  long x = n, y = m;
  for (long d = found_d; d > 0; --d) {
    const auto& vp = trace[static_cast<std::size_t>(d)];
    long k = x - y;
    long prev_k = (k == -d || (k != d && vp[off + k - 1] < vp[off + k + 1])) ? k + 1 : k - 1;
    long prev_x = vp[off + prev_k];
    long prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      --x;
      --y;
      edits.push_back({Op::Keep, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
    }
    if (x == prev_x)
      edits.push_back({Op::Ins, static_cast<std::size_t>(x), static_cast<std::size_t>(prev_y)});
    else
      edits.push_back({Op::Del, static_cast<std::size_t>(prev_x), static_cast<std::size_t>(y)});
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    --x;
    --y;
    edits.push_back({Op::Keep, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
  }
  std::reverse(edits.begin(), edits.end());
  return edits;
}

inline void emit_line(std::string& out, char prefix, const std::string& line) {
  out += prefix;
  if (!line.empty() && line.back() == '\n') {
    out += line;
  } else {
    out += line;
    out += "\n\\ No newline at end of file\n";
  }
}

}  // namespace diff_detail

/// Unified diff of one file (`--- a/<path>` / `+++ b/<path>`); empty when equal.
inline std::string make_unified_diff(const std::string& path, std::string_view old_text,
                                     std::string_view new_text, std::size_t context = 3) {
  using namespace diff_detail;
  if (old_text == new_text) return {};
  const auto a = split_lines(old_text);
  const auto b = split_lines(new_text);
  const auto edits = myers(a, b);

  std::string out = "--- a/" + path + "\n+++ b/" + path + "\n";
  std::size_t i = 0;
  while (i < edits.size()) {
    // Find the next change.
    while (i < edits.size() && edits[i].op == Op::Keep) ++i;
    if (i == edits.size()) break;
    std::size_t start = i >= context ? i - context : 0;
    // Extend the hunk while changes are within 2*context of each other.
    std::size_t end = i;
    std::size_t last_change = i;
    while (end < edits.size()) {
      if (edits[end].op != Op::Keep) last_change = end;
      if (end - last_change > 2 * context) break;
      ++end;
    }
    end = std::min(edits.size(), last_change + context + 1);

    std::size_t old_start = 0, new_start = 0, old_len = 0, new_len = 0;
    bool first = true;
    std::string body;
    for (std::size_t j = start; j < end; ++j) {
      const auto& e = edits[j];
      if (first) {
        old_start = e.a;
        new_start = e.b;
        first = false;
      }
      switch (e.op) {
        case Op::Keep: emit_line(body, ' ', a[e.a]); ++old_len; ++new_len; break;
        case Op::Del: emit_line(body, '-', a[e.a]); ++old_len; break;
        case Op::Ins: emit_line(body, '+', b[e.b]); ++new_len; break;
      }
    }
    auto range = [](std::size_t s, std::size_t len) {
      std::size_t shown = len == 0 ? s : s + 1;
      return std::to_string(shown) + (len == 1 ? "" : "," + std::to_string(len));
    };
    out += "@@ -" + range(old_start, old_len) + " +" + range(new_start, new_len) + " @@\n" + body;
    i = end;
  }
  return out;
}

struct FilePatch {
  std::string path;
  struct Hunk {
    std::size_t old_start = 0;
    std::vector<std::pair<char, std::string>> lines;  // prefix, line incl. terminator
  };
  std::vector<Hunk> hunks;
};

inline std::vector<FilePatch> parse_unified_diff(std::string_view diff) {
  std::vector<FilePatch> out;
  auto lines = diff_detail::split_lines(diff);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view l = lines[i];
    if (l.rfind("--- ", 0) == 0) {
      if (i + 1 >= lines.size() || lines[i + 1].rfind("+++ ", 0) != 0)
        throw PatchApplyError("'---' header without '+++'");
      std::string p = lines[i + 1].substr(4);
      while (!p.empty() && (p.back() == '\n' || p.back() == '\r')) p.pop_back();
      if (p.rfind("b/", 0) == 0) p = p.substr(2);
      out.push_back({p, {}});
      ++i;
    } else if (l.rfind("@@ ", 0) == 0) {
      if (out.empty()) throw PatchApplyError("hunk before file header");
      FilePatch::Hunk h;
      auto minus = l.find('-');
      h.old_start = std::stoul(std::string(l.substr(minus + 1)));
      out.back().hunks.push_back(std::move(h));
    } else if (!l.empty() && (l[0] == ' ' || l[0] == '-' || l[0] == '+')) {
      if (out.empty() || out.back().hunks.empty()) throw PatchApplyError("diff line outside hunk");
      out.back().hunks.back().lines.emplace_back(l[0], std::string(l.substr(1)));
    } else if (l.rfind("\\ No newline at end of file", 0) == 0) {
      if (out.empty() || out.back().hunks.empty() || out.back().hunks.back().lines.empty())
        throw PatchApplyError("stray no-newline marker");
      auto& last = out.back().hunks.back().lines.back().second;
      if (!last.empty() && last.back() == '\n') last.pop_back();
    }
  }
  return out;
}

/// Applies the hunks of one file patch to `text`; no fuzz, no offset search.
inline std::string apply_file_patch(std::string_view text, const FilePatch& patch) {
  const auto old_lines = diff_detail::split_lines(text);
  std::vector<std::string> out;
  std::size_t cursor = 0;
  for (const auto& h : patch.hunks) {
    std::size_t pos = h.old_start == 0 ? 0 : h.old_start - 1;
    bool pure_insert = std::none_of(h.lines.begin(), h.lines.end(),
                                    [](const auto& l) { return l.first != '+'; });
    if (pure_insert && h.old_start != 0) pos = h.old_start;  // "-N,0" inserts after line N
    if (pos < cursor || pos > old_lines.size())
      throw PatchApplyError(patch.path + ": hunk at line " + std::to_string(h.old_start) + " out of range");
    out.insert(out.end(), old_lines.begin() + static_cast<long>(cursor),
               old_lines.begin() + static_cast<long>(pos));
    cursor = pos;
    for (const auto& [prefix, line] : h.lines) {
      if (prefix == '+') {
        out.push_back(line);
        continue;
      }
      if (cursor >= old_lines.size() || old_lines[cursor] != line)
        throw PatchApplyError(patch.path + ": context mismatch near line " + std::to_string(cursor + 1));
      if (prefix == ' ') out.push_back(line);
      ++cursor;
    }
  }
  out.insert(out.end(), old_lines.begin() + static_cast<long>(cursor), old_lines.end());
  std::string result;
  for (const auto& l : out) result += l;
  return result;
}

/// Applies a multi-file diff beneath `root`, checking every file before writing any.
inline void apply_unified_diff(const std::filesystem::path& root, std::string_view diff) {
  std::map<std::filesystem::path, std::string> staged;
  for (const auto& fp : parse_unified_diff(diff)) {
    auto p = root / fp.path;
    std::string current;
    if (auto it = staged.find(p); it != staged.end()) {
      current = it->second;
    } else {
      std::ifstream in(p, std::ios::binary);
      if (!in) throw PatchApplyError("cannot read " + fp.path);
      std::ostringstream ss;
      ss << in.rdbuf();
      current = ss.str();
    }
    staged[p] = apply_file_patch(current, fp);
  }
  for (const auto& [p, content] : staged) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
  }
}

}  // namespace rcrepair::repair
