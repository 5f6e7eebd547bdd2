#pragma once

// Lightweight source index for C/C++ trees: finds function definitions by
// brace matching on comment- and literal-stripped text. It stands in for a
// compiler-backed index when navigating small projects.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rcrepair/repair/working_copy.hpp"

namespace rcrepair::repair {

struct FunctionInfo {
  std::string name;
  std::string file;  // relative to the indexed root
  int start_line = 0;
  int end_line = 0;
  std::string source;
  std::vector<std::string> callees;
  std::vector<std::string> globals;
};

namespace index_detail {

inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Replaces comments, string and char literals with spaces (newlines kept).
inline std::string mask(std::string_view src) {
  std::string out(src);
  enum { Code, Line, Block, Str, Chr } st = Code;
  for (std::size_t i = 0; i < out.size(); ++i) {
    char c = src[i];
    char next = i + 1 < src.size() ? src[i + 1] : '\0';
    switch (st) {
      case Code:
        if (c == '/' && next == '/') { st = Line; out[i] = ' '; }
        else if (c == '/' && next == '*') { st = Block; out[i] = ' '; }
        else if (c == '"') { st = Str; }
        else if (c == '\'') { st = Chr; }
        break;
      case Line:
        if (c == '\n') st = Code; else out[i] = ' ';
        break;
      case Block:
        if (c == '*' && next == '/') { out[i] = ' '; out[i + 1] = ' '; ++i; st = Code; }
        else if (c != '\n') out[i] = ' ';
        break;
      case Str:
      case Chr:
        if (c == '\\' && i + 1 < out.size()) { out[i] = ' '; if (src[i + 1] != '\n') out[i + 1] = ' '; ++i; }
        else if ((st == Str && c == '"') || (st == Chr && c == '\'')) st = Code;
        else if (c != '\n') out[i] = ' ';
        break;
    }
  }
  // Preprocessor lines (with continuations) are not code for our purposes.
  std::size_t pos = 0;
  while (pos < out.size()) {
    std::size_t eol = out.find('\n', pos);
    if (eol == std::string::npos) eol = out.size();
    std::size_t first = out.find_first_not_of(" \t", pos);
    if (first != std::string::npos && first < eol && out[first] == '#') {
      std::size_t p = pos;
      while (true) {
        std::size_t e = out.find('\n', p);
        if (e == std::string::npos) e = out.size();
        bool cont = e > p && out[e - 1] == '\\';
        for (std::size_t k = p; k < e; ++k) out[k] = ' ';
        p = e + 1;
        if (!cont || p >= out.size()) break;
      }
      pos = p;
      continue;
    }
    pos = eol + 1;
  }
  return out;
}

inline std::string word_before(const std::string& s, std::size_t pos, std::size_t* start = nullptr) {
  std::size_t i = pos;
  while (i > 0 && std::isspace(static_cast<unsigned char>(s[i - 1]))) --i;
  std::size_t end = i;
  while (i > 0 && is_ident_char(s[i - 1])) --i;
  if (start) *start = i;
  return s.substr(i, end - i);
}

inline int line_of(const std::string& s, std::size_t pos) {
  return 1 + static_cast<int>(std::count(s.begin(), s.begin() + static_cast<long>(pos), '\n'));
}

inline bool is_keyword(const std::string& w) {
  static const std::set<std::string> kw{"if", "while", "for", "switch", "return", "sizeof", "do",
                                        "else", "case", "defined", "catch", "alignof", "decltype"};
  return kw.contains(w);
}

inline bool is_source_file(const std::filesystem::path& p) {
  static const std::set<std::string> ext{".c", ".h", ".cc", ".cpp", ".cxx", ".hpp", ".hh", ".hxx"};
  return ext.contains(p.extension().string());
}

}  // namespace index_detail

class FunctionIndex {
 public:
  FunctionIndex() = default;

  /// Indexes every C/C++ source file below `root`.
  static FunctionIndex build(const std::filesystem::path& root) {
    FunctionIndex idx;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
      if (e.is_regular_file() && index_detail::is_source_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      idx.add_file(std::filesystem::relative(f, root).generic_string(), read_text(f));
    idx.link();
    return idx;
  }

  const std::vector<FunctionInfo>& functions() const noexcept { return functions_; }

  std::vector<const FunctionInfo*> find(const std::string& name) const {
    std::vector<const FunctionInfo*> out;
    for (const auto& f : functions_)
      if (f.name == name) out.push_back(&f);
    return out;
  }

  /// Case-insensitive substring match on function names.
  std::vector<const FunctionInfo*> search(const std::string& pattern) const {
    auto lower = [](std::string s) {
      for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return s;
    };
    const auto p = lower(pattern);
    std::vector<const FunctionInfo*> out;
    for (const auto& f : functions_)
      if (lower(f.name).find(p) != std::string::npos) out.push_back(&f);
    return out;
  }

  std::vector<std::string> functions_in_file(const std::string& file) const {
    std::vector<std::string> out;
    for (const auto& f : functions_)
      if (f.file == file) out.push_back(f.name);
    return out;
  }

  void add_file(const std::string& rel, const std::string& text) {
    using namespace index_detail;
    const std::string m = mask(text);
    int depth = 0;
    std::vector<bool> transparent;  // per open brace: namespace/extern blocks
    std::size_t stmt_start = 0;     // start of the current top-level statement
    for (std::size_t i = 0; i < m.size(); ++i) {
      char c = m[i];
      if (c == '{') {
        std::size_t ws = 0;
        std::string w1 = word_before(m, i, &ws);
        std::string w2 = word_before(m, ws);
        bool ns = w1 == "namespace" || w2 == "namespace" || w1 == "extern";
        if (depth == 0 && !ns) {
          std::size_t j = i;
          while (j > 0 && std::isspace(static_cast<unsigned char>(m[j - 1]))) --j;
          // Allow trailing qualifiers such as `const` or `noexcept`.
          while (j > 0 && is_ident_char(m[j - 1])) {
            std::size_t ws2 = 0;
            auto w = word_before(m, j, &ws2);
            if (w != "const" && w != "noexcept" && w != "override" && w != "final") break;
            j = ws2;
            while (j > 0 && std::isspace(static_cast<unsigned char>(m[j - 1]))) --j;
          }
          if (j > 0 && m[j - 1] == ')') {
            int par = 0;
            std::size_t k = j - 1;
            for (;; --k) {
              if (m[k] == ')') ++par;
              else if (m[k] == '(' && --par == 0) break;
              if (k == 0) break;
            }
            std::size_t name_start = 0;
            std::string name = word_before(m, k, &name_start);
            std::size_t end = close_brace(m, i);
            if (!name.empty() && !is_keyword(name) && !std::isdigit(static_cast<unsigned char>(name[0])) &&
                end != std::string::npos) {
              std::size_t s = m.find_first_not_of(" \t\r\n", stmt_start);
              if (s == std::string::npos || s > name_start) s = name_start;
              s = m.rfind('\n', s) == std::string::npos ? 0 : m.rfind('\n', s) + 1;
              FunctionInfo fi;
              fi.name = name;
              fi.file = rel;
              fi.start_line = line_of(text, s);
              fi.end_line = line_of(text, end);
              fi.source = text.substr(s, end + 1 - s);
              body_masks_.push_back(m.substr(i, end + 1 - i));
              functions_.push_back(std::move(fi));
              i = end;
              stmt_start = end + 1;
              continue;
            }
          }
        }
        transparent.push_back(ns);
        if (!ns) ++depth;
        if (ns) stmt_start = i + 1;
      } else if (c == '}') {
        if (!transparent.empty()) {
          if (!transparent.back()) --depth;
          transparent.pop_back();
        }
        if (depth == 0) stmt_start = i + 1;
      } else if (c == ';' && depth == 0) {
        collect_global(m.substr(stmt_start, i - stmt_start));
        stmt_start = i + 1;
      }
    }
  }

  /// Resolves callees and referenced globals; call after the last add_file.
  void link() {
    using namespace index_detail;
    for (auto& f : functions_) {
      f.callees.clear();
      f.globals.clear();
    }
    std::set<std::string> names;
    for (const auto& f : functions_) names.insert(f.name);
    for (std::size_t fi = 0; fi < functions_.size(); ++fi) {
      const std::string& body = body_masks_[fi];
      std::set<std::string> seen_calls, seen_globals;
      for (std::size_t i = 0; i < body.size();) {
        if (!is_ident_char(body[i]) || (i > 0 && is_ident_char(body[i - 1]))) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < body.size() && is_ident_char(body[j])) ++j;
        std::string w = body.substr(i, j - i);
        std::size_t k = j;
        while (k < body.size() && std::isspace(static_cast<unsigned char>(body[k]))) ++k;
        if (k < body.size() && body[k] == '(' && names.contains(w)) {
          if (seen_calls.insert(w).second) functions_[fi].callees.push_back(w);
        } else if (globals_.contains(w) && seen_globals.insert(w).second) {
          functions_[fi].globals.push_back(w);
        }
        i = j;
      }
    }
  }

 private:
  static std::size_t close_brace(const std::string& m, std::size_t open) {
    int d = 0;
    for (std::size_t i = open; i < m.size(); ++i) {
      if (m[i] == '{') ++d;
      else if (m[i] == '}' && --d == 0) return i;
    }
    return std::string::npos;
  }

  // Top-level `type name [= ...];` declarations (not prototypes or typedefs).
  void collect_global(const std::string& stmt) {
    using namespace index_detail;
    std::string s = stmt;
    auto eq = s.find('=');
    std::string decl = eq == std::string::npos ? s : s.substr(0, eq);
    if (decl.find('(') != std::string::npos) return;
    if (decl.find("typedef") != std::string::npos) return;
    auto br = decl.find('[');
    if (br != std::string::npos) decl = decl.substr(0, br);
    std::size_t ws = 0;
    auto name = word_before(decl, decl.size(), &ws);
    auto type = word_before(decl, ws);
    if (name.empty() || type.empty() || type == "struct" || type == "enum" || type == "union") return;
    globals_.insert(name);
  }

  std::vector<FunctionInfo> functions_;
  std::vector<std::string> body_masks_;
  std::set<std::string> globals_;
};

}  // namespace rcrepair::repair
