#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rcrepair/error.hpp"
#include "rcrepair/repair/unified_diff.hpp"

namespace rcrepair::repair {

namespace fs = std::filesystem;

/// Build and test infrastructure the agent must never edit. Entries ending in
/// '/' name directories; other entries match a file name anywhere in the tree
/// or an exact relative path.
class ProtectedPaths {
 public:
  ProtectedPaths() = default;
  explicit ProtectedPaths(std::vector<std::string> entries) : entries_(std::move(entries)) {}

  static ProtectedPaths defaults() {
    return ProtectedPaths({"build.sh", "afl_build.sh", "test.sh", "exp.sh", "CMakeLists.txt",
                           "Makefile", "configure", "meson.build", "CMakeCache.txt", "CMakeFiles/"});
  }

  bool matches(const fs::path& relative) const {
    const auto rel = relative.lexically_normal();
    const std::string rel_s = rel.generic_string();
    for (const auto& e : entries_) {
      if (e.empty()) continue;
      if (e.back() == '/') {
        const std::string dir = e.substr(0, e.size() - 1);
        for (const auto& part : rel.parent_path())
          if (part == dir) return true;
        if (rel_s == dir) return true;
      } else if (rel.filename() == e || rel_s == e) {
        return true;
      }
    }
    return false;
  }

  const std::vector<std::string>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::string> entries_;
};

enum class EditStatus { Applied, NoMatch, Ambiguous };

inline std::string_view to_string(EditStatus s) {
  switch (s) {
    case EditStatus::Applied: return "applied";
    case EditStatus::NoMatch: return "no_match";
    case EditStatus::Ambiguous: return "ambiguous";
  }
  return "no_match";
}

struct EditRecord {
  std::string path;
  std::string old_text;
  std::string new_text;
};

struct EditResult {
  EditStatus status = EditStatus::NoMatch;
  std::size_t occurrences = 0;
};

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("repair_loop", "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("repair_loop", "cannot write '" + p.string() + "'");
  out << content;
}

/// A private copy of a project with an in-memory baseline of every regular
/// file. Edits are exact single-occurrence substitutions; revert restores the
/// baseline byte for byte. Single writer: one agent run owns one copy.
class WorkingCopy {
 public:
  /// Copies `project` into `root`, which must be absent or empty.
  static WorkingCopy create(const fs::path& project, const fs::path& root,
                            ProtectedPaths protected_paths = ProtectedPaths::defaults()) {
    if (!fs::is_directory(project))
      throw Error("repair_loop", "project directory '" + project.string() + "' not found");
    if (fs::exists(root) && !fs::is_empty(root))
      throw Error("repair_loop", "working copy root '" + root.string() + "' is not empty");
    fs::create_directories(root);
    fs::copy(project, root, fs::copy_options::recursive | fs::copy_options::copy_symlinks);
    return WorkingCopy(root, std::move(protected_paths));
  }

  /// Adopts an existing directory; its current contents become the baseline.
  WorkingCopy(const fs::path& root, ProtectedPaths protected_paths)
      : root_(fs::canonical(root)), protected_(std::move(protected_paths)) {
    for (const auto& e : fs::recursive_directory_iterator(root_)) {
      if (!e.is_regular_file() || e.is_symlink()) continue;
      baseline_[fs::relative(e.path(), root_).generic_string()] = read_text(e.path());
    }
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
      }
      h ^= 0xff;
      h *= 1099511628211ull;
    };
    for (const auto& [p, content] : baseline_) {
      mix(p);
      mix(content);
    }
    std::ostringstream id;
    id << std::hex << h;
    baseline_id_ = id.str();
  }

  const fs::path& root() const noexcept { return root_; }
  const std::string& baseline_id() const noexcept { return baseline_id_; }
  const std::vector<EditRecord>& edits() const noexcept { return edits_; }
  const ProtectedPaths& protected_paths() const noexcept { return protected_; }

  std::vector<std::string> tracked_files() const {
    std::vector<std::string> out;
    for (const auto& [p, c] : baseline_) out.push_back(p);
    return out;
  }

  /// Resolves a path given relative to the root (or absolute inside it) and
  /// returns its normalised relative form. Throws PathEscapeError otherwise.
  std::string relative(const std::string& path) const {
    fs::path p(path);
    fs::path abs = p.is_absolute() ? p.lexically_normal() : (root_ / p).lexically_normal();
    auto rel = abs.lexically_relative(root_);
    if (rel.empty() || *rel.begin() == "..") throw PathEscapeError(path);
    if (fs::exists(abs)) {
      auto canon = fs::canonical(abs);
      auto crel = canon.lexically_relative(root_);
      if (crel.empty() || *crel.begin() == "..") throw PathEscapeError(path);
    }
    auto s = rel.generic_string();
    if (s == ".") throw PathEscapeError(path);
    return s;
  }

  std::string read(const std::string& path) const { return read_text(root_ / relative(path)); }

  /// Replaces the single occurrence of `old_text` with `new_text`. NoMatch and
  /// Ambiguous leave the file untouched.
  EditResult edit(const std::string& path, const std::string& old_text, const std::string& new_text) {
    const auto rel = relative(path);
    if (protected_.matches(rel)) throw ProtectedFileError(rel);
    const auto abs = root_ / rel;
    if (!fs::is_regular_file(abs)) return {EditStatus::NoMatch, 0};
    auto content = read_text(abs);
    if (old_text.empty()) return {EditStatus::NoMatch, 0};
    std::size_t count = 0;
    for (auto pos = content.find(old_text); pos != std::string::npos;
         pos = content.find(old_text, pos + 1))
      ++count;
    if (count == 0) return {EditStatus::NoMatch, 0};
    if (count > 1) return {EditStatus::Ambiguous, count};
    content.replace(content.find(old_text), old_text.size(), new_text);
    write_text(abs, content);
    edits_.push_back({rel, old_text, new_text});
    return {EditStatus::Applied, 1};
  }

  /// Restores every baseline file and removes files created since.
  void revert() {
    for (const auto& [p, content] : baseline_) {
      const auto abs = root_ / p;
      if (!fs::exists(abs) || read_text(abs) != content) {
        fs::create_directories(abs.parent_path());
        write_text(abs, content);
      }
    }
    std::vector<fs::path> extra;
    for (const auto& e : fs::recursive_directory_iterator(root_))
      if (e.is_regular_file() && !baseline_.contains(fs::relative(e.path(), root_).generic_string()))
        extra.push_back(e.path());
    for (const auto& p : extra) fs::remove(p);
    edits_.clear();
  }

  /// Unified diff of the tracked files against the baseline, sorted by path.
  std::string diff() const {
    std::string out;
    for (const auto& [p, content] : baseline_) {
      const auto abs = root_ / p;
      const std::string now = fs::exists(abs) ? read_text(abs) : std::string{};
      out += make_unified_diff(p, content, now);
    }
    return out;
  }

  /// Materialises the baseline into `dest` (absent or empty).
  void export_baseline(const fs::path& dest) const {
    if (fs::exists(dest) && !fs::is_empty(dest))
      throw Error("repair_loop", "export target '" + dest.string() + "' is not empty");
    for (const auto& [p, content] : baseline_) {
      fs::create_directories((dest / p).parent_path());
      write_text(dest / p, content);
    }
  }

 private:
  fs::path root_;
  ProtectedPaths protected_;
  std::map<std::string, std::string> baseline_;
  std::string baseline_id_;
  std::vector<EditRecord> edits_;
};

}  // namespace rcrepair::repair
