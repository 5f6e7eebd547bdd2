#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcrepair {

// Every library error derives from Error so callers (the CLI in particular)
// can prefix messages with the module that raised them.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t last_good_offset)
      : Error("report_model", what + " (last parsed line at byte " +
                                  std::to_string(last_good_offset) + ")"),
        offset_(last_good_offset) {}

  /// Byte offset of the start of the last line that was recognised.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class SchemaError : public Error {
 public:
  /// record_index is -1 when the problem is with the document envelope.
  SchemaError(std::string module, const std::string& what, long record_index = -1)
      : Error(std::move(module),
              record_index >= 0 ? what + " (record " + std::to_string(record_index) + ")" : what),
        index_(record_index) {}

  long record_index() const noexcept { return index_; }

 private:
  long index_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("evidence_ranking", what) {}
  DomainError(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

class EmptyAnchorSet : public Error {
 public:
  EmptyAnchorSet() : Error("callgraph", "no anchor resolves to a call-graph node") {}
};

class EmptyFamily : public Error {
 public:
  EmptyFamily() : Error("dynamic_traces", "trace family is empty") {}
};

class AdapterError : public Error {
 public:
  AdapterError(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& what) : Error("repair_loop", what) {}
};

class ProtectedFileError : public Error {
 public:
  explicit ProtectedFileError(const std::string& path)
      : Error("repair_loop", "refusing to edit protected file '" + path + "'"), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class PathEscapeError : public Error {
 public:
  explicit PathEscapeError(const std::string& path)
      : Error("repair_loop", "path '" + path + "' escapes the working copy") {}
};

class OracleTimeout : public Error {
 public:
  OracleTimeout(const std::string& stage, long limit_ms)
      : Error("repair_loop", "oracle stage '" + stage + "' exceeded " +
                                 std::to_string(limit_ms) + " ms"),
        stage_(stage) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error("patch_assessment", what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error("patch_assessment", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("cli", what) {}
};

}  // namespace rcrepair
