#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"

namespace rcrepair::repair {

struct ToolCall {
  std::string id;
  std::string name;
  nlohmann::json arguments = nlohmann::json::object();
};

struct ChatMessage {
  std::string role;  // system | user | assistant | tool
  std::string content;
  std::optional<ToolCall> tool_call;  // assistant turns
  std::string tool_call_id;           // tool results
};

struct ModelRequest {
  std::vector<ChatMessage> messages;
  nlohmann::json tools = nlohmann::json::array();
};

struct ModelResponse {
  std::string text;
  std::optional<ToolCall> tool_call;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual ModelResponse complete(const ModelRequest& request) = 0;
};

/// Replays a recorded decision list:
///   {"decisions": [{"tool": "edit_file", "args": {...}}, {"text": "..."}]}
/// After the list runs out it answers with empty text.
class ScriptedModel : public LanguageModel {
 public:
  explicit ScriptedModel(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("decisions") || !doc["decisions"].is_array())
      throw SchemaError("repair_loop", "mock decisions need a 'decisions' array");
    long i = 0;
    for (const auto& d : doc["decisions"]) {
      if (d.contains("tool")) {
        if (!d["tool"].is_string()) throw SchemaError("repair_loop", "'tool' must be a string", i);
        decisions_.push_back({"", ToolCall{"call_" + std::to_string(i), d["tool"].get<std::string>(),
                                           d.value("args", nlohmann::json::object())}});
      } else if (d.contains("text")) {
        decisions_.push_back({d["text"].get<std::string>(), std::nullopt});
      } else {
        throw SchemaError("repair_loop", "decision needs 'tool' or 'text'", i);
      }
      ++i;
    }
  }

  static ScriptedModel from_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw AdapterError("repair_loop", "cannot open mock decisions '" + p.string() + "'");
    try {
      return ScriptedModel(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("repair_loop", std::string("mock decisions: ") + e.what());
    }
  }

  ModelResponse complete(const ModelRequest&) override {
    if (next_ >= decisions_.size()) return {};
    const auto& d = decisions_[next_++];
    return {d.text, d.call, 0, 0};
  }

  std::size_t consumed() const noexcept { return next_; }

 private:
  struct Decision {
    std::string text;
    std::optional<ToolCall> call;
  };
  std::vector<Decision> decisions_;
  std::size_t next_ = 0;
};

}  // namespace rcrepair::repair
