#pragma once

// Chat-completions adapter for OpenAI-compatible endpoints. Define
// CPPHTTPLIB_OPENSSL_SUPPORT (and link OpenSSL) before including this header
// to reach https endpoints.

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rcrepair/error.hpp"
#include "rcrepair/repair/llm.hpp"

namespace rcrepair::repair {

inline constexpr const char* kDefaultApiKeyEnv = "RCREPAIR_API_KEY";

struct HttpModelConfig {
  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = kDefaultApiKeyEnv;
  double temperature = 0.0;
  int timeout_seconds = 600;
};

inline nlohmann::json to_wire(const ChatMessage& m) {
  nlohmann::json j{{"role", m.role}};
  if (m.role == "assistant" && m.tool_call) {
    j["content"] = m.content.empty() ? nlohmann::json(nullptr) : nlohmann::json(m.content);
    j["tool_calls"] = nlohmann::json::array({{{"id", m.tool_call->id},
                                               {"type", "function"},
                                               {"function",
                                                {{"name", m.tool_call->name},
                                                 {"arguments", m.tool_call->arguments.dump()}}}}});
  } else {
    j["content"] = m.content;
  }
  if (m.role == "tool") j["tool_call_id"] = m.tool_call_id;
  return j;
}

class HttpChatModel : public LanguageModel {
 public:
  explicit HttpChatModel(HttpModelConfig config) : config_(std::move(config)) {
    if (config_.model.empty()) throw ConfigError("llm adapter needs a model name");
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key)
      throw AdapterError("repair_loop", "environment variable " + config_.api_key_env + " is not set");
    api_key_ = key;
  }

  ModelResponse complete(const ModelRequest& request) override {
    nlohmann::json body{{"model", config_.model}, {"temperature", config_.temperature}, {"messages", nlohmann::json::array()}};
    for (const auto& m : request.messages) body["messages"].push_back(to_wire(m));
    if (!request.tools.empty()) {
      body["tools"] = nlohmann::json::array();
      for (const auto& t : request.tools) body["tools"].push_back({{"type", "function"}, {"function", t}});
      body["parallel_tool_calls"] = false;
    }

    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    client.set_bearer_token_auth(api_key_);
    auto res = client.Post(config_.path, body.dump(), "application/json");
    if (!res) throw AdapterError("repair_loop", "llm request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw AdapterError("repair_loop", "llm endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                            res->body.substr(0, 500));
    return parse_response(res->body);
  }

  static ModelResponse parse_response(const std::string& text) {
    ModelResponse out;
    try {
      const auto doc = nlohmann::json::parse(text);
      const auto& msg = doc.at("choices").at(0).at("message");
      if (msg.contains("content") && msg["content"].is_string()) out.text = msg["content"].get<std::string>();
      if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
        const auto& tc = msg["tool_calls"][0];
        ToolCall call;
        call.id = tc.value("id", "");
        call.name = tc.at("function").at("name").get<std::string>();
        const auto& raw = tc.at("function").at("arguments");
        call.arguments = raw.is_string() ? nlohmann::json::parse(raw.get<std::string>()) : raw;
        out.tool_call = std::move(call);
      }
      if (doc.contains("usage")) {
        out.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
        out.completion_tokens = doc["usage"].value("completion_tokens", 0L);
      }
    } catch (const nlohmann::json::exception& e) {
      throw AdapterError("repair_loop", std::string("malformed llm response: ") + e.what());
    }
    return out;
  }

 private:
  HttpModelConfig config_;
  std::string api_key_;
};

}  // namespace rcrepair::repair
