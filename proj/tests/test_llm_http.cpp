#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#include "rcrepair/repair/llm_http.hpp"

using namespace rcrepair;
using namespace rcrepair::repair;
using nlohmann::json;

namespace {

class LocalEndpoint {
 public:
  explicit LocalEndpoint(std::string reply, int status = 200) {
    server_.Post("/v1/chat/completions", [this, reply, status](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = json::parse(req.body);
      res.status = status;
      res.set_content(reply, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  const std::string& last_auth() const { return last_auth_; }
  const json& last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_auth_;
  json last_body_;
};

const char* kToolReply = R"({
  "choices": [{"message": {"role": "assistant", "content": null,
    "tool_calls": [{"id": "call_9", "type": "function",
      "function": {"name": "view_function", "arguments": "{\"name\": \"parse_header\"}"}}]}}],
  "usage": {"prompt_tokens": 120, "completion_tokens": 14}})";

HttpModelConfig config_for(const std::string& url, const std::string& env) {
  HttpModelConfig c;
  c.base_url = url;
  c.model = "test-model";
  c.api_key_env = env;
  return c;
}

}  // namespace

TEST(HttpModel, ParsesToolCallsAndUsage) {
  const auto r = HttpChatModel::parse_response(kToolReply);
  ASSERT_TRUE(r.tool_call.has_value());
  EXPECT_EQ(r.tool_call->id, "call_9");
  EXPECT_EQ(r.tool_call->name, "view_function");
  EXPECT_EQ(r.tool_call->arguments["name"], "parse_header");
  EXPECT_EQ(r.prompt_tokens, 120);
  EXPECT_EQ(r.completion_tokens, 14);

  const auto text = HttpChatModel::parse_response(R"({"choices":[{"message":{"content":"just text"}}]})");
  EXPECT_EQ(text.text, "just text");
  EXPECT_FALSE(text.tool_call.has_value());

  EXPECT_THROW(HttpChatModel::parse_response("not json"), AdapterError);
  EXPECT_THROW(HttpChatModel::parse_response(R"({"choices":[]})"), AdapterError);
}

TEST(HttpModel, KeyComesFromEnvironmentOnly) {
  ::unsetenv("RCREPAIR_TEST_KEY_UNSET");
  EXPECT_THROW(HttpChatModel(config_for("http://127.0.0.1:1", "RCREPAIR_TEST_KEY_UNSET")), AdapterError);
  ::setenv("RCREPAIR_TEST_KEY_EMPTY", "", 1);
  EXPECT_THROW(HttpChatModel(config_for("http://127.0.0.1:1", "RCREPAIR_TEST_KEY_EMPTY")), AdapterError);
  auto nameless = config_for("http://127.0.0.1:1", "RCREPAIR_TEST_KEY_EMPTY");
  nameless.model.clear();
  EXPECT_THROW(HttpChatModel{nameless}, ConfigError);
  EXPECT_STREQ(kDefaultApiKeyEnv, "RCREPAIR_API_KEY");
}

TEST(HttpModel, RoundTripAgainstLocalServer) {
  LocalEndpoint endpoint(kToolReply);
  ::setenv("RCREPAIR_TEST_KEY", "sk-local-test", 1);
  HttpChatModel model(config_for(endpoint.url(), "RCREPAIR_TEST_KEY"));
  ModelRequest req;
  req.messages.push_back({"user", "hello", std::nullopt, ""});
  req.messages.push_back({"assistant", "", ToolCall{"c1", "get_rca_results", {{"index", 1}}}, ""});
  req.messages.push_back({"tool", "{\"status\":\"ok\"}", std::nullopt, "c1"});
  req.tools = json::array({{{"name", "get_rca_results"}, {"parameters", json::object()}}});
  const auto r = model.complete(req);
  ASSERT_TRUE(r.tool_call.has_value());
  EXPECT_EQ(r.tool_call->name, "view_function");
  EXPECT_EQ(endpoint.last_auth(), "Bearer sk-local-test");
  const auto& body = endpoint.last_body();
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"].size(), 3u);
  EXPECT_EQ(body["messages"][1]["tool_calls"][0]["function"]["arguments"], "{\"index\":1}");
  EXPECT_EQ(body["messages"][2]["tool_call_id"], "c1");
  EXPECT_EQ(body["tools"][0]["type"], "function");
}

TEST(HttpModel, HttpErrorsBecomeAdapterErrors) {
  LocalEndpoint endpoint(R"({"error":"overloaded"})", 503);
  ::setenv("RCREPAIR_TEST_KEY", "sk-local-test", 1);
  HttpChatModel model(config_for(endpoint.url(), "RCREPAIR_TEST_KEY"));
  try {
    model.complete({});
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
  }
  HttpChatModel unreachable(config_for("http://127.0.0.1:1", "RCREPAIR_TEST_KEY"));
  EXPECT_THROW(unreachable.complete({}), AdapterError);
}
