// Copyright 2026 The tsqa Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tsqa/gateway.hpp"

#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "tsqa/error.hpp"

namespace tsqa {

void GatewayConfig::validate() const {
  if (mode != "mock" && mode != "live") throw Error(ErrorCode::kConfiguration, "gateway mode must be mock or live");
  if (mode == "live" && base_url.empty()) throw Error(ErrorCode::kConfiguration, "live gateway needs base_url");
  if (timeout_ms <= 0) throw Error(ErrorCode::kConfiguration, "gateway timeout_ms must be positive");
  if (retries < 0) throw Error(ErrorCode::kConfiguration, "gateway retries must be non-negative");
}

nlohmann::json GatewayConfig::to_json() const {
  return {{"mode", mode},         {"base_url", base_url},     {"model", model},
          {"api_key_env", api_key_env}, {"timeout_ms", timeout_ms}, {"retries", retries}};
}

GatewayConfig GatewayConfig::from_json(const nlohmann::json& j) {
  GatewayConfig c;
  try {
    c.mode = j.value("mode", c.mode);
    c.base_url = j.value("base_url", c.base_url);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.retries = j.value("retries", c.retries);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("bad gateway config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view role_name(ChatRole r) {
  switch (r) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
  }
  return "user";
}

std::string request_body(std::string_view model, const std::vector<ChatMessage>& messages, double temperature,
                         int max_tokens) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const ChatMessage& m : messages) {
    if (m.content.empty()) throw Error(ErrorCode::kPrecondition, "chat message content is empty");
    msgs.push_back({{"content", m.content}, {"role", role_name(m.role)}});
  }
  // nlohmann::json objects keep keys sorted
  return nlohmann::json{{"model", model}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_tokens}}
      .dump();
}

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  httplib::Client cli(request.base_url);
  const auto sec = request.timeout_ms / 1000;
  const auto usec = (request.timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  auto res = cli.Post(request.path, headers, request.body, "application/json");
  if (!res) return {0, "", httplib::to_string(res.error())};
  return {res->status, res->body, ""};
}

LiveChatClient::LiveChatClient(GatewayConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.mode != "live") config_.mode = "live";
  config_.validate();
  if (!transport_) throw Error(ErrorCode::kConfiguration, "live gateway needs a transport");
}

std::string LiveChatClient::complete(const std::vector<ChatMessage>& messages, double temperature, int max_tokens) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kConfiguration, "environment variable " + config_.api_key_env + " is not set");
  }
  HttpRequest req;
  req.base_url = config_.base_url;
  while (!req.base_url.empty() && req.base_url.back() == '/') req.base_url.pop_back();
  req.path = "/v1/chat/completions";
  req.headers = {{"Authorization", std::string("Bearer ") + key}};
  req.body = request_body(config_.model, messages, temperature, max_tokens);
  req.timeout_ms = config_.timeout_ms;

  HttpResponse res;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    res = transport_->post(req);
    const bool retryable = res.status == 0 || res.status >= 500;
    if (!retryable) break;
  }
  if (res.status < 200 || res.status >= 300) {
    throw Error(ErrorCode::kTransport, res.status == 0 ? "gateway unreachable: " + res.error
                                                       : "gateway returned HTTP " + std::to_string(res.status));
  }
  try {
    const nlohmann::json j = nlohmann::json::parse(res.body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed completion response: ") + e.what());
  }
}

MockScript MockScript::from_json(const nlohmann::json& j) {
  MockScript s;
  try {
    for (const auto& e : j) s.entries.emplace_back(e.at("pattern").get<std::string>(), e.at("response").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("bad mock script: ") + e.what());
  }
  return s;
}

std::string mock_complete(const MockScript& script, const std::vector<ChatMessage>& messages) {
  std::string joined;
  for (const ChatMessage& m : messages) {
    if (!joined.empty()) joined += '\n';
    joined += m.content;
  }
  for (const auto& [pattern, response] : script.entries) {
    try {
      if (std::regex_search(joined, std::regex(pattern))) return response;
    } catch (const std::regex_error&) {
      throw Error(ErrorCode::kConfiguration, "bad mock pattern '" + pattern + "'");
    }
  }
  return std::string(kUnscripted);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

MockChatClient::MockChatClient(MockScript script, std::vector<std::string> canned)
    : script_(std::move(script)), canned_(std::move(canned)) {}

std::string MockChatClient::complete(const std::vector<ChatMessage>& messages, double, int) {
  ++calls_;
  if (!script_.entries.empty() || canned_.empty()) return mock_complete(script_, messages);
  std::string joined;
  for (const ChatMessage& m : messages) joined += m.content;
  return canned_[fnv1a(joined) % canned_.size()];
}

std::unique_ptr<ChatClient> make_chat_client(const GatewayConfig& config, MockScript script) {
  config.validate();
  if (config.mode == "live") return std::make_unique<LiveChatClient>(config, std::make_shared<HttplibTransport>());
  return std::make_unique<MockChatClient>(std::move(script));
}

}  // namespace tsqa
