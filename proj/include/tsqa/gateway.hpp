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

#ifndef TSQA_GATEWAY_HPP_
#define TSQA_GATEWAY_HPP_

// Chat-completion client. The wire shape is the common
// `POST {base_url}/v1/chat/completions` JSON body; a scripted mock stands in
// for tests and offline runs.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace tsqa {

struct GatewayConfig {
  std::string mode = "mock";  // "mock" or "live"
  std::string base_url;
  std::string model;
  std::string api_key_env = "TSQA_API_KEY";
  int timeout_ms = 30000;
  int retries = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static GatewayConfig from_json(const nlohmann::json& j);
};

enum class ChatRole { System, User, Assistant };
std::string_view role_name(ChatRole r);

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;
};

// Keys are emitted sorted, so identical input gives identical bytes.
std::string request_body(std::string_view model, const std::vector<ChatMessage>& messages, double temperature,
                         int max_tokens);

struct HttpRequest {
  std::string base_url;
  std::string path;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  int timeout_ms = 30000;
};

// status 0 means no response (timeout or connection failure).
struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib client; https URLs go through OpenSSL.
class HttplibTransport : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages, double temperature, int max_tokens) = 0;
};

class LiveChatClient : public ChatClient {
 public:
  LiveChatClient(GatewayConfig config, std::shared_ptr<Transport> transport);
  std::string complete(const std::vector<ChatMessage>& messages, double temperature, int max_tokens) override;

 private:
  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
};

// Ordered (regex, response) pairs; the first regex found in the joined
// message contents wins.
struct MockScript {
  std::vector<std::pair<std::string, std::string>> entries;

  static MockScript from_json(const nlohmann::json& j);  // [{"pattern": ..., "response": ...}, ...]
};

inline constexpr std::string_view kUnscripted = "UNSCRIPTED";

std::string mock_complete(const MockScript& script, const std::vector<ChatMessage>& messages);

// Scripted responses when a script is set, otherwise a canned response picked
// by a hash of the message contents.
class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(MockScript script, std::vector<std::string> canned = {});
  std::string complete(const std::vector<ChatMessage>& messages, double temperature, int max_tokens) override;
  std::size_t calls() const { return calls_; }

 private:
  MockScript script_;
  std::vector<std::string> canned_;
  std::atomic<std::size_t> calls_{0};
};

std::uint64_t fnv1a(std::string_view s);

// Live client over HttplibTransport, or a mock from `script`.
std::unique_ptr<ChatClient> make_chat_client(const GatewayConfig& config, MockScript script = {});

}  // namespace tsqa

#endif  // TSQA_GATEWAY_HPP_
