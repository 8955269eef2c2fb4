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
#include <deque>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "tsqa/error.hpp"

namespace tsqa {
namespace {

// Replays fixed responses and records what was sent.
class FakeTransport : public Transport {
 public:
  explicit FakeTransport(std::deque<HttpResponse> replies) : replies_(std::move(replies)) {}
  HttpResponse post(const HttpRequest& request) override {
    requests.push_back(request);
    HttpResponse r = replies_.front();
    if (replies_.size() > 1) replies_.pop_front();
    return r;
  }
  std::vector<HttpRequest> requests;

 private:
  std::deque<HttpResponse> replies_;
};

const std::string kOk = R"({"choices":[{"message":{"role":"assistant","content":"hello there"}}]})";

GatewayConfig live_config() {
  GatewayConfig c;
  c.mode = "live";
  c.base_url = "http://example.invalid/";
  c.model = "m";
  c.api_key_env = "TSQA_TEST_KEY";
  return c;
}

std::vector<ChatMessage> one(std::string text) { return {{ChatRole::User, std::move(text)}}; }

TEST_CASE("request body is sorted and byte stable") {
  const std::vector<ChatMessage> m = {{ChatRole::System, "be brief"}, {ChatRole::User, "hi"}};
  const std::string a = request_body("gpt", m, 0.2, 1024);
  CHECK(a == request_body("gpt", m, 0.2, 1024));
  CHECK(a == R"({"max_tokens":1024,"messages":[{"content":"be brief","role":"system"},{"content":"hi","role":"user"}],"model":"gpt","temperature":0.2})");
  CHECK_THROWS_AS(request_body("gpt", one(""), 0.2, 10), Error);
}

TEST_CASE("live client retries once on 5xx") {
  setenv("TSQA_TEST_KEY", "secret", 1);
  auto t = std::make_shared<FakeTransport>(std::deque<HttpResponse>{{500, "", ""}, {200, kOk, ""}});
  LiveChatClient c(live_config(), t);
  CHECK(c.complete(one("q"), 0.7, 5) == "hello there");
  REQUIRE(t->requests.size() == 2);
  CHECK(t->requests[0].base_url == "http://example.invalid");
  CHECK(t->requests[0].path == "/v1/chat/completions");
  CHECK(t->requests[0].headers.at(0).second == "Bearer secret");
  CHECK(nlohmann::json::parse(t->requests[0].body)["temperature"] == 0.7);
}

TEST_CASE("live client error mapping") {
  setenv("TSQA_TEST_KEY", "secret", 1);
  auto code = [](std::deque<HttpResponse> replies, std::size_t* sent = nullptr) {
    auto t = std::make_shared<FakeTransport>(std::move(replies));
    LiveChatClient c(live_config(), t);
    ErrorCode out = ErrorCode::kIo;
    try {
      c.complete(one("q"), 0.2, 5);
    } catch (const Error& e) {
      out = e.code();
    }
    if (sent) *sent = t->requests.size();
    return out;
  };
  std::size_t sent = 0;
  CHECK(code({{503, "", ""}}, &sent) == ErrorCode::kTransport);
  CHECK(sent == 2);
  CHECK(code({{0, "", "timeout"}}, &sent) == ErrorCode::kTransport);
  CHECK(sent == 2);
  CHECK(code({{404, "", ""}}, &sent) == ErrorCode::kTransport);
  CHECK(sent == 1);
  CHECK(code({{200, "not json", ""}}) == ErrorCode::kProtocol);
  CHECK(code({{200, R"({"choices":[]})", ""}}) == ErrorCode::kProtocol);
}

TEST_CASE("missing key fails before any network call") {
  unsetenv("TSQA_TEST_KEY");
  auto t = std::make_shared<FakeTransport>(std::deque<HttpResponse>{{200, kOk, ""}});
  LiveChatClient c(live_config(), t);
  CHECK_THROWS_AS(c.complete(one("q"), 0.2, 5), Error);
  CHECK(t->requests.empty());
}

TEST_CASE("config validation") {
  GatewayConfig c;
  CHECK_NOTHROW(c.validate());
  c.mode = "live";
  CHECK_THROWS_AS(c.validate(), Error);
  c.mode = "other";
  CHECK_THROWS_AS(c.validate(), Error);
  const auto back = GatewayConfig::from_json(live_config().to_json());
  CHECK(back.base_url == "http://example.invalid/");
  CHECK(back.retries == 1);
}

TEST_CASE("mock script matches in declaration order") {
  MockScript s = MockScript::from_json(nlohmann::json::parse(
      R"([{"pattern": "cook", "response": "first"}, {"pattern": "coo", "response": "second"}])"));
  CHECK(mock_complete(s, one("did I cook")) == "first");
  CHECK(mock_complete(s, one("cool")) == "second");
  CHECK(mock_complete(s, one("walk")) == kUnscripted);
  MockChatClient m(s);
  m.complete(one("x"), 0.2, 1);
  m.complete(one("cook"), 0.2, 1);
  CHECK(m.calls() == 2);
}

TEST_CASE("canned mock is deterministic per prompt") {
  MockChatClient m({}, {"a", "b", "c", "d", "e"});
  for (int i = 0; i < 20; ++i) {
    const std::string p = "prompt " + std::to_string(i);
    CHECK(m.complete(one(p), 0.2, 1) == m.complete(one(p), 0.9, 1));
  }
}

TEST_CASE("httplib transport talks to a local server") {
  httplib::Server server;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply = {{"choices", {{{"message", {{"content", "echo " + body["messages"][0]["content"].get<std::string>()}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("TSQA_TEST_KEY", "k2", 1);
  GatewayConfig c = live_config();
  c.base_url = "http://127.0.0.1:" + std::to_string(port);
  c.timeout_ms = 5000;
  auto client = make_chat_client(c);
  CHECK(client->complete(one("ping"), 0.2, 8) == "echo ping");
  CHECK(auth == "Bearer k2");

  c.base_url = "http://127.0.0.1:1";
  c.retries = 0;
  CHECK_THROWS_AS(make_chat_client(c)->complete(one("ping"), 0.2, 8), Error);
  server.stop();
  th.join();
}

}  // namespace
}  // namespace tsqa
