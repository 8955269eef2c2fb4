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

#ifndef TSQA_SERVICE_HPP_
#define TSQA_SERVICE_HPP_

// HTTP JSON API over a Pipeline. Handlers are plain functions from a request
// to (status, JSON) so they can be exercised without a socket.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsqa/assembler.hpp"
#include "tsqa/gateway.hpp"
#include "tsqa/pipeline.hpp"
#include "tsqa/timeline.hpp"

namespace httplib {
class Server;
}

namespace tsqa {

// Keys mirror docs/api.md. Relative paths resolve against the config file.
struct ServiceConfig {
  std::string mode = "model";  // "model" or "oracle"
  std::string params_path;
  std::string store_path;
  std::string similarity_path;
  std::string timeline_path;  // oracle mode
  std::string schema_path;    // oracle mode
  std::string synonyms_path;  // empty: built-in table
  std::string templates_dir;  // empty: built-in templates
  PipelineConfig pipeline;
  bool use_gateway = false;
  GatewayConfig gateway;
  std::string mock_script_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::int64_t> now;  // default clock override

  nlohmann::json to_json() const;
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
};

ServiceConfig load_service_config(const std::filesystem::path& path);

// Loads the pipeline the config describes (and its chat client).
std::shared_ptr<Pipeline> load_pipeline(const ServiceConfig& config, ModalitySchema* schema = nullptr);

struct ChatTurn {
  std::string question;
  AnswerBundle answer;
  double latency_ms = 0;
};

struct ChatSession {
  std::string session_id;
  std::string user_id;
  std::optional<std::int64_t> now_override;
  std::vector<ChatTurn> history;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  // Loads data from the config; a missing store leaves the service up but
  // chat and timeline answer 409.
  explicit Service(ServiceConfig config);
  Service(std::shared_ptr<Pipeline> pipeline, ModalitySchema schema, ServiceConfig config = {});

  ApiResponse chat(const std::string& body);
  ApiResponse timeline(const std::map<std::string, std::string>& params) const;
  ApiResponse ingest(const std::string& body) const;
  ApiResponse eval(const std::string& body) const;
  ApiResponse labels() const;
  ApiResponse health() const;

  std::optional<ChatSession> session(const std::string& id) const;

  void mount(httplib::Server& server);
  // Blocks until the server stops.
  void serve(const std::string& host, int port);

  bool loaded() const { return pipeline_ != nullptr; }
  const std::string& load_error() const { return load_error_; }

 private:
  std::int64_t clock_now() const;

  ServiceConfig config_;
  std::shared_ptr<Pipeline> pipeline_;
  ModalitySchema schema_;
  std::string load_error_;
  mutable std::mutex mutex_;
  std::map<std::string, ChatSession> sessions_;
  std::uint64_t next_session_ = 1;
};

}  // namespace tsqa

#endif  // TSQA_SERVICE_HPP_
