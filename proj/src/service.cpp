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

#include "tsqa/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/store.hpp"
#include "tsqa/text.hpp"

namespace tsqa {
namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDecomposition:
    case ErrorCode::kParse:
    case ErrorCode::kOutOfVocabulary:
    case ErrorCode::kScope:
    case ErrorCode::kAssembly:
      return 422;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConfiguration: return 409;
    case ErrorCode::kTransport:
    case ErrorCode::kProtocol:
      return 502;
    case ErrorCode::kIo:
    case ErrorCode::kTrainingData:
      return 500;
    default: return 400;
  }
}

ApiResponse fail(int status, const std::string& message) { return {status, {{"error", message}}}; }

ApiResponse fail(const Error& e) {
  return {status_for(e.code()), {{"error", e.what()}, {"code", std::string(error_code_name(e.code()))}}};
}

nlohmann::json parse_body(const std::string& body) {
  try {
    nlohmann::json j = nlohmann::json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) throw Error(ErrorCode::kFormat, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("request body is not JSON: ") + e.what());
  }
}

// Unix seconds, as a number, a digit string or "YYYY-MM-DD[ HH:MM[:SS]]".
std::int64_t parse_time(const nlohmann::json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const std::size_t digits_from = !s.empty() && s[0] == '-' ? 1 : 0;
    if (s.size() > digits_from && s.find_first_not_of("0123456789", digits_from) == std::string::npos) {
      try {
        return std::stoll(s);
      } catch (const std::exception&) {
      }
    }
    if (auto t = parse_datetime(s)) return *t;
  }
  throw Error(ErrorCode::kFormat, "field '" + field + "' is not a time");
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).string();
}

}  // namespace

nlohmann::json ServiceConfig::to_json() const {
  nlohmann::json j = {{"mode", mode},
                      {"params", params_path},
                      {"store", store_path},
                      {"similarity", similarity_path},
                      {"timeline", timeline_path},
                      {"schema", schema_path},
                      {"synonyms", synonyms_path},
                      {"templates", templates_dir},
                      {"pipeline", pipeline.to_json()},
                      {"use_gateway", use_gateway},
                      {"gateway", gateway.to_json()},
                      {"mock_script", mock_script_path},
                      {"host", host},
                      {"port", port}};
  if (now) j["now"] = *now;
  return j;
}

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  ServiceConfig c;
  try {
    c.mode = j.value("mode", c.mode);
    c.params_path = resolve(j.value("params", ""), base);
    c.store_path = resolve(j.value("store", ""), base);
    c.similarity_path = resolve(j.value("similarity", ""), base);
    c.timeline_path = resolve(j.value("timeline", ""), base);
    c.schema_path = resolve(j.value("schema", ""), base);
    c.synonyms_path = resolve(j.value("synonyms", ""), base);
    c.templates_dir = resolve(j.value("templates", ""), base);
    if (j.contains("pipeline")) c.pipeline = PipelineConfig::from_json(j.at("pipeline"));
    c.use_gateway = j.value("use_gateway", c.use_gateway);
    if (j.contains("gateway")) c.gateway = GatewayConfig::from_json(j.at("gateway"));
    c.mock_script_path = resolve(j.value("mock_script", ""), base);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("now") && !j.at("now").is_null()) c.now = parse_time(j.at("now"), "now");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("bad service config: ") + e.what());
  }
  if (c.mode != "model" && c.mode != "oracle") throw Error(ErrorCode::kConfiguration, "mode must be model or oracle");
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfiguration, path.string() + ": " + e.what());
  }
  return ServiceConfig::from_json(j, path.parent_path());
}

std::shared_ptr<Pipeline> load_pipeline(const ServiceConfig& config, ModalitySchema* schema) {
  const SynonymTable synonyms = config.synonyms_path.empty() ? default_synonyms() : load_synonyms(config.synonyms_path);
  TemplateLibrary templates = config.templates_dir.empty() ? default_templates() : load_templates(config.templates_dir);
  std::shared_ptr<Pipeline> p;
  if (config.mode == "oracle") {
    if (config.timeline_path.empty() || config.schema_path.empty()) {
      throw Error(ErrorCode::kNotFound, "oracle mode needs timeline and schema paths");
    }
    const ModalitySchema s = load_schema(config.schema_path);
    Timeline t = impute_missing(load_csv(config.timeline_path, s));
    LabelVocabulary vocab = build_vocabulary(t);
    if (schema) *schema = s;
    p = Pipeline::from_oracle(std::move(t), std::move(vocab), config.pipeline, synonyms, std::move(templates));
  } else {
    if (config.params_path.empty() || config.store_path.empty() || config.similarity_path.empty()) {
      throw Error(ErrorCode::kNotFound, "model mode needs params, store and similarity paths");
    }
    if (!std::filesystem::exists(config.store_path)) {
      throw Error(ErrorCode::kNotFound, "store file " + config.store_path + " does not exist");
    }
    Parameters params = load_parameters(config.params_path);
    if (schema) *schema = params.schema;
    p = Pipeline::from_model(std::move(params), load_store(config.store_path), load_similarity(config.similarity_path),
                             config.pipeline, synonyms, std::move(templates));
  }
  if (config.use_gateway) {
    MockScript script;
    if (!config.mock_script_path.empty()) {
      std::ifstream in(config.mock_script_path);
      if (!in) throw Error(ErrorCode::kIo, "cannot open " + config.mock_script_path);
      script = MockScript::from_json(nlohmann::json::parse(in));
    }
    p->set_client(make_chat_client(config.gateway, std::move(script)));
  }
  return p;
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  try {
    pipeline_ = load_pipeline(config_, &schema_);
  } catch (const Error& e) {
    load_error_ = e.what();
  }
}

Service::Service(std::shared_ptr<Pipeline> pipeline, ModalitySchema schema, ServiceConfig config)
    : config_(std::move(config)), pipeline_(std::move(pipeline)), schema_(std::move(schema)) {}

std::int64_t Service::clock_now() const {
  if (config_.now) return *config_.now;
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

ApiResponse Service::chat(const std::string& body) {
  if (!pipeline_) return fail(409, "no store is loaded: " + load_error_);
  try {
    const nlohmann::json req = parse_body(body);
    if (!req.contains("question") || !req.at("question").is_string() ||
        text::trim(req.at("question").get<std::string>()).empty()) {
      return fail(400, "field 'question' is required");
    }
    const std::string question = req.at("question");
    std::optional<std::int64_t> now;
    if (req.contains("now") && !req.at("now").is_null()) now = parse_time(req.at("now"), "now");

    std::string session_id;
    std::string user;
    std::int64_t at = 0;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      session_id = req.value("session_id", "");
      if (session_id.empty()) session_id = "s" + std::to_string(next_session_++);
      auto [it, created] = sessions_.try_emplace(session_id);
      ChatSession& s = it->second;
      if (created) {
        s.session_id = session_id;
        const auto users = pipeline_->users();
        s.user_id = users.empty() ? "" : users.front();
      }
      if (req.contains("user_id") && req.at("user_id").is_string()) s.user_id = req.at("user_id");
      if (now) s.now_override = now;
      user = s.user_id;
      at = s.now_override.value_or(clock_now());
    }
    const ChatTrace trace = pipeline_->answer(question, user.empty() ? std::nullopt : std::optional(user), at);
    nlohmann::json out = trace.to_json();
    out["session_id"] = session_id;
    out["user_id"] = user;
    out["now"] = at;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      sessions_[session_id].history.push_back({question, trace.answer, trace.latency_ms});
      out["turn"] = sessions_[session_id].history.size();
    }
    return {200, out};
  } catch (const Error& e) {
    return fail(e);
  }
}

ApiResponse Service::timeline(const std::map<std::string, std::string>& params) const {
  if (!pipeline_) return fail(409, "no store is loaded: " + load_error_);
  try {
    auto get = [&](const std::string& k) -> std::optional<std::string> {
      auto it = params.find(k);
      if (it == params.end() || it->second.empty()) return std::nullopt;
      return it->second;
    };
    const auto from_s = get("from");
    const auto to_s = get("to");
    if (!from_s || !to_s) return fail(400, "parameters 'from' and 'to' are required");
    const std::int64_t from = parse_time(*from_s, "from");
    const std::int64_t to = parse_time(*to_s, "to");
    int k = 3;
    if (auto ks = get("k")) {
      try {
        k = std::stoi(*ks);
      } catch (const std::exception&) {
        return fail(400, "parameter 'k' is not an integer");
      }
    }
    std::optional<std::string> user = get("user_id");
    if (!user) {
      const auto users = pipeline_->users();
      if (!users.empty()) user = users.front();
    }
    if (user && !pipeline_->index().block(*user)) return fail(404, "unknown user '" + *user + "'");
    nlohmann::json entries = nlohmann::json::array();
    for (const TimelineEntry& e : pipeline_->timeline(user, from, to, k)) {
      nlohmann::json labels = nlohmann::json::array();
      for (const LabelScore& l : e.labels) labels.push_back({{"label", l.label}, {"score", l.score}});
      entries.push_back({{"timestamp", e.timestamp}, {"date", format_date(e.timestamp)},
                         {"time", format_clock(e.timestamp)}, {"labels", labels}});
    }
    return {200, {{"user_id", user.value_or("")}, {"from", from}, {"to", to}, {"k", k}, {"entries", entries}}};
  } catch (const Error& e) {
    return fail(e);
  }
}

ApiResponse Service::ingest(const std::string& body) const {
  if (schema_.size() == 0) return fail(409, "no sensor schema is loaded: " + load_error_);
  try {
    std::string csv = body;
    if (!text::trim(body).empty() && text::trim(body).front() == '{') {
      const nlohmann::json req = parse_body(body);
      if (!req.contains("csv") || !req.at("csv").is_string()) return fail(400, "field 'csv' is required");
      csv = req.at("csv");
    }
    std::istringstream in(csv);
    Timeline t = parse_csv(in, schema_);
    std::size_t missing = 0;
    for (const SensorWindow& w : t.windows) missing += static_cast<std::size_t>(std::count(w.missing.begin(), w.missing.end(), true));
    t = impute_missing(std::move(t));
    nlohmann::json out = {{"windows", t.size()},
                          {"users", t.users()},
                          {"labels", build_vocabulary(t).phrases()},
                          {"missing_modalities", missing},
                          {"stored", false}};
    if (!t.empty()) {
      std::int64_t lo = t.windows.front().timestamp, hi = lo;
      for (const SensorWindow& w : t.windows) {
        lo = std::min(lo, w.timestamp);
        hi = std::max(hi, w.timestamp);
      }
      out["from"] = lo;
      out["to"] = hi;
    }
    return {200, out};
  } catch (const Error& e) {
    return fail(e);
  }
}

ApiResponse Service::eval(const std::string& body) const {
  if (!pipeline_) return fail(409, "no store is loaded: " + load_error_);
  try {
    const nlohmann::json req = parse_body(body);
    std::vector<QaRecord> records;
    if (req.contains("records")) {
      for (const auto& r : req.at("records")) records.push_back(QaRecord::from_json(r));
    } else if (req.contains("jsonl") && req.at("jsonl").is_string()) {
      std::istringstream in(req.at("jsonl").get<std::string>());
      records = read_qa_jsonl(in);
    } else {
      return fail(400, "field 'records' or 'jsonl' is required");
    }
    const std::string mode = req.value("mode", "templates");
    if (mode != "templates" && mode != "llm") return fail(400, "mode must be templates or llm");
    if (mode == "llm" && !pipeline_->has_client()) return fail(409, "no chat model is configured");
    const bool use_model = mode == "llm";
    const EvalReport rep = evaluate(records, [&](const QaRecord& r) {
      const ChatTrace t = pipeline_->answer(r.question, r.user_id.empty() ? std::nullopt : std::optional(r.user_id),
                                            r.now, use_model);
      return GeneratedAnswer{t.answer.full_answer, t.answer.short_answer};
    });
    nlohmann::json out = rep.to_json();
    if (!req.value("include_rows", false)) out.erase("rows");
    out["mode"] = mode;
    return {200, out};
  } catch (const Error& e) {
    return fail(e);
  }
}

ApiResponse Service::labels() const {
  if (!pipeline_) return fail(409, "no store is loaded: " + load_error_);
  return {200, {{"labels", pipeline_->vocabulary().phrases()}}};
}

ApiResponse Service::health() const {
  nlohmann::json j = {{"status", "ok"}, {"loaded", pipeline_ != nullptr}, {"mode", config_.mode}};
  if (pipeline_) {
    j["records"] = pipeline_->index().size();
    j["users"] = pipeline_->users();
    j["gateway"] = pipeline_->has_client();
  } else {
    j["error"] = load_error_;
  }
  return {200, j};
}

std::optional<ChatSession> Service::session(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

void Service::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  // small JSON replies; without this keep-alive clients stall on delayed ACKs
  server.set_tcp_nodelay(true);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Post("/api/chat", [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, chat(req.body)); });
  server.Get("/api/timeline", [this, reply](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params[k] = v;
    reply(res, timeline(params));
  });
  server.Post("/api/ingest", [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, ingest(req.body)); });
  server.Post("/api/eval", [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, eval(req.body)); });
  server.Get("/api/labels", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, labels()); });
  server.Get("/api/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", what}}.dump(), "application/json");
  });
}

void Service::serve(const std::string& host, int port) {
  httplib::Server server;
  mount(server);
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace tsqa
