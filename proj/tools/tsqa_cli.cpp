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


// Command-line front end. Exit codes: 0 ok, 1 usage, 2 runtime failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/pipeline.hpp"
#include "tsqa/pretrainer.hpp"
#include "tsqa/qa_suite.hpp"
#include "tsqa/service.hpp"
#include "tsqa/store.hpp"
#include "tsqa/synth.hpp"
#include "tsqa/text.hpp"
#include "tsqa/timeline.hpp"

namespace fs = std::filesystem;
using namespace tsqa;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct GradcheckFailed {
  double max_rel_error;
};

// Flags shared by every subcommand that needs a loaded pipeline.
struct LoaderFlags {
  std::string config;
  std::string params, store, similarity;
  bool oracle = false;
  std::string csv, schema;
  std::string synonyms, templates;
  std::string pipeline_json;
  std::string now;
  std::string user;

  void add(CLI::App* app) {
    app->add_option("--config", config, "service config JSON");
    app->add_option("--params", params, "encoder parameters file");
    app->add_option("--store", store, "embedding store file");
    app->add_option("--similarity", similarity, "similarity model file");
    app->add_flag("--oracle", oracle, "use ground-truth labels from --csv instead of a model");
    app->add_option("--csv", csv, "timeline CSV (oracle mode)");
    app->add_option("--schema", schema, "modality schema JSON (oracle mode)");
    app->add_option("--synonyms", synonyms, "synonym table TSV");
    app->add_option("--templates", templates, "decomposition template directory");
    app->add_option("--pipeline", pipeline_json, "pipeline options JSON file");
    app->add_option("--now", now, "reference time: unix seconds or YYYY-MM-DD[ HH:MM[:SS]]");
    app->add_option("--user", user, "user id");
  }

  ServiceConfig service_config() const {
    ServiceConfig c;
    if (!config.empty()) c = load_service_config(config);
    if (oracle) c.mode = "oracle";
    if (!params.empty()) c.params_path = params;
    if (!store.empty()) c.store_path = store;
    if (!similarity.empty()) c.similarity_path = similarity;
    if (!csv.empty()) c.timeline_path = csv;
    if (!schema.empty()) c.schema_path = schema;
    if (!synonyms.empty()) c.synonyms_path = synonyms;
    if (!templates.empty()) c.templates_dir = templates;
    if (!pipeline_json.empty()) c.pipeline = PipelineConfig::from_json(read_json(pipeline_json));
    if (!now.empty()) c.now = parse_now(now);
    return c;
  }

  static nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, path + ": " + e.what());
    }
  }

  static std::int64_t parse_now(const std::string& s) {
    const bool digits = !s.empty() && s.find_first_not_of("0123456789", s[0] == '-' ? 1 : 0) == std::string::npos &&
                        s != "-";
    if (digits) return std::stoll(s);
    if (auto t = parse_datetime(s)) return *t;
    throw Error(ErrorCode::kFormat, "cannot parse time '" + s + "'");
  }
};

// Reference time: --now, the config's clock override, else 23:59:59 of the last data day.
std::int64_t resolve_now(const ServiceConfig& config, const Pipeline& p) {
  if (config.now) return *config.now;
  if (auto b = p.index().bounds()) return day_start(b->to - 1) + 86399;
  return 0;
}

std::optional<std::string> user_or_null(const std::string& u) {
  return u.empty() ? std::nullopt : std::optional(u);
}

Timeline read_timeline(const std::string& csv, const std::string& schema) {
  return impute_missing(load_csv(csv, load_schema(schema)));
}

Timeline stride_windows(const Timeline& t, int stride) {
  if (stride <= 1) return t;
  Timeline out = t;
  out.windows.clear();
  for (std::size_t i = 0; i < t.windows.size(); i += static_cast<std::size_t>(stride)) out.windows.push_back(t.windows[i]);
  return out;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void print_trace(const ChatTrace& trace, bool json) {
  if (json) {
    std::cout << trace.to_json().dump(2) << "\n";
    return;
  }
  std::cout << trace.answer.full_answer << "\n";
  std::cout << "  short: " << trace.answer.short_answer << "  (" << category_name(trace.decomposition.category)
            << ", " << trace.latency_ms << " ms)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsqa: question answering over sensor timelines"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --json follow the subcommand
  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable output where supported");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a timeline CSV against a schema");
  std::string in_csv, in_schema;
  ingest->add_option("--csv", in_csv)->required();
  ingest->add_option("--schema", in_schema)->required();

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "train the sensor and label encoders");
  std::string pt_csv, pt_schema, pt_out;
  EncoderConfig enc;
  TrainConfig tc;
  int pt_hidden = 64, pt_stride = 1;
  std::string pt_denominator = "exclusive", pt_feature = "raw_window";
  pretrain->add_option("--csv", pt_csv)->required();
  pretrain->add_option("--schema", pt_schema)->required();
  pretrain->add_option("--out", pt_out)->required();
  pretrain->add_option("--embed-dim", enc.embed_dim)->capture_default_str();
  pretrain->add_option("--hidden", pt_hidden, "hidden width for every modality")->capture_default_str();
  pretrain->add_option("--epochs", tc.epochs)->capture_default_str();
  pretrain->add_option("--lr", tc.learning_rate)->capture_default_str();
  pretrain->add_option("--batch", tc.batch_size)->capture_default_str();
  pretrain->add_option("--tau", tc.tau)->capture_default_str();
  pretrain->add_option("--denominator", pt_denominator)
      ->check(CLI::IsMember({"exclusive", "include_positive"}))
      ->capture_default_str();
  pretrain->add_option("--seed", tc.seed)->capture_default_str();
  pretrain->add_option("--feature-mode", pt_feature)
      ->check(CLI::IsMember({"raw_window", "statistical"}))
      ->capture_default_str();
  pretrain->add_option("--stride", pt_stride, "train on every n-th window")->check(CLI::PositiveNumber);

  // train-sim
  auto* train_sim = app.add_subcommand("train-sim", "train the sensor/label similarity function");
  std::string ts_csv, ts_schema, ts_params, ts_out, ts_mode = "mlp";
  SimilarityConfig sc;
  int ts_stride = 1;
  train_sim->add_option("--csv", ts_csv)->required();
  train_sim->add_option("--schema", ts_schema)->required();
  train_sim->add_option("--params", ts_params)->required();
  train_sim->add_option("--out", ts_out)->required();
  train_sim->add_option("--mode", ts_mode)->check(CLI::IsMember({"mlp", "cosine_sigmoid"}))->capture_default_str();
  train_sim->add_option("--hidden", sc.hidden)->capture_default_str();
  train_sim->add_option("--epochs", sc.epochs)->capture_default_str();
  train_sim->add_option("--lr", sc.learning_rate)->capture_default_str();
  train_sim->add_option("--batch", sc.batch_size)->capture_default_str();
  train_sim->add_option("--negatives", sc.negatives_per_positive)->capture_default_str();
  train_sim->add_option("--seed", sc.seed)->capture_default_str();
  train_sim->add_option("--stride", ts_stride)->check(CLI::PositiveNumber);

  // build-store
  auto* build = app.add_subcommand("build-store", "encode every window into an embedding store");
  std::string bs_csv, bs_schema, bs_params, bs_out;
  build->add_option("--csv", bs_csv)->required();
  build->add_option("--schema", bs_schema)->required();
  build->add_option("--params", bs_params)->required();
  build->add_option("--out", bs_out)->required();

  // query
  auto* query = app.add_subcommand("query", "run query specs directly");
  LoaderFlags q_flags;
  q_flags.add(query);
  std::string q_spec;
  query->add_option("--spec", q_spec, "JSON spec or list of specs; @file reads a file")->required();

  // chat
  auto* chat = app.add_subcommand("chat", "answer one question, or start a prompt loop");
  LoaderFlags c_flags;
  c_flags.add(chat);
  std::string c_question;
  chat->add_option("--question,-q", c_question);

  // eval
  auto* eval = app.add_subcommand("eval", "score the pipeline on a QA JSONL file");
  LoaderFlags e_flags;
  e_flags.add(eval);
  std::string e_qa, e_mode = "templates", e_out;
  eval->add_option("--qa", e_qa)->required();
  eval->add_option("--mode", e_mode)->check(CLI::IsMember({"templates", "llm"}))->capture_default_str();
  eval->add_option("--out", e_out, "write the JSON report here");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and numeric loss gradients");
  int g_configs = 20;
  std::uint64_t g_seed = 0;
  gradcheck->add_option("--configs", g_configs)->check(CLI::PositiveNumber)->capture_default_str();
  gradcheck->add_option("--seed", g_seed)->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "start the HTTP API");
  LoaderFlags s_flags;
  s_flags.add(serve);
  std::string s_host;
  int s_port = 0;
  serve->add_option("--host", s_host);
  serve->add_option("--port", s_port);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic schema, timeline and QA set");
  synth::Config sy;
  std::string sy_out;
  int sy_per_category = 50;
  synth_cmd->add_option("--out", sy_out, "output directory")->required();
  synth_cmd->add_option("--users", sy.users)->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--days", sy.days)->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--seed", sy.seed)->capture_default_str();
  synth_cmd->add_option("--noise", sy.noise)->capture_default_str();
  synth_cmd->add_option("--missing-rate", sy.missing_rate)->capture_default_str();
  synth_cmd->add_option("--per-category", sy_per_category)->capture_default_str();

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*ingest) {
      const ModalitySchema s = load_schema(in_schema);
      const Timeline t = load_csv(in_csv, s);
      const LabelVocabulary v = build_vocabulary(t);
      nlohmann::json out = {{"windows", t.windows.size()}, {"users", t.users()}, {"labels", v.phrases()}};
      std::cout << out.dump(as_json ? -1 : 2) << "\n";
    } else if (*pretrain) {
      const Timeline t = read_timeline(pt_csv, pt_schema);
      const LabelVocabulary vocab = build_vocabulary(t);
      enc.hidden_widths = {pt_hidden};
      enc.seed = tc.seed;
      enc.feature_mode = pt_feature == "statistical" ? FeatureMode::Statistical : FeatureMode::RawWindow;
      tc.denominator = pt_denominator == "include_positive" ? DenominatorMode::IncludePositive : DenominatorMode::Exclusive;
      tc.validate();
      const Timeline sub = stride_windows(t, pt_stride);
      Parameters p = init_parameters(enc, t.schema, vocab);
      const auto t0 = std::chrono::steady_clock::now();
      TrainResult r = train(std::move(p), sub, vocab, tc, [](int epoch, double loss) {
        std::cerr << "epoch " << epoch << " loss " << loss << "\n";
      });
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_parameters(pt_out, r.params);
      nlohmann::json out = {{"out", pt_out},
                            {"first_loss", r.loss_history.front()},
                            {"final_loss", r.loss_history.back()},
                            {"retrieval_accuracy", retrieval_accuracy(r.params, sub, vocab)},
                            {"seconds", secs}};
      std::cout << out.dump(as_json ? -1 : 2) << "\n";
    } else if (*train_sim) {
      const Timeline t = read_timeline(ts_csv, ts_schema);
      const Parameters p = load_parameters(ts_params);
      sc.mode = ts_mode == "mlp" ? SimilarityMode::Mlp : SimilarityMode::CosineSigmoid;
      sc.validate();
      const SimilarityModel m = train_similarity(p, stride_windows(t, ts_stride), p.vocabulary, sc);
      save_similarity(ts_out, m);
      std::cout << nlohmann::json{{"out", ts_out}, {"mode", ts_mode}, {"scale", m.scale}}.dump() << "\n";
    } else if (*build) {
      const Timeline t = read_timeline(bs_csv, bs_schema);
      const EmbeddingStore st = build_store(load_parameters(bs_params), t);
      save_store(bs_out, st);
      std::cout << nlohmann::json{{"out", bs_out}, {"records", st.size()}}.dump() << "\n";
    } else if (*query) {
      const ServiceConfig cfg = q_flags.service_config();
      auto p = load_pipeline(cfg);
      std::string text = q_spec;
      if (!text.empty() && text[0] == '@') {
        std::ifstream in(text.substr(1));
        if (!in) throw Error(ErrorCode::kIo, "cannot open " + text.substr(1));
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      }
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kFormat, std::string("bad --spec: ") + e.what());
      }
      if (j.is_object()) j = nlohmann::json::array({j});
      const auto specs = specs_from_json(j);
      const auto contexts = p->run_queries(specs, user_or_null(q_flags.user), resolve_now(cfg, *p));
      nlohmann::json out = nlohmann::json::array();
      for (const auto& c : contexts) out.push_back({{"text", c.text}, {"values", c.values}});
      std::cout << out.dump(as_json ? -1 : 2) << "\n";
    } else if (*chat) {
      const ServiceConfig cfg = c_flags.service_config();
      auto p = load_pipeline(cfg);
      const std::int64_t now = resolve_now(cfg, *p);
      const auto user = user_or_null(c_flags.user);
      if (!c_question.empty()) {
        print_trace(p->answer(c_question, user, now), as_json);
      } else {
        std::string line;
        while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
          line = std::string(text::trim(line));
          if (line.empty()) continue;
          if (line == "exit" || line == "quit") break;
          try {
            print_trace(p->answer(line, user, now), as_json);
          } catch (const Error& e) {
            std::cout << "error: " << e.what() << "\n";
          }
        }
      }
    } else if (*eval) {
      const ServiceConfig cfg = e_flags.service_config();
      auto p = load_pipeline(cfg);
      const auto records = load_qa(e_qa);
      const bool llm = e_mode == "llm";
      if (llm && !p->has_client()) throw Error(ErrorCode::kConfiguration, "llm mode needs a gateway in --config");
      const EvalReport rep = evaluate(records, [&](const QaRecord& r) {
        const ChatTrace t = p->answer(r.question, r.user_id, r.now, llm);
        return GeneratedAnswer{t.answer.full_answer, t.answer.short_answer};
      });
      if (!e_out.empty()) write_json_file(e_out, rep.to_json());
      if (as_json) {
        std::cout << rep.to_json().dump() << "\n";
      } else {
        std::cout << rep.table();
      }
    } else if (*gradcheck) {
      const GradcheckReport rep = run_gradcheck(g_configs, g_seed);
      std::cout << "configs " << rep.cases.size() << " max_rel_error " << rep.max_rel_error << " seconds "
                << rep.seconds << "\n";
      if (!(rep.max_rel_error <= 1e-4)) throw GradcheckFailed{rep.max_rel_error};
    } else if (*serve) {
      ServiceConfig cfg = s_flags.service_config();
      if (!s_host.empty()) cfg.host = s_host;
      if (s_port > 0) cfg.port = s_port;
      Service svc(cfg);
      std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
      svc.serve(cfg.host, cfg.port);
    } else if (*synth_cmd) {
      fs::create_directories(sy_out);
      const Timeline t = synth::generate(sy);
      const LabelVocabulary vocab(synth::label_phrases());
      write_json_file(fs::path(sy_out) / "schema.json", t.schema.to_json());
      {
        std::ofstream out(fs::path(sy_out) / "timeline.csv");
        if (!out) throw Error(ErrorCode::kIo, "cannot write timeline.csv");
        write_csv(out, t, vocab.phrases());
      }
      auto oracle = Pipeline::from_oracle(t, vocab, PipelineConfig{});
      QaSuiteConfig qc;
      qc.per_category = sy_per_category;
      qc.seed = sy.seed;
      const auto qa = make_qa_suite(t, vocab, oracle->lexicon(), qc);
      save_qa(fs::path(sy_out) / "qa.jsonl", qa);
      std::cout << nlohmann::json{{"out", sy_out}, {"windows", t.windows.size()}, {"qa_records", qa.size()}}.dump()
                << "\n";
    }
  } catch (const GradcheckFailed& g) {
    std::cerr << "gradcheck failed: max relative error " << g.max_rel_error << " > 1e-4\n";
    return kRuntime;
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}
