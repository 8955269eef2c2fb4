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


// Python bindings. Structured results cross the boundary as JSON text and are
// decoded on the Python side (see tsqa/__init__.py).

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/pipeline.hpp"
#include "tsqa/pretrainer.hpp"
#include "tsqa/qa_suite.hpp"
#include "tsqa/service.hpp"
#include "tsqa/store.hpp"
#include "tsqa/synth.hpp"
#include "tsqa/timeline.hpp"

namespace py = pybind11;
using namespace tsqa;

namespace {

std::string train_encoders(const std::string& csv, const std::string& schema, const std::string& out,
                           const std::string& encoder_json, const std::string& train_json, int stride) {
  Timeline t = impute_missing(load_csv(csv, load_schema(schema)));
  const LabelVocabulary vocab = build_vocabulary(t);
  const EncoderConfig ec = EncoderConfig::from_json(nlohmann::json::parse(encoder_json));
  const TrainConfig tc = TrainConfig::from_json(nlohmann::json::parse(train_json));
  if (stride > 1) {
    std::vector<SensorWindow> kept;
    for (std::size_t i = 0; i < t.windows.size(); i += static_cast<std::size_t>(stride)) kept.push_back(t.windows[i]);
    t.windows = std::move(kept);
  }
  TrainResult r;
  {
    py::gil_scoped_release release;
    r = train(init_parameters(ec, t.schema, vocab), t, vocab, tc);
  }
  save_parameters(out, r.params);
  return nlohmann::json{{"loss_history", r.loss_history}, {"retrieval_accuracy", retrieval_accuracy(r.params, t, vocab)}}
      .dump();
}

void train_similarity_file(const std::string& csv, const std::string& schema, const std::string& params_path,
                           const std::string& out, const std::string& config_json) {
  const Timeline t = impute_missing(load_csv(csv, load_schema(schema)));
  const Parameters p = load_parameters(params_path);
  const SimilarityConfig sc = SimilarityConfig::from_json(nlohmann::json::parse(config_json));
  py::gil_scoped_release release;
  save_similarity(out, train_similarity(p, t, p.vocabulary, sc));
}

std::size_t build_store_file(const std::string& csv, const std::string& schema, const std::string& params_path,
                             const std::string& out) {
  const Timeline t = impute_missing(load_csv(csv, load_schema(schema)));
  const EmbeddingStore s = build_store(load_parameters(params_path), t);
  save_store(out, s);
  return s.size();
}

std::string synth_files(const std::string& out, int users, int days, std::uint64_t seed, double noise,
                        int per_category) {
  synth::Config c;
  c.users = users;
  c.days = days;
  c.seed = seed;
  c.noise = noise;
  const Timeline t = synth::generate(c);
  const LabelVocabulary vocab(synth::label_phrases());
  std::filesystem::create_directories(out);
  const std::filesystem::path dir(out);
  {
    std::ofstream f(dir / "schema.json");
    f << t.schema.to_json().dump(2) << "\n";
  }
  {
    std::ofstream f(dir / "timeline.csv");
    write_csv(f, t, vocab.phrases());
  }
  auto oracle = Pipeline::from_oracle(t, vocab, PipelineConfig{});
  QaSuiteConfig qc;
  qc.per_category = per_category;
  qc.seed = seed;
  const auto qa = make_qa_suite(t, vocab, oracle->lexicon(), qc);
  save_qa(dir / "qa.jsonl", qa);
  return nlohmann::json{{"windows", t.windows.size()}, {"qa_records", qa.size()}, {"now", suite_now(t)}}.dump();
}

// Thin handle so Python never sees the non-copyable Pipeline directly.
class PyPipeline {
 public:
  explicit PyPipeline(std::shared_ptr<Pipeline> p) : p_(std::move(p)) {}

  static PyPipeline from_config(const std::string& path) { return PyPipeline(load_pipeline(load_service_config(path))); }

  static PyPipeline from_files(const std::string& params, const std::string& store, const std::string& similarity,
                               const std::string& config_json) {
    ServiceConfig c;
    c.params_path = params;
    c.store_path = store;
    c.similarity_path = similarity;
    c.pipeline = PipelineConfig::from_json(nlohmann::json::parse(config_json));
    return PyPipeline(load_pipeline(c));
  }

  static PyPipeline oracle(const std::string& csv, const std::string& schema, const std::string& config_json) {
    ServiceConfig c;
    c.mode = "oracle";
    c.timeline_path = csv;
    c.schema_path = schema;
    c.pipeline = PipelineConfig::from_json(nlohmann::json::parse(config_json));
    return PyPipeline(load_pipeline(c));
  }

  std::string answer(const std::string& question, std::optional<std::string> user, std::int64_t now) const {
    return p_->answer(question, user, now).to_json().dump();
  }

  std::string decompose(const std::string& question) const { return p_->decompose(question).to_json().dump(); }

  std::string run_queries(const std::string& specs_json, std::optional<std::string> user, std::int64_t now) const {
    const auto contexts = p_->run_queries(specs_from_json(nlohmann::json::parse(specs_json)), user, now);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : contexts) out.push_back({{"text", c.text}, {"values", c.values}});
    return out.dump();
  }

  std::string evaluate_file(const std::string& qa_path) const {
    const EvalReport rep = evaluate(load_qa(qa_path), [&](const QaRecord& r) {
      const ChatTrace t = p_->answer(r.question, r.user_id, r.now);
      return GeneratedAnswer{t.answer.full_answer, t.answer.short_answer};
    });
    return rep.to_json().dump();
  }

  std::vector<std::string> labels() const { return p_->vocabulary().phrases(); }
  std::vector<std::string> users() const { return p_->users(); }
  std::shared_ptr<Pipeline> get() const { return p_; }

 private:
  std::shared_ptr<Pipeline> p_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tsqa native core";

  static py::exception<Error> tsqa_error(m, "TsqaError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = py::reinterpret_borrow<py::object>(tsqa_error.ptr());
      py::object exc = type(std::string(error_code_name(e.code())) + ": " + e.what());
      exc.attr("code") = error_code_name(e.code());
      PyErr_SetObject(tsqa_error.ptr(), exc.ptr());
    }
  });

  m.def("rouge_n", &rouge_n, py::arg("candidate"), py::arg("reference"), py::arg("n"));
  m.def("rouge_l", &rouge_l, py::arg("candidate"), py::arg("reference"));
  m.def(
      "short_match",
      [](const std::string& g, const std::string& t) {
        const ShortMatch s = short_metrics(g, t);
        return py::make_tuple(s.exact, s.contains);
      },
      py::arg("generated"), py::arg("truth"));

  m.def(
      "_gradcheck",
      [](int configs, std::uint64_t seed) {
        GradcheckReport r;
        {
          py::gil_scoped_release release;
          r = run_gradcheck(configs, seed);
        }
        return nlohmann::json{{"configs", r.cases.size()}, {"max_rel_error", r.max_rel_error}, {"seconds", r.seconds}}
            .dump();
      },
      py::arg("configs"), py::arg("seed"));

  m.def("_pretrain", &train_encoders, py::arg("csv"), py::arg("schema"), py::arg("out"), py::arg("encoder"),
        py::arg("train"), py::arg("stride"));
  m.def("_train_similarity", &train_similarity_file, py::arg("csv"), py::arg("schema"), py::arg("params"),
        py::arg("out"), py::arg("config"));
  m.def("build_store", &build_store_file, py::arg("csv"), py::arg("schema"), py::arg("params"), py::arg("out"));
  m.def("_synth", &synth_files, py::arg("out"), py::arg("users"), py::arg("days"), py::arg("seed"), py::arg("noise"),
        py::arg("per_category"));
  m.def("parse_datetime", &parse_datetime, py::arg("text"));

  py::class_<PyPipeline>(m, "_Pipeline")
      .def_static("from_config", &PyPipeline::from_config)
      .def_static("from_files", &PyPipeline::from_files)
      .def_static("oracle", &PyPipeline::oracle)
      .def("answer", &PyPipeline::answer)
      .def("decompose", &PyPipeline::decompose)
      .def("run_queries", &PyPipeline::run_queries)
      .def("evaluate", &PyPipeline::evaluate_file)
      .def("labels", &PyPipeline::labels)
      .def("users", &PyPipeline::users);

  // Same handlers the HTTP server mounts, callable without a socket.
  py::class_<Service, std::shared_ptr<Service>>(m, "_Service")
      .def(py::init([](const PyPipeline& p) {
        return std::make_shared<Service>(p.get(), ModalitySchema{});
      }))
      .def("chat",
           [](Service& s, const std::string& body) {
             const ApiResponse r = s.chat(body);
             return py::make_tuple(r.status, r.body.dump());
           })
      .def("labels",
           [](const Service& s) {
             const ApiResponse r = s.labels();
             return py::make_tuple(r.status, r.body.dump());
           })
      .def("health", [](const Service& s) {
        const ApiResponse r = s.health();
        return py::make_tuple(r.status, r.body.dump());
      });
}
