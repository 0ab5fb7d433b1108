#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gosc/corpus.hpp"
#include "gosc/error.hpp"
#include "gosc/events.hpp"
#include "gosc/metrics.hpp"
#include "gosc/pipeline.hpp"
#include "gosc/remote.hpp"
#include "gosc/scorers.hpp"
#include "gosc/task.hpp"
#include "gosc/text.hpp"

namespace py = pybind11;
using namespace gosc;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

// Subclassable from Python. Calls may arrive on worker threads (jobs > 1),
// so each one takes the GIL itself.
class PyRelevance : public RelevanceScorer {
 public:
  double relevance(const std::string& goal, const std::string& step) const override {
    py::gil_scoped_acquire gil;
    PYBIND11_OVERRIDE_PURE(double, RelevanceScorer, relevance, goal, step);
  }
};

class PyOrder : public OrderScorer {
 public:
  double precedes(const std::string& goal, const std::string& first, const std::string& second) const override {
    py::gil_scoped_acquire gil;
    PYBIND11_OVERRIDE_PURE(double, OrderScorer, precedes, goal, first, second);
  }
};

struct OrderAccess : OrderScorer {
  using OrderScorer::precedes;
};

std::vector<double> relevance_batch(const RelevanceScorer& s, const std::string& goal,
                                    const std::vector<std::string>& steps) {
  py::gil_scoped_release nogil;
  return s.relevance_batch(goal, steps);
}

std::vector<double> compare_batch(const OrderScorer& s, const std::string& goal, const std::vector<StepPair>& pairs) {
  py::gil_scoped_release nogil;
  return s.compare_batch(goal, pairs);
}

}  // namespace

PYBIND11_MODULE(_gosc, m) {
  m.doc() = "Goal-oriented script construction: corpora, retrieve-then-order pipeline, metrics.";

  auto error = py::register_exception<Error>(m, "GoscError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<TransportError>(m, "TransportError", error);
  py::register_exception<ProtocolError>(m, "ProtocolError", error);

  auto text = m.def_submodule("text");
  text.def("canonical", [](const std::string& s) { return text::canonical(s); });
  text.def("tokenize", [](const std::string& s) { return text::tokenize(s); });
  text.def("sentence_case", [](const std::string& s) { return text::sentence_case(s); });

  // --- corpus ---------------------------------------------------------------
  py::class_<Section>(m, "Section")
      .def(py::init<>())
      .def_readwrite("header", &Section::header)
      .def_readwrite("steps", &Section::steps);

  py::class_<Script>(m, "Script")
      .def(py::init<>())
      .def_readwrite("id", &Script::id)
      .def_readwrite("language", &Script::language)
      .def_readwrite("goal", &Script::goal)
      .def_readwrite("category", &Script::category)
      .def_readwrite("ordered", &Script::ordered)
      .def_readwrite("sections", &Script::sections)
      .def_readwrite("steps", &Script::steps)
      .def("to_dict", [](const Script& s) { return to_py(to_json(s)); })
      .def_static("from_dict", [](py::dict d, const std::string& lang) { return parse_article(from_py(d), lang); },
                  py::arg("record"), py::arg("language") = "en")
      .def("__eq__", [](const Script& a, const Script& b) { return a == b; })
      .def("__repr__", [](const Script& s) { return "<Script " + s.id + " \"" + s.goal + "\">"; });

  py::class_<Corpus>(m, "Corpus")
      .def(py::init<std::string, std::vector<Script>>(), py::arg("language"), py::arg("scripts"))
      .def_property_readonly("language", &Corpus::language)
      .def_property_readonly("scripts", &Corpus::scripts)
      .def("__len__", &Corpus::size)
      .def("has_split", &Corpus::has_split)
      .def("split_of", [](const Corpus& c, const std::string& id) { return std::string(to_string(c.split_of(id))); })
      .def("split", [](const Corpus& c) {
        std::map<std::string, std::string> out;
        for (const auto& [id, s] : c.split()) out[id] = to_string(s);
        return out;
      })
      .def("stats", [](const Corpus& c) { return to_py(to_json(corpus_stats(c))); });

  m.def("load_corpus", [](const std::string& path, const std::string& lang) { return load_corpus(path, lang); },
        py::arg("path"), py::arg("language") = "en");
  m.def("save_corpus", &save_corpus);
  m.def("split_corpus", &split_corpus, py::arg("corpus"), py::arg("seed"));

  // --- tasks ----------------------------------------------------------------
  py::class_<CandidateStep>(m, "CandidateStep")
      .def(py::init<std::string, std::string, std::string>(), py::arg("text"), py::arg("source_id") = "",
           py::arg("category") = "")
      .def_readwrite("text", &CandidateStep::text)
      .def_readwrite("source_id", &CandidateStep::source_id)
      .def_readwrite("category", &CandidateStep::category);

  py::class_<TaskInstance>(m, "TaskInstance")
      .def(py::init<>())
      .def_readwrite("goal", &TaskInstance::goal)
      .def_readwrite("length", &TaskInstance::length)
      .def_readwrite("candidates", &TaskInstance::candidates)
      .def_readwrite("gold", &TaskInstance::gold)
      .def_readwrite("ordered", &TaskInstance::ordered)
      .def_readwrite("language", &TaskInstance::language)
      .def_readwrite("category", &TaskInstance::category)
      .def("validate", [](const TaskInstance& t) { validate(t); })
      .def("to_dict", [](const TaskInstance& t) { return to_py(to_json(t)); })
      .def_static("from_dict", [](py::dict d) { return task_from_json(from_py(d)); })
      .def("__eq__", [](const TaskInstance& a, const TaskInstance& b) { return a == b; });

  m.def("build_retrieval_tasks", [](const Corpus& c) { return build_retrieval_tasks(c); });
  m.def("load_tasks", &load_tasks);
  m.def("save_tasks", &save_tasks);

  // --- scorers --------------------------------------------------------------
  py::class_<RelevanceScorer, PyRelevance>(m, "RelevanceScorer")
      .def(py::init<>())
      .def("relevance", &RelevanceScorer::relevance, py::arg("goal"), py::arg("step"))
      .def("relevance_batch", &relevance_batch, py::arg("goal"), py::arg("steps"));

  py::class_<OrderScorer, PyOrder>(m, "OrderScorer")
      .def(py::init<>())
      .def("precedes", &OrderAccess::precedes, py::arg("goal"), py::arg("first"), py::arg("second"))
      .def("compare", &OrderScorer::compare, py::arg("goal"), py::arg("a"), py::arg("b"))
      .def("compare_batch", &compare_batch, py::arg("goal"), py::arg("pairs"));

  py::class_<OracleRelevance, RelevanceScorer>(m, "OracleRelevance").def(py::init<std::vector<std::string>>());
  py::class_<OracleOrderer, OrderScorer>(m, "OracleOrderer").def(py::init<std::vector<std::string>>());
  py::class_<RandomScorer, RelevanceScorer, OrderScorer>(m, "RandomScorer")
      .def(py::init<std::uint64_t>(), py::arg("seed"));
  py::class_<LexicalScorer, RelevanceScorer>(m, "LexicalScorer")
      .def_static("build", &LexicalScorer::build, py::arg("corpus"))
      .def("idf", &LexicalScorer::idf)
      .def_property_readonly("num_documents", &LexicalScorer::num_documents)
      .def_property_readonly("vocabulary_size", &LexicalScorer::vocabulary_size);
  py::class_<PositionOrderer, OrderScorer>(m, "PositionOrderer")
      .def_static("build", &PositionOrderer::build, py::arg("corpus"), py::arg("scale") = 1.0)
      .def("step_position", &PositionOrderer::step_position);
  py::class_<RemoteScorer, RelevanceScorer, OrderScorer>(m, "RemoteScorer")
      .def(py::init([](const std::string& endpoint, std::size_t batch_size, std::size_t max_in_flight,
                       const std::string& language) {
             RemoteOptions o;
             o.batch_size = batch_size;
             o.max_in_flight = max_in_flight;
             o.language = language;
             return std::make_unique<RemoteScorer>(endpoint, o);
           }),
           py::arg("endpoint"), py::arg("batch_size") = 32, py::arg("max_in_flight") = 4, py::arg("language") = "en")
      .def("requests_sent", &RemoteScorer::requests_sent);

  // --- pipeline -------------------------------------------------------------
  py::class_<ConstructedScript>(m, "ConstructedScript")
      .def_readonly("goal", &ConstructedScript::goal)
      .def_readonly("steps", &ConstructedScript::steps)
      .def_readonly("confidences", &ConstructedScript::confidences)
      .def_readonly("ranking", &ConstructedScript::ranking)
      .def_readonly("gold_order", &ConstructedScript::gold_order)
      .def_property_readonly("mode", [](const ConstructedScript& s) { return std::string(to_string(s.mode)); })
      .def("to_dict", [](const ConstructedScript& s) { return to_py(to_json(s)); });

  m.def(
      "construct",
      [](const TaskInstance& task, const RelevanceScorer& rel, const OrderScorer& ord, const std::string& mode,
         double threshold, std::size_t ranking_depth, bool order_gold, std::uint64_t seed, std::size_t jobs) {
        ConstructOptions o;
        o.mode = retention_mode_from_string(mode);
        o.threshold = threshold;
        o.ranking_depth = ranking_depth;
        o.order_gold = order_gold;
        o.seed = seed;
        o.retrieve.jobs = jobs;
        py::gil_scoped_release nogil;
        return construct(task, rel, ord, o);
      },
      py::arg("task"), py::arg("relevance"), py::arg("orderer"), py::arg("mode") = "top-l",
      py::arg("threshold") = kDefaultThreshold, py::arg("ranking_depth") = 0, py::arg("order_gold") = false,
      py::arg("seed") = 0, py::arg("jobs") = 1);

  m.def(
      "order_steps",
      [](const std::string& goal, const std::vector<std::string>& steps, const OrderScorer& ord, std::size_t jobs) {
        py::gil_scoped_release nogil;
        return order_steps(goal, steps, ord, jobs);
      },
      py::arg("goal"), py::arg("steps"), py::arg("orderer"), py::arg("jobs") = 1);

  m.def(
      "emit_inference_training_data",
      [](const Corpus& c, std::uint64_t seed) {
        py::list out;
        for (const auto& p : emit_inference_training_data(c, seed)) out.append(to_py(to_json(p)));
        return out;
      },
      py::arg("corpus"), py::arg("seed"));
  m.def(
      "emit_ordering_training_data",
      [](const Corpus& c, std::uint64_t seed) {
        py::list out;
        for (const auto& p : emit_ordering_training_data(c, seed)) out.append(to_py(to_json(p)));
        return out;
      },
      py::arg("corpus"), py::arg("seed"));

  // --- metrics --------------------------------------------------------------
  auto met = m.def_submodule("metrics");
  met.def("accuracy", &metrics::accuracy, py::arg("predicted"), py::arg("gold"), py::arg("l"));
  met.def(
      "script_tau",
      [](const std::vector<std::string>& s, const std::vector<std::string>& t, std::size_t l, bool overlap) {
        return metrics::script_tau(s, t, l,
                                   overlap ? metrics::TauDenominator::OverlapPairs : metrics::TauDenominator::LengthPairs);
      },
      py::arg("predicted"), py::arg("gold"), py::arg("l"), py::arg("overlap_denominator") = false);
  met.def("recall_at_k", [](const std::vector<std::string>& r, const std::vector<std::string>& t,
                            std::size_t k) { return metrics::recall_at_k(r, t, k).value; });
  met.def("ndcg_at_k", [](const std::vector<std::string>& r, const std::vector<std::string>& t, std::size_t k,
                          std::size_t l) { return metrics::ndcg_at_k(r, t, k, l).value; });
  met.def("ordering_tau", &metrics::ordering_tau);
  met.def("perplexity", &metrics::perplexity_aggregate, py::arg("log_likelihood"), py::arg("token_count"));
  met.def(
      "evaluate_run",
      [](const std::vector<TaskInstance>& tasks, const std::vector<ConstructedScript>& scripts,
         std::vector<std::size_t> ks) {
        metrics::EvalOptions o;
        o.ks = std::move(ks);
        return to_py(metrics::to_json(metrics::evaluate_run(tasks, scripts, o)));
      },
      py::arg("tasks"), py::arg("scripts"), py::arg("ks") = std::vector<std::size_t>{25, 50});

  // --- events ---------------------------------------------------------------
  py::class_<events::Ontology>(m, "Ontology")
      .def_static("load", &events::load_ontology)
      .def_static("from_records",
                  [](py::list records) {
                    std::vector<json> rs;
                    for (auto r : records) rs.push_back(from_py(r));
                    return events::ontology_from_json(rs);
                  })
      .def("__len__", &events::Ontology::size)
      .def("__contains__", &events::Ontology::contains);

  m.def(
      "instantiate_template",
      [](const std::string& event_type, const std::map<std::string, std::string>& arguments,
         const events::Ontology& ontology) {
        return events::instantiate_template({event_type, "", arguments, ""}, ontology);
      },
      py::arg("event_type"), py::arg("arguments"), py::arg("ontology"));
}
