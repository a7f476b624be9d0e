#include "meaeq/cluster.hpp"
#include "meaeq/config.hpp"
#include "meaeq/corpus.hpp"
#include "meaeq/error.hpp"
#include "meaeq/eval.hpp"
#include "meaeq/filter.hpp"
#include "meaeq/samplers.hpp"
#include "meaeq/student.hpp"
#include "meaeq/synth.hpp"
#include "meaeq/task.hpp"
#include "meaeq/victim.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace meaeq;

namespace {

std::vector<Embedding> to_embeddings(const std::vector<std::vector<float>>& rows) {
    std::vector<Embedding> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(Embedding{r});
    return out;
}

TaskSpec task_named(const std::string& name) {
    auto t = builtin_task(name);
    if (!t) fail(ErrorCode::Config, "unknown task '" + name + "'");
    return *t;
}

py::dict report_dict(const MetricsReport& r) {
    auto agg = [](const Aggregate& a) {
        py::dict d;
        d["mean"] = a.mean;
        d["std"] = a.std;
        d["max"] = a.max;
        return d;
    };
    py::list seeds;
    for (const auto& s : r.per_seed) {
        py::dict d;
        d["seed"] = s.seed;
        d["agreement"] = s.agreement;
        d["accuracy"] = s.accuracy;
        seeds.append(d);
    }
    py::list failures;
    for (const auto& f : r.failures) failures.append(py::make_tuple(f.seed, f.message));
    py::dict d;
    d["strategy"] = r.strategy;
    d["k"] = r.k;
    d["per_seed"] = seeds;
    d["failures"] = failures;
    d["agreement"] = agg(r.agreement);
    d["accuracy"] = agg(r.accuracy);
    d["config_digest"] = hex64(r.config_digest);
    d["markdown"] = emit_report(r, ReportFormat::Markdown);
    d["csv"] = emit_report(r, ReportFormat::Csv);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Query selection, victim querying and evaluation for model extraction experiments";

    static py::exception<Error> error_type(m, "MeaeqError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
            err.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error_type.ptr(), err.ptr());
        }
    });

    // corpus
    py::class_<Sentence>(m, "Sentence")
        .def(py::init([](SentenceId id, std::string text, std::uint64_t line) { return Sentence{id, std::move(text), line}; }),
             py::arg("id"), py::arg("text"), py::arg("source_line") = 0)
        .def_readonly("id", &Sentence::id)
        .def_readonly("text", &Sentence::text)
        .def_readonly("source_line", &Sentence::source_line)
        .def("__repr__", [](const Sentence& s) { return "Sentence(" + std::to_string(s.id) + ", '" + s.text + "')"; });

    py::class_<CorpusStore>(m, "CorpusStore")
        .def("__len__", &CorpusStore::size)
        .def("at", &CorpusStore::at, py::return_value_policy::copy)
        .def_property_readonly("sentences", &CorpusStore::sentences)
        .def_property_readonly("source_digest", [](const CorpusStore& s) { return hex64(s.source_digest()); })
        .def("__eq__", [](const CorpusStore& a, const CorpusStore& b) { return a == b; });

    m.def("ingest_text",
          [](const std::string& text, std::size_t min_tokens, std::size_t max_tokens, bool dedup) {
              return ingest_text(text, IngestOptions{min_tokens, max_tokens, dedup});
          },
          py::arg("text"), py::arg("min_tokens") = 5, py::arg("max_tokens") = 128, py::arg("dedup") = true);
    m.def("ingest",
          [](const std::filesystem::path& path, std::size_t min_tokens, std::size_t max_tokens, bool dedup) {
              return ingest(path, IngestOptions{min_tokens, max_tokens, dedup});
          },
          py::arg("path"), py::arg("min_tokens") = 5, py::arg("max_tokens") = 128, py::arg("dedup") = true);
    m.def("save_store", &save_store, py::arg("store"), py::arg("path"));
    m.def("load_store", &load_store, py::arg("path"));

    // backends
    py::class_<EntailmentScores>(m, "EntailmentScores")
        .def_readonly("p_neutral", &EntailmentScores::p_neutral)
        .def_readonly("p_entailment", &EntailmentScores::p_entailment)
        .def_readonly("p_contradiction", &EntailmentScores::p_contradiction);

    py::class_<HashingBackend>(m, "HashingBackend")
        .def(py::init<std::size_t, std::uint64_t, std::vector<std::string>>(), py::arg("dim"), py::arg("seed") = 0,
             py::arg("keywords") = std::vector<std::string>{})
        .def_property_readonly("dim", &HashingBackend::dim)
        .def("embed", [](const HashingBackend& b, const std::string& text) { return b.embed(Sentence{0, text, 0}).values; })
        .def("score", [](const HashingBackend& b, const std::string& premise, const std::string& hypothesis) {
            return b.score(Sentence{0, premise, 0}, make_prompt(hypothesis));
        });

    // budget and metrics
    m.def("compute_budget",
          [](std::optional<double> rate, std::size_t base_size, std::size_t k) {
              return rate ? compute_budget(BudgetSpec{BudgetMode::Rate, *rate, 0, base_size})
                          : compute_budget(BudgetSpec{BudgetMode::Absolute, 0.0, k, 0});
          },
          py::arg("rate") = py::none(), py::arg("base_size") = 0, py::arg("k") = 0);
    m.def("dataset_size", [](const std::string& task) -> std::optional<std::pair<std::size_t, std::size_t>> {
        auto s = builtin_dataset_size(task);
        if (!s) return std::nullopt;
        return std::pair{s->train, s->budget_base};
    });
    m.def("agreement", [](const std::vector<ClassIndex>& v, const std::vector<ClassIndex>& s) { return agreement(v, s); });
    m.def("accuracy", [](const std::vector<ClassIndex>& s, const std::vector<ClassIndex>& g) { return accuracy(s, g); });
    m.def("format_cell", [](double mean, double std, double max) { return format_cell(Aggregate{mean, std, max}); });
    m.def("aggregate", [](const std::vector<double>& v) {
        const auto a = aggregate(v);
        return py::make_tuple(a.mean, a.std, a.max);
    });

    // selection
    m.def("filter_task_relevant",
          [](const std::vector<SentenceId>& ids, const std::map<SentenceId, double>& p_entailment, double epsilon) {
              ScoreTable table;
              for (const auto& [id, p] : p_entailment) table[id] = EntailmentScores{(1 - p) / 2, p, (1 - p) / 2};
              return filter_task_relevant(QueryPool(ids, PoolStage::Original), table,
                                          FilterConfig{epsilon, make_prompt("task")})
                  .ids();
          },
          py::arg("ids"), py::arg("p_entailment"), py::arg("epsilon") = kDefaultEpsilon);
    m.def("cosine_distance", [](const std::vector<float>& a, const std::vector<float>& b) {
        return cosine_distance(Embedding{a}, Embedding{b});
    });
    m.def("kmeans",
          [](const std::vector<std::vector<float>>& points, std::size_t k, std::size_t max_iterations, std::uint64_t seed) {
              const auto model = kmeans(to_embeddings(points), k, max_iterations, seed);
              py::dict d;
              d["centroids"] = model.centroids;
              d["assignment"] = model.assignment;
              d["iterations"] = model.iterations_run;
              d["inertia"] = model.inertia;
              d["inertia_trace"] = model.inertia_trace;
              return d;
          },
          py::arg("points"), py::arg("k"), py::arg("max_iterations") = kDefaultIterations, py::arg("seed") = 0);
    m.def("reduce_points",
          [](const std::vector<std::vector<float>>& points, const std::vector<SentenceId>& ids, std::size_t k,
             std::size_t max_iterations, std::uint64_t seed) {
              const auto r = reduce_points(to_embeddings(points), ids, k, max_iterations, seed);
              py::dict d;
              d["ids"] = r.representatives.ids();
              d["objective"] = r.objective_value;
              d["iterations"] = r.iterations_run;
              d["inertia"] = r.inertia;
              return d;
          },
          py::arg("points"), py::arg("ids"), py::arg("k"), py::arg("max_iterations") = kDefaultIterations,
          py::arg("seed") = 0);
    m.def("drc_objective", [](const std::vector<std::vector<float>>& points, const std::vector<std::size_t>& subset) {
        return drc_objective(subset, to_embeddings(points)).value;
    });
    m.def("brute_force_best_subset", [](const std::vector<std::vector<float>>& points, std::size_t k) {
        const auto b = brute_force_best_subset(to_embeddings(points), k);
        return py::make_tuple(b.members, b.objective);
    });
    m.def("random_sample",
          [](const std::vector<SentenceId>& ids, std::size_t k, std::uint64_t seed) {
              return random_sample(QueryPool(ids, PoolStage::Original), k, seed).ids();
          },
          py::arg("ids"), py::arg("k"), py::arg("seed") = 0);
    m.def("entropy", [](const std::vector<double>& p) { return entropy(p); });
    m.def("al_quotas", [](std::size_t k, std::size_t rounds, double seed_fraction) {
        return al_quotas(k, ALConfig{rounds, seed_fraction});
    }, py::arg("k"), py::arg("rounds") = 5, py::arg("seed_fraction") = 0.2);

    // student
    m.def("fit_linear_probe",
          [](const std::vector<std::vector<float>>& xs, const std::vector<ClassIndex>& ys, std::size_t num_classes,
             std::size_t epochs, double learning_rate, double weight_decay, std::size_t batch_size, std::uint64_t seed) {
              const auto model = fit_linear_probe(to_embeddings(xs), ys, num_classes,
                                                  TrainHyper{epochs, learning_rate, weight_decay, batch_size, seed});
              py::dict d;
              d["weights"] = model.weights;
              d["bias"] = model.bias;
              d["num_classes"] = model.num_classes;
              d["dim"] = model.dim;
              std::vector<ClassIndex> predicted;
              for (const auto& x : xs) predicted.push_back(predict(model, std::span<const float>(x)).label);
              d["train_predictions"] = predicted;
              return d;
          },
          py::arg("xs"), py::arg("ys"), py::arg("num_classes"), py::arg("epochs") = 10, py::arg("learning_rate") = 0.1,
          py::arg("weight_decay") = 1e-4, py::arg("batch_size") = 32, py::arg("seed") = 0);

    // chat victims
    m.def("task_prompt", [](const std::string& task) { return task_named(task).prompt.hypothesis_text; });
    m.def("task_labels", [](const std::string& task) { return task_named(task).label_names; });
    m.def("format_chat_batch", [](const std::string& task, const std::vector<std::string>& texts) {
        std::vector<Sentence> q;
        for (std::size_t i = 0; i < texts.size(); ++i) q.push_back(Sentence{i, texts[i], 0});
        return format_chat_batch(task_named(task), q);
    });
    m.def("parse_chat_response", [](const std::string& reply, std::size_t n, const std::string& task) {
        return parse_chat_response(reply, n, task_named(task));
    });

    // experiments
    py::class_<Config>(m, "Config")
        .def(py::init<>())
        .def_static("parse", &Config::parse)
        .def_static("load", &Config::load)
        .def("set", &Config::set)
        .def("apply_override", &Config::apply_override)
        .def("get", &Config::get)
        .def_property_readonly("entries", &Config::entries)
        .def("digest", [](const Config& c) { return hex64(c.digest()); })
        .def("to_ini", &Config::to_ini)
        .def_readwrite("base_dir", &Config::base_dir);
    m.def("run_experiment", [](const Config& cfg) { return report_dict(run_experiment(cfg)); });
    m.def("write_synthetic_task",
          [](const std::filesystem::path& dir, std::size_t pool_size, double relevant_fraction, std::uint64_t seed) {
              SynthOptions o;
              o.pool_size = pool_size;
              o.relevant_fraction = relevant_fraction;
              o.seed = seed;
              write_synthetic_task(make_synthetic_task(o), dir);
              return dir / "experiment.ini";
          },
          py::arg("dir"), py::arg("pool_size") = 2000, py::arg("relevant_fraction") = 0.1, py::arg("seed") = 7);
}
