// meaeq: command-line driver for the extraction pipeline.
//
//   synth -> ingest -> score -> filter -> reduce -> sample -> attack -> eval -> report
//
// Every stage reads and writes plain files. Exit codes: 0 success, 2 validation
// error, 3 backend or victim failure, 4 query budget exhausted. On failure the
// last stderr line is a JSON record {stage, code, exit, message}.

#include "meaeq/cluster.hpp"
#include "meaeq/config.hpp"
#include "meaeq/corpus.hpp"
#include "meaeq/error.hpp"
#include "meaeq/eval.hpp"
#include "meaeq/filter.hpp"
#include "meaeq/hash.hpp"
#include "meaeq/samplers.hpp"
#include "meaeq/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace meaeq;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum Exit : int { kOk = 0, kValidation = 2, kBackend = 3, kBudget = 4 };

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::BudgetExhausted: return kBudget;
    case ErrorCode::Backend:
    case ErrorCode::VictimUnavailable: return kBackend;
    default: return kValidation;
    }
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Flag that, when given, overrides one config key.
struct Binding {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
};

struct Stage {
    std::string name;
    CLI::App* app = nullptr;
    std::vector<std::unique_ptr<Binding>> bindings;

    void bind(const std::string& flag, const std::string& key, const std::string& help) {
        auto b = std::make_unique<Binding>();
        b->key = key;
        b->option = app->add_option(flag, b->value, help + " [" + key + "]");
        bindings.push_back(std::move(b));
    }

    void apply(Config& cfg) const {
        for (const auto& b : bindings) {
            if (b->option->count() > 0) cfg.set(b->key, b->value);
        }
    }
};

struct Globals {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
};

void require_exists(const fs::path& p) {
    if (!fs::exists(p)) fail(ErrorCode::Io, "missing input artifact: " + p.string());
}

void write_manifest(const std::string& stage, const std::vector<fs::path>& outputs, const std::vector<fs::path>& inputs,
                    const Config& cfg, const std::string& started, nlohmann::json extra = nlohmann::json::object()) {
    if (outputs.empty()) return;
    nlohmann::json m;
    m["stage"] = stage;
    m["tool_version"] = kToolVersion;
    m["config_digest"] = hex64(cfg.digest());
    m["started"] = started;
    m["finished"] = utc_now();
    m["inputs"] = nlohmann::json::array();
    for (const auto& p : inputs) m["inputs"].push_back(p.string());
    m["outputs"] = nlohmann::json::array();
    for (const auto& p : outputs) {
        require_exists(p);
        m["outputs"].push_back(p.string());
    }
    m["details"] = std::move(extra);
    write_file(fs::path(outputs.front().string() + ".manifest.json"), m.dump(2) + "\n");
}

std::uint64_t stage_seed(const Config& cfg) { return cfg.get_u64("seeds.stage", 0); }

// ---------------------------------------------------------------------------

int run_synth(const Config& cfg, const fs::path& out_dir) {
    SynthOptions o;
    o.pool_size = cfg.get_u64("corpus.pool_size", o.pool_size);
    o.relevant_fraction = cfg.get_double("corpus.relevant_fraction", o.relevant_fraction);
    o.dim = cfg.get_u64("backend.dim", o.dim);
    o.keyword = cfg.get_or("backend.keywords", o.keyword);
    o.victim_train_size = cfg.get_u64("victim.train_size", o.victim_train_size);
    o.eval_size = cfg.get_u64("task.eval_size", o.eval_size);
    o.seed = cfg.get_u64("seeds.stage", o.seed);
    const auto started = utc_now();
    const auto task = make_synthetic_task(o);
    write_synthetic_task(task, out_dir);
    std::cout << "synthetic task: pool " << task.store.size() << ", victim train " << task.victim_train.size()
              << ", eval " << task.eval.size() << " -> " << out_dir.string() << "\n";
    write_manifest("synth", {out_dir / "experiment.ini", out_dir / "store.jsonl", out_dir / "embeddings.mqemb"}, {},
                   cfg, started);
    return kOk;
}

int run_ingest(const Config& cfg, const fs::path& input, const fs::path& out) {
    require_exists(input);
    const auto started = utc_now();
    IngestOptions opts;
    opts.min_tokens = cfg.get_u64("corpus.min_tokens", opts.min_tokens);
    opts.max_tokens = cfg.get_u64("corpus.max_tokens", opts.max_tokens);
    opts.dedup = cfg.get_bool("corpus.dedup", opts.dedup);
    const auto store = ingest(input, opts);
    save_store(store, out);
    std::cout << "ingested " << store.size() << " sentences (digest " << hex64(store.source_digest()) << ")\n";
    write_manifest("ingest", {out}, {input}, cfg, started, {{"size", store.size()}});
    return kOk;
}

int run_score(const Config& cfg, const fs::path& store_path, const fs::path& out) {
    require_exists(store_path);
    const auto started = utc_now();
    const auto store = load_store(store_path);
    const auto task = task_from_config(cfg);
    const auto scorer = scorer_from_config(cfg);
    const auto scores = score_pool(QueryPool::all_of(store), store, *scorer, task.prompt);
    write_score_cache(out, scores);
    std::cout << "scored " << scores.size() << " sentences against \"" << task.prompt.hypothesis_text << "\"\n";
    write_manifest("score", {out}, {store_path}, cfg, started);
    return kOk;
}

int run_filter(const Config& cfg, const fs::path& store_path, const fs::path& scores_path, const fs::path& out) {
    require_exists(store_path);
    require_exists(scores_path);
    const auto started = utc_now();
    const auto store = load_store(store_path);
    const auto scores = read_score_cache(scores_path);
    FilterConfig fc;
    fc.epsilon = cfg.get_double("strategy.epsilon", kDefaultEpsilon);
    fc.prompt = task_from_config(cfg).prompt;
    const auto original = QueryPool::all_of(store);
    const auto filtered = filter_task_relevant(original, scores, fc);
    save_filtered_pool(out, filtered, scores);
    const auto rep = filter_report(original, filtered);
    std::cout << "kept " << rep.kept << ", dropped " << rep.dropped << ", keep_ratio " << rep.keep_ratio << "\n";
    write_manifest("filter", {out}, {store_path, scores_path}, cfg, started,
                   {{"kept", rep.kept}, {"dropped", rep.dropped}, {"keep_ratio", rep.keep_ratio}});
    return kOk;
}

int run_reduce(const Config& cfg, const fs::path& store_path, const fs::path& pool_path, const fs::path& out) {
    require_exists(store_path);
    require_exists(pool_path);
    const auto started = utc_now();
    const auto store = load_store(store_path);
    const auto pool = load_filtered_pool(pool_path);
    const auto embedder = embedder_from_config(cfg);
    const auto k = compute_budget(resolve_experiment(cfg).budget);
    const auto iters = cfg.get_u64("strategy.iterations", kDefaultIterations);
    const auto result = reduce(pool, store, *embedder, k, iters, stage_seed(cfg));
    save_reduction(out, result);
    std::cout << "selected " << result.representatives.size() << " representatives from " << pool.size()
              << " (objective " << result.objective_value << ", " << result.iterations_run << " iterations)\n";
    write_manifest("reduce", {out}, {store_path, pool_path}, cfg, started);
    return kOk;
}

QuerySet query_set_from(const std::string& strategy, const QueryPool& pool, const CorpusStore& store,
                        const Config& cfg) {
    QuerySet set;
    set.header = QuerySetHeader{strategy, stage_seed(cfg), pool.size(), cfg.digest()};
    set.queries = pool.resolve(store);
    return set;
}

int run_sample(const Config& cfg, const fs::path& store_path, const std::optional<fs::path>& reduction_path,
               const std::optional<fs::path>& pool_path, const fs::path& out, const std::optional<fs::path>& labels_out) {
    require_exists(store_path);
    const auto started = utc_now();
    const auto store = std::make_shared<const CorpusStore>(load_store(store_path));
    const auto x = resolve_experiment(cfg);
    const auto k = compute_budget(x.budget);
    const auto seed = stage_seed(cfg);
    const auto original = QueryPool::all_of(*store);
    std::vector<fs::path> inputs{store_path};
    QuerySet set;

    switch (x.strategy.strategy) {
    case Strategy::RandomSampling:
        set = query_set_from("rs", random_sample(original, k, seed), *store, cfg);
        break;
    case Strategy::Meaeq: {
        if (reduction_path) {
            require_exists(*reduction_path);
            inputs.push_back(*reduction_path);
            auto ids = load_reduction(*reduction_path).representatives.ids();
            if (ids.size() > k) fail(ErrorCode::Inconsistent, "reduction holds more than k representatives");
            if (ids.size() < k) {
                if (!pool_path) fail(ErrorCode::Config, "reduction is short of k; pass --pool to top it up");
                require_exists(*pool_path);
                inputs.push_back(*pool_path);
                std::vector<SentenceId> rest;
                for (auto id : load_filtered_pool(*pool_path).ids()) {
                    if (std::find(ids.begin(), ids.end(), id) == ids.end()) rest.push_back(id);
                }
                const auto extra = random_sample(QueryPool(std::move(rest), PoolStage::Filtered), k - ids.size(),
                                                 derive_seed(seed, 0x746f7075ULL));
                ids.insert(ids.end(), extra.ids().begin(), extra.ids().end());
                std::sort(ids.begin(), ids.end());
            }
            set = query_set_from("meaeq", QueryPool(std::move(ids), PoolStage::Reduced), *store, cfg);
        } else {
            const auto scorer = scorer_from_config(cfg);
            const auto embedder = embedder_from_config(cfg);
            const auto sel = meaeq_sample(original, *store, *scorer, *embedder, x.strategy.filter, k,
                                          x.strategy.iterations, seed);
            set = query_set_from("meaeq", sel.queries, *store, cfg);
        }
        break;
    }
    case Strategy::ActiveRandom:
    case Strategy::ActiveUncertainty: {
        const auto task = task_from_config(cfg);
        const auto embedder = embedder_from_config(cfg);
        const auto victim = victim_from_config(cfg, embedder, task);
        QueryLedger ledger(k);
        auto hyper = x.student;
        hyper.seed = seed;
        const auto kind = x.strategy.strategy == Strategy::ActiveRandom ? ALStrategy::Random : ALStrategy::Uncertainty;
        const auto al = al_loop(original, *store, k, x.strategy.al, kind, *victim, ledger, *embedder,
                                task.num_classes, hyper, seed);
        set = query_set_from(std::string(to_string(x.strategy.strategy)), al.queries, *store, cfg);
        if (labels_out) save_labeled(*labels_out, al.pairs);
        break;
    }
    }

    save_query_set(out, set);
    std::cout << "sampled " << set.queries.size() << " queries with " << set.header.strategy << "\n";
    write_manifest("sample", {out}, inputs, cfg, started);
    return kOk;
}

int run_attack(const Config& cfg, const std::optional<fs::path>& queries_path,
               const std::optional<fs::path>& reduction_path, const std::optional<fs::path>& store_path,
               const fs::path& labels_out, const fs::path& model_out, bool dry_run) {
    QuerySet set;
    std::vector<fs::path> inputs;
    if (queries_path) {
        require_exists(*queries_path);
        inputs.push_back(*queries_path);
        set = load_query_set(*queries_path);
    } else if (reduction_path) {
        if (!store_path) fail(ErrorCode::Config, "attack --reduction needs --store");
        require_exists(*reduction_path);
        require_exists(*store_path);
        inputs = {*reduction_path, *store_path};
        const auto store = load_store(*store_path);
        set = query_set_from("meaeq", load_reduction(*reduction_path).representatives, store, cfg);
    } else {
        fail(ErrorCode::Config, "attack needs --queries (from sample) or --reduction");
    }

    const auto budget = cfg.has("budget.k") || cfg.has("budget.rate") ? compute_budget(resolve_experiment(cfg).budget)
                                                                       : set.queries.size();
    if (dry_run) {
        std::cout << "dry run: would send " << set.queries.size() << " queries (budget " << budget << ")\n";
        return kOk;
    }

    const auto started = utc_now();
    const auto task = task_from_config(cfg);
    const auto embedder = embedder_from_config(cfg);
    const auto victim = victim_from_config(cfg, embedder, task);
    QueryLedger ledger(budget);
    const auto responses = query_victim(*victim, set.queries, ledger);

    std::vector<LabeledPair> pairs;
    for (std::size_t i = 0; i < set.queries.size(); ++i) pairs.push_back(LabeledPair{set.queries[i], responses[i].label});
    save_labeled(labels_out, pairs);

    auto hyper = hyper_from_config(cfg, "student", TrainHyper{});
    hyper.seed = stage_seed(cfg);
    const auto student = train_student_or_constant(pairs, *embedder, task.num_classes, hyper);
    save_student(model_out, student);
    std::cout << "victim answered " << ledger.spent() << " of budget " << ledger.budget() << "; student trained on "
              << student.trained_on << " pairs\n";
    write_manifest("attack", {labels_out, model_out}, inputs, cfg, started,
                   {{"spent", ledger.spent()}, {"budget", ledger.budget()}});
    return kOk;
}

int run_eval(const Config& cfg, const std::optional<fs::path>& model_path, const std::string& label,
             const fs::path& out) {
    const auto started = utc_now();
    MetricsReport report;
    std::vector<fs::path> inputs;
    if (model_path) {
        require_exists(*model_path);
        inputs.push_back(*model_path);
        const auto ctx = build_context(cfg);
        const auto student = load_student(*model_path);
        const auto m = evaluate_student(ctx, student, stage_seed(cfg));
        report = make_report(label, student.trained_on, {m}, {}, cfg.digest());
    } else {
        report = run_experiment(cfg);
    }
    save_report_json(out, report);
    std::cout << emit_report(report, ReportFormat::Markdown);
    write_manifest("eval", {out}, inputs, cfg, started);
    return kOk;
}

int run_report(const Config& cfg, const std::vector<fs::path>& metrics, const std::string& format,
               const std::optional<fs::path>& out, const std::optional<fs::path>& words_from, std::size_t top_n,
               const std::optional<fs::path>& stopwords_path) {
    std::string doc;
    std::vector<fs::path> inputs;
    if (!metrics.empty()) {
        std::vector<MetricsReport> reports;
        for (const auto& p : metrics) {
            require_exists(p);
            inputs.push_back(p);
            reports.push_back(load_report_json(p));
        }
        if (format == "markdown" || format == "md") {
            doc = render_markdown_table(reports);
        } else if (format == "csv") {
            for (const auto& r : reports) doc += emit_report(r, ReportFormat::Csv);
        } else {
            fail(ErrorCode::Config, "unknown report format '" + format + "' (expected markdown or csv)");
        }
    }
    if (words_from) {
        require_exists(*words_from);
        inputs.push_back(*words_from);
        const auto set = load_query_set(*words_from);
        const auto stop = stopwords_path ? load_stopwords(*stopwords_path) : default_stopwords();
        doc += "\n| Word | Count |\n|---|---:|\n";
        for (const auto& [w, c] : top_frequent_words(set.queries, top_n, stop)) {
            doc += "| " + w + " | " + std::to_string(c) + " |\n";
        }
    }
    if (doc.empty()) fail(ErrorCode::Config, "report needs --metrics and/or --words-from");
    if (out) {
        const auto started = utc_now();
        write_file(*out, doc);
        write_manifest("report", {*out}, inputs, cfg, started);
    } else {
        std::cout << doc;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"meaeq: query selection, victim querying and evaluation for model extraction experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Globals g;
    app.add_option("--config", g.config_path, "Experiment config (INI sections task/corpus/backend/strategy/...)");
    app.add_option("--set", g.overrides, "Override a config key: section.key=value (repeatable)");
    app.add_option("--seed", g.seed, "Seed for all randomness in this stage [seeds.stage]");

    std::vector<std::unique_ptr<Stage>> stages;
    auto stage = [&](const std::string& name, const std::string& help) -> Stage& {
        auto s = std::make_unique<Stage>();
        s->name = name;
        s->app = app.add_subcommand(name, help);
        stages.push_back(std::move(s));
        return *stages.back();
    };

    // synth
    std::string synth_dir;
    auto& synth = stage("synth", "Generate the synthetic two-class extraction task");
    synth.app->add_option("--out-dir", synth_dir, "Output directory")->required();
    synth.bind("--pool-size", "corpus.pool_size", "Number of pool sentences");
    synth.bind("--relevant-fraction", "corpus.relevant_fraction", "Fraction of task-relevant pool sentences");
    synth.bind("--dim", "backend.dim", "Embedding dimension");
    synth.bind("--keyword", "backend.keywords", "Task keyword");

    // ingest
    std::string ingest_in, ingest_out;
    auto& ing = stage("ingest", "Segment a text corpus into the original query pool");
    ing.app->add_option("--input", ingest_in, "UTF-8 text file")->required();
    ing.app->add_option("--out", ingest_out, "Store file (JSON lines)")->required();
    ing.bind("--min-tokens", "corpus.min_tokens", "Minimum whitespace tokens");
    ing.bind("--max-tokens", "corpus.max_tokens", "Maximum whitespace tokens");
    ing.bind("--dedup", "corpus.dedup", "Drop duplicate sentences (true/false)");

    // score
    std::string score_store, score_out;
    auto& sc = stage("score", "Score every pool sentence against the task prompt");
    sc.app->add_option("--store", score_store, "Store file")->required();
    sc.app->add_option("--out", score_out, "Score cache (JSON lines)")->required();
    sc.bind("--backend", "backend.scores", "test, cache or http");
    sc.bind("--keywords", "backend.keywords", "Keywords for the test backend (comma separated)");
    sc.bind("--prompt", "task.prompt", "Hypothesis text");
    sc.bind("--task", "task.name", "Built-in task name");

    // filter
    std::string filter_store, filter_scores, filter_out;
    auto& fl = stage("filter", "Keep sentences whose entailment probability reaches epsilon");
    fl.app->add_option("--store", filter_store, "Store file")->required();
    fl.app->add_option("--scores", filter_scores, "Score cache")->required();
    fl.app->add_option("--out", filter_out, "Filtered pool (JSON lines)")->required();
    fl.bind("--epsilon", "strategy.epsilon", "Entailment threshold");

    // reduce
    std::string reduce_store, reduce_pool, reduce_out;
    auto& rd = stage("reduce", "Cluster the filtered pool and keep one representative per cluster");
    rd.app->add_option("--store", reduce_store, "Store file")->required();
    rd.app->add_option("--pool", reduce_pool, "Filtered pool")->required();
    rd.app->add_option("--out", reduce_out, "Reduction (JSON lines)")->required();
    rd.bind("--k", "budget.k", "Number of clusters / queries");
    rd.bind("--iterations", "strategy.iterations", "k-means iterations");
    rd.bind("--embeddings", "backend.embeddings", "test, cache or http");
    rd.bind("--embedding-cache", "backend.embedding_cache", "Embedding cache file");

    // sample
    std::string sample_store, sample_out;
    std::optional<std::string> sample_reduction, sample_pool, sample_labels;
    auto& sm = stage("sample", "Select a query set with rs, al-rs, al-us or meaeq");
    sm.app->add_option("--store", sample_store, "Store file")->required();
    sm.app->add_option("--out", sample_out, "Query set (JSON lines)")->required();
    sm.app->add_option("--reduction", sample_reduction, "Reduction from `reduce` (meaeq)");
    sm.app->add_option("--pool", sample_pool, "Filtered pool used to top up a short reduction (meaeq)");
    sm.app->add_option("--labels-out", sample_labels, "Where al-* strategies write the labels they bought");
    sm.bind("--strategy", "strategy.name", "rs, al-rs, al-us or meaeq");
    sm.bind("--k", "budget.k", "Query budget");
    sm.bind("--rate", "budget.rate", "Budget as a rate of --base-size");
    sm.bind("--base-size", "budget.base_size", "Dataset size the rate applies to");
    sm.bind("--epsilon", "strategy.epsilon", "Entailment threshold");
    sm.bind("--rounds", "strategy.rounds", "Active-learning rounds");

    // attack
    std::optional<std::string> attack_queries, attack_reduction, attack_store;
    std::string attack_labels, attack_model;
    bool dry_run = false;
    auto& at = stage("attack", "Query the victim for hard labels and train the student");
    at.app->add_option("--queries", attack_queries, "Query set from `sample`");
    at.app->add_option("--reduction", attack_reduction, "Reduction from `reduce` (alternative to --queries)");
    at.app->add_option("--store", attack_store, "Store file (with --reduction)");
    at.app->add_option("--labels-out", attack_labels, "Labeled pairs (JSON lines)")->required();
    at.app->add_option("--model-out", attack_model, "Student model (binary)")->required();
    at.app->add_flag("--dry-run", dry_run, "Print the query count without contacting the victim");
    at.bind("--k", "budget.k", "Query budget enforced by the ledger");
    at.bind("--victim", "victim.kind", "simulated or remote");
    at.bind("--victim-url", "victim.url", "Remote victim base URL");
    at.bind("--victim-train", "victim.train", "Labeled data for the simulated victim");
    at.bind("--victim-timeout-ms", "victim.timeout_ms", "Remote victim timeout");
    at.bind("--victim-retries", "victim.retries", "Remote victim retries (exponential backoff)");
    at.bind("--epochs", "student.epochs", "Student epochs");

    // eval
    std::optional<std::string> eval_model;
    std::string eval_out, eval_label = "student";
    auto& ev = stage("eval", "Agreement/accuracy of a student, or a full multi-seed experiment");
    ev.app->add_option("--model", eval_model, "Student model; omit to run the whole experiment from --config");
    ev.app->add_option("--label", eval_label, "Row label for a single-model evaluation");
    ev.app->add_option("--out", eval_out, "Metrics (JSON)")->required();
    ev.bind("--eval-set", "task.eval", "Labeled evaluation set");
    ev.bind("--strategy", "strategy.name", "Strategy for a full experiment");
    ev.bind("--k", "budget.k", "Query budget for a full experiment");
    ev.bind("--seeds", "seeds.values", "Comma-separated seeds");

    // report
    std::vector<std::string> report_metrics;
    std::string report_format = "markdown";
    std::optional<std::string> report_out, report_words, report_stop;
    std::size_t top_n = 20;
    auto& rp = stage("report", "Render metrics as a markdown/csv table and query-set word statistics");
    rp.app->add_option("--metrics", report_metrics, "Metrics JSON files (repeatable)");
    rp.app->add_option("--format", report_format, "markdown or csv");
    rp.app->add_option("--out", report_out, "Output file (default stdout)");
    rp.app->add_option("--words-from", report_words, "Query set to list the most frequent words of");
    rp.app->add_option("--top", top_n, "How many words to list");
    rp.app->add_option("--stopwords", report_stop, "Stopword file replacing the built-in list");

    std::string current = "cli";
    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForVersion& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            throw Error(ErrorCode::Config, e.what());
        }

        Config cfg = g.config_path.empty() ? Config{} : Config::load(g.config_path);
        for (const auto& o : g.overrides) cfg.apply_override(o);
        if (g.seed) cfg.set("seeds.stage", std::to_string(*g.seed));

        const Stage* active = nullptr;
        for (const auto& s : stages) {
            if (s->app->parsed()) active = s.get();
        }
        current = active->name;
        active->apply(cfg);

        auto opt_path = [](const std::optional<std::string>& s) -> std::optional<fs::path> {
            return s ? std::optional<fs::path>(*s) : std::nullopt;
        };

        if (current == "synth") return run_synth(cfg, synth_dir);
        if (current == "ingest") return run_ingest(cfg, ingest_in, ingest_out);
        if (current == "score") return run_score(cfg, score_store, score_out);
        if (current == "filter") return run_filter(cfg, filter_store, filter_scores, filter_out);
        if (current == "reduce") return run_reduce(cfg, reduce_store, reduce_pool, reduce_out);
        if (current == "sample") {
            return run_sample(cfg, sample_store, opt_path(sample_reduction), opt_path(sample_pool), sample_out,
                              opt_path(sample_labels));
        }
        if (current == "attack") {
            return run_attack(cfg, opt_path(attack_queries), opt_path(attack_reduction), opt_path(attack_store),
                              attack_labels, attack_model, dry_run);
        }
        if (current == "eval") return run_eval(cfg, opt_path(eval_model), eval_label, eval_out);
        if (current == "report") {
            std::vector<fs::path> metrics(report_metrics.begin(), report_metrics.end());
            return run_report(cfg, metrics, report_format, opt_path(report_out), opt_path(report_words), top_n,
                              opt_path(report_stop));
        }
        fail(ErrorCode::Config, "unknown subcommand");
    } catch (const Error& e) {
        const int code = exit_code_for(e.code());
        std::cerr << nlohmann::json{{"stage", current},
                                    {"code", std::string(to_string(e.code()))},
                                    {"exit", code},
                                    {"message", e.what()}}
                         .dump()
                  << std::endl;
        return code;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"stage", current}, {"code", "Internal"}, {"exit", kValidation}, {"message", e.what()}}
                         .dump()
                  << std::endl;
        return kValidation;
    }
}
