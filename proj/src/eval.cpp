#include "meaeq/eval.hpp"

#include "meaeq/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace meaeq {

double agreement(std::span<const ClassIndex> victim_labels, std::span<const ClassIndex> student_labels) {
    if (victim_labels.size() != student_labels.size()) {
        fail(ErrorCode::Shape, "label lists differ in length (" + std::to_string(victim_labels.size()) + " vs " +
                                   std::to_string(student_labels.size()) + ")");
    }
    if (victim_labels.empty()) fail(ErrorCode::Shape, "agreement over an empty label list");
    std::size_t same = 0;
    for (std::size_t i = 0; i < victim_labels.size(); ++i) same += victim_labels[i] == student_labels[i];
    return static_cast<double>(same) / static_cast<double>(victim_labels.size());
}

double accuracy(std::span<const ClassIndex> student_labels, std::span<const ClassIndex> gold_labels) {
    return agreement(gold_labels, student_labels);
}

std::vector<LabeledPair> load_labeled(const std::filesystem::path& path, std::size_t num_classes) {
    std::istringstream in(read_file(path));
    std::vector<LabeledPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto rec = nlohmann::json::parse(line);
            LabeledPair p{Sentence{rec.at("id").get<SentenceId>(), rec.at("text").get<std::string>(), 0},
                          rec.at("label").get<ClassIndex>()};
            if (p.label >= num_classes) {
                fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": label out of range");
            }
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (out.empty()) fail(ErrorCode::Format, path.string() + ": no labeled records");
    return out;
}

void save_labeled(const std::filesystem::path& path, std::span<const LabeledPair> pairs) {
    std::ostringstream os;
    for (const auto& p : pairs) {
        os << nlohmann::json{{"id", p.query.id}, {"text", p.query.text}, {"label", p.label}}.dump() << '\n';
    }
    write_file(path, os.str());
}

// ---------------------------------------------------------------------------

Aggregate aggregate(std::span<const double> values) {
    if (values.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return Aggregate{nan, nan, nan};
    }
    double sum = 0.0;
    double mx = values.front();
    double mn = values.front();
    for (double v : values) {
        sum += v;
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    // Repeated identical runs must report exactly zero spread.
    if (mn == mx) return Aggregate{mx, 0.0, mx};
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return Aggregate{mean, std::sqrt(ss / static_cast<double>(values.size())), mx};
}

MetricsReport make_report(std::string strategy, std::size_t k, std::vector<SeedMetrics> per_seed,
                          std::vector<SeedFailure> failures, std::uint64_t config_digest) {
    MetricsReport r;
    r.strategy = std::move(strategy);
    r.k = k;
    r.config_digest = config_digest;
    std::stable_sort(per_seed.begin(), per_seed.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    std::stable_sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    std::vector<double> agr, acc;
    for (const auto& s : per_seed) {
        agr.push_back(s.agreement);
        acc.push_back(s.accuracy);
    }
    r.agreement = aggregate(agr);
    r.accuracy = aggregate(acc);
    r.per_seed = std::move(per_seed);
    r.failures = std::move(failures);
    return r;
}

std::string format_cell(const Aggregate& a) {
    if (std::isnan(a.mean)) return "n/a";
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.1f \xC2\xB1 %.1f (%.1f)", a.mean * 100.0, a.std * 100.0, a.max * 100.0);
    return buf;
}

namespace {

std::string gap_marker(const MetricsReport& r) {
    if (r.complete()) return "";
    const auto total = r.per_seed.size() + r.failures.size();
    return " [incomplete " + std::to_string(r.per_seed.size()) + "/" + std::to_string(total) + " seeds]";
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_num(const std::string& s) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        fail(ErrorCode::Format, "report csv: bad number '" + s + "'");
    }
}

} // namespace

std::string render_markdown_table(std::span<const MetricsReport> reports) {
    std::ostringstream os;
    os << "| Strategy | Queries (k) | Agreement (%) | Accuracy (%) |\n";
    os << "|---|---:|---|---|\n";
    for (const auto& r : reports) {
        const auto gap = gap_marker(r);
        os << "| " << r.strategy << " | " << r.k << " | " << format_cell(r.agreement) << gap << " | "
           << format_cell(r.accuracy) << gap << " |\n";
    }
    return os.str();
}

std::string emit_report(const MetricsReport& report, ReportFormat format) {
    if (format == ReportFormat::Markdown) return render_markdown_table(std::span<const MetricsReport>(&report, 1));

    std::ostringstream os;
    os << "# strategy=" << report.strategy << ",k=" << report.k << ",config_digest=" << hex64(report.config_digest)
       << '\n';
    os << "row,seed,agreement,accuracy,message\n";
    for (const auto& s : report.per_seed) {
        os << "seed," << s.seed << ',' << num17(s.agreement) << ',' << num17(s.accuracy) << ",\n";
    }
    for (const auto& f : report.failures) os << "failed," << f.seed << ",,," << csv_escape(f.message) << '\n';
    os << "mean,," << num17(report.agreement.mean) << ',' << num17(report.accuracy.mean) << ",\n";
    os << "std,," << num17(report.agreement.std) << ',' << num17(report.accuracy.std) << ",\n";
    os << "max,," << num17(report.agreement.max) << ',' << num17(report.accuracy.max) << ",\n";
    return os.str();
}

MetricsReport parse_report_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    MetricsReport r;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            for (const auto& field : csv_split(line.substr(2))) {
                const auto eq = field.find('=');
                if (eq == std::string::npos) continue;
                const auto key = field.substr(0, eq);
                const auto value = field.substr(eq + 1);
                if (key == "strategy") r.strategy = value;
                if (key == "k") r.k = std::stoull(value);
                if (key == "config_digest") r.config_digest = std::stoull(value, nullptr, 16);
            }
            continue;
        }
        const auto f = csv_split(line);
        if (f.size() != 5) fail(ErrorCode::Format, "report csv: expected 5 fields in '" + line + "'");
        if (f[0] == "row") {
            saw_header = true;
        } else if (f[0] == "seed") {
            r.per_seed.push_back(SeedMetrics{std::stoull(f[1]), parse_num(f[2]), parse_num(f[3])});
        } else if (f[0] == "failed") {
            r.failures.push_back(SeedFailure{std::stoull(f[1]), f[4]});
        } else if (f[0] == "mean") {
            r.agreement.mean = parse_num(f[2]);
            r.accuracy.mean = parse_num(f[3]);
        } else if (f[0] == "std") {
            r.agreement.std = parse_num(f[2]);
            r.accuracy.std = parse_num(f[3]);
        } else if (f[0] == "max") {
            r.agreement.max = parse_num(f[2]);
            r.accuracy.max = parse_num(f[3]);
        } else {
            fail(ErrorCode::Format, "report csv: unknown row kind '" + f[0] + "'");
        }
    }
    if (!saw_header) fail(ErrorCode::Format, "report csv: missing column header");
    return r;
}

void save_report_json(const std::filesystem::path& path, const MetricsReport& r) {
    auto agg = [](const Aggregate& a) {
        auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
        return nlohmann::json{{"mean", num(a.mean)}, {"std", num(a.std)}, {"max", num(a.max)}};
    };
    nlohmann::json j;
    j["strategy"] = r.strategy;
    j["k"] = r.k;
    j["config_digest"] = hex64(r.config_digest);
    j["per_seed"] = nlohmann::json::array();
    for (const auto& s : r.per_seed) {
        j["per_seed"].push_back({{"seed", s.seed}, {"agreement", s.agreement}, {"accuracy", s.accuracy}});
    }
    j["failures"] = nlohmann::json::array();
    for (const auto& f : r.failures) j["failures"].push_back({{"seed", f.seed}, {"message", f.message}});
    j["agreement"] = agg(r.agreement);
    j["accuracy"] = agg(r.accuracy);
    write_file(path, j.dump(2) + "\n");
}

MetricsReport load_report_json(const std::filesystem::path& path) {
    try {
        auto j = nlohmann::json::parse(read_file(path));
        std::vector<SeedMetrics> per_seed;
        for (const auto& s : j.at("per_seed")) {
            per_seed.push_back(SeedMetrics{s.at("seed").get<std::uint64_t>(), s.at("agreement").get<double>(),
                                           s.at("accuracy").get<double>()});
        }
        std::vector<SeedFailure> failures;
        for (const auto& f : j.at("failures")) {
            failures.push_back(SeedFailure{f.at("seed").get<std::uint64_t>(), f.at("message").get<std::string>()});
        }
        return make_report(j.at("strategy").get<std::string>(), j.at("k").get<std::size_t>(), std::move(per_seed),
                           std::move(failures), std::stoull(j.at("config_digest").get<std::string>(), nullptr, 16));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Format, path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

std::set<std::string> default_stopwords() {
    return {"a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",    "at",
            "be",    "been",  "but",   "by",    "can",   "could", "did",   "do",    "does",  "for",   "from",
            "had",   "has",   "have",  "he",    "her",   "his",   "i",     "if",    "in",    "into",  "is",
            "it",    "its",   "more",  "most",  "no",    "not",   "of",    "on",    "one",   "or",    "other",
            "our",   "out",   "she",   "so",    "some",  "such",  "than",  "that",  "the",   "their", "them",
            "then",  "there", "these", "they",  "this",  "those", "to",    "two",   "up",    "was",   "we",
            "were",  "what",  "when",  "which", "while", "who",   "will",  "with",  "would", "you",   "your",
            "s",     "t",     "first", "new",   "time",  "over",  "only",  "after", "where", "how",   "been",
            "being", "both",  "each",  "few",   "him",   "me",    "my",    "nor",   "own",   "same",  "too",
            "very",  "just",  "should", "now",  "between", "during", "before", "under", "until", "against"};
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::set<std::string> out;
    for (auto& w : word_tokens(read_file(path))) out.insert(std::move(w));
    return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::pair<std::string, std::size_t>> top_frequent_words(std::span<const Sentence> queries, std::size_t n,
                                                                    const std::set<std::string>& stopwords) {
    if (n == 0) fail(ErrorCode::Config, "top_frequent_words needs n >= 1");
    std::map<std::string, std::size_t> counts;
    for (const auto& q : queries) {
        for (auto& w : word_tokens(q.text)) {
            if (!stopwords.contains(w)) ++counts[std::move(w)];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (out.size() > n) out.resize(n);
    return out;
}

// ---------------------------------------------------------------------------

Strategy parse_strategy(std::string_view name) {
    if (name == "rs" || name == "random") return Strategy::RandomSampling;
    if (name == "al-rs") return Strategy::ActiveRandom;
    if (name == "al-us") return Strategy::ActiveUncertainty;
    if (name == "meaeq") return Strategy::Meaeq;
    fail(ErrorCode::Config, "unknown strategy '" + std::string(name) + "' (expected rs, al-rs, al-us or meaeq)");
}

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
    case Strategy::RandomSampling: return "rs";
    case Strategy::ActiveRandom: return "al-rs";
    case Strategy::ActiveUncertainty: return "al-us";
    case Strategy::Meaeq: return "meaeq";
    }
    return "unknown";
}

SeedOutcome attack_once(const ExperimentContext& ctx, const StrategyConfig& strategy, std::size_t k,
                        const TrainHyper& student_hyper, std::uint64_t seed) {
    const auto& store = *ctx.store;
    const auto original = QueryPool::all_of(store);
    auto hyper = student_hyper;
    hyper.seed = seed;
    QueryLedger ledger(k);

    SeedOutcome out;
    if (strategy.strategy == Strategy::ActiveRandom || strategy.strategy == Strategy::ActiveUncertainty) {
        const auto kind = strategy.strategy == Strategy::ActiveRandom ? ALStrategy::Random : ALStrategy::Uncertainty;
        auto al = al_loop(original, store, k, strategy.al, kind, *ctx.victim, ledger, *ctx.embedder,
                          ctx.task.num_classes, hyper, seed);
        out.queries = al.queries.resolve(store);
        out.pairs = std::move(al.pairs);
        out.student = std::move(al.student);
        return out;
    }

    QueryPool chosen;
    if (strategy.strategy == Strategy::RandomSampling) {
        chosen = random_sample(original, k, seed);
    } else {
        chosen = meaeq_sample(original, store, *ctx.scorer, *ctx.embedder, strategy.filter, k, strategy.iterations, seed)
                     .queries;
    }
    out.queries = chosen.resolve(store);
    const auto responses = query_victim(*ctx.victim, out.queries, ledger);
    for (std::size_t i = 0; i < out.queries.size(); ++i) out.pairs.push_back(LabeledPair{out.queries[i], responses[i].label});
    out.student = train_student_or_constant(out.pairs, *ctx.embedder, ctx.task.num_classes, hyper);
    return out;
}

SeedMetrics evaluate_student(const ExperimentContext& ctx, const StudentModel& student, std::uint64_t seed) {
    if (ctx.eval.empty()) fail(ErrorCode::Config, "evaluation set is empty");
    std::vector<Sentence> texts;
    std::vector<ClassIndex> gold;
    for (const auto& p : ctx.eval) {
        texts.push_back(p.query);
        gold.push_back(p.label);
    }
    const auto victim_labels = ctx.victim->classify(texts);
    std::vector<ClassIndex> student_labels;
    for (const auto& e : ctx.embedder->embed_batch(texts)) student_labels.push_back(predict(student, e).label);
    return SeedMetrics{seed, agreement(victim_labels, student_labels), accuracy(student_labels, gold)};
}

MetricsReport run_experiment(const ExperimentContext& ctx, const StrategyConfig& strategy, std::size_t k,
                             const TrainHyper& student_hyper, std::span<const std::uint64_t> seeds,
                             std::uint64_t config_digest) {
    if (seeds.empty()) fail(ErrorCode::Config, "experiment needs at least one seed");
    std::vector<SeedMetrics> per_seed;
    std::vector<SeedFailure> failures;
    for (auto seed : seeds) {
        try {
            const auto outcome = attack_once(ctx, strategy, k, student_hyper, seed);
            per_seed.push_back(evaluate_student(ctx, outcome.student, seed));
        } catch (const Error& e) {
            failures.push_back(SeedFailure{seed, std::string(to_string(e.code())) + ": " + e.what()});
        }
    }
    return make_report(std::string(to_string(strategy.strategy)), k, std::move(per_seed), std::move(failures),
                       config_digest);
}

// ---------------------------------------------------------------------------

TaskSpec task_from_config(const Config& cfg) {
    const auto name = cfg.get_or("task.name", "hate_speech");
    TaskSpec task = builtin_task(name).value_or(TaskSpec{name, 2, {}, {}, {}});
    if (auto labels = cfg.get_list("task.labels"); !labels.empty()) {
        task.label_names = labels;
        task.num_classes = labels.size();
    }
    task.num_classes = cfg.get_u64("task.num_classes", task.num_classes);
    if (auto p = cfg.get("task.prompt")) task.prompt = make_prompt(*p);
    if (auto ci = cfg.get("task.chat_instruction")) task.chat_instruction = *ci;
    task.validate();
    return task;
}

TrainHyper hyper_from_config(const Config& cfg, const std::string& section, const TrainHyper& defaults) {
    TrainHyper h = defaults;
    h.epochs = cfg.get_u64(section + ".epochs", h.epochs);
    h.learning_rate = cfg.get_double(section + ".learning_rate", h.learning_rate);
    h.weight_decay = cfg.get_double(section + ".weight_decay", h.weight_decay);
    h.batch_size = cfg.get_u64(section + ".batch_size", h.batch_size);
    h.seed = cfg.get_u64(section + ".seed", h.seed);
    return h;
}

std::shared_ptr<const CorpusStore> store_from_config(const Config& cfg) {
    if (auto store = cfg.get("corpus.store")) {
        return std::make_shared<const CorpusStore>(load_store(resolve_path(cfg, *store)));
    }
    auto path = cfg.get("corpus.path");
    if (!path) fail(ErrorCode::Config, "config needs corpus.store or corpus.path");
    IngestOptions opts;
    opts.min_tokens = cfg.get_u64("corpus.min_tokens", opts.min_tokens);
    opts.max_tokens = cfg.get_u64("corpus.max_tokens", opts.max_tokens);
    opts.dedup = cfg.get_bool("corpus.dedup", opts.dedup);
    return std::make_shared<const CorpusStore>(ingest(resolve_path(cfg, *path), opts));
}

namespace {

HttpOptions http_options(const Config& cfg) {
    HttpOptions o;
    o.base_url = sidecar_url_from_env(cfg.get_or("backend.url", o.base_url));
    o.timeout = std::chrono::milliseconds(cfg.get_u64("backend.timeout_ms", o.timeout.count()));
    o.retries = static_cast<int>(cfg.get_u64("backend.retries", o.retries));
    o.max_batch = cfg.get_u64("backend.max_batch", o.max_batch);
    return o;
}

std::shared_ptr<HashingBackend> hashing_backend(const Config& cfg) {
    return std::make_shared<HashingBackend>(cfg.get_u64("backend.dim", 16), cfg.get_u64("backend.seed", 0),
                                            cfg.get_list("backend.keywords"));
}

} // namespace

std::shared_ptr<const EntailmentScorer> scorer_from_config(const Config& cfg) {
    const auto kind = cfg.get_or("backend.scores", "test");
    if (kind == "test") return hashing_backend(cfg);
    if (kind == "cache") {
        auto path = cfg.get("backend.score_cache");
        if (!path) fail(ErrorCode::Config, "backend.scores=cache needs backend.score_cache");
        return std::make_shared<CachedBackend>(CachedBackend::load(resolve_path(cfg, *path), std::nullopt));
    }
    if (kind == "http") return std::make_shared<HttpBackend>(http_options(cfg));
    fail(ErrorCode::Config, "unknown backend.scores '" + kind + "' (expected test, cache or http)");
}

std::shared_ptr<const Embedder> embedder_from_config(const Config& cfg) {
    const auto kind = cfg.get_or("backend.embeddings", "test");
    if (kind == "test") return hashing_backend(cfg);
    if (kind == "cache") {
        auto path = cfg.get("backend.embedding_cache");
        if (!path) fail(ErrorCode::Config, "backend.embeddings=cache needs backend.embedding_cache");
        return std::make_shared<CachedBackend>(CachedBackend::load(std::nullopt, resolve_path(cfg, *path)));
    }
    if (kind == "http") return std::make_shared<HttpBackend>(http_options(cfg));
    fail(ErrorCode::Config, "unknown backend.embeddings '" + kind + "' (expected test, cache or http)");
}

std::shared_ptr<const Victim> victim_from_config(const Config& cfg, std::shared_ptr<const Embedder> embedder,
                                                 const TaskSpec& task) {
    const auto kind = cfg.get_or("victim.kind", "simulated");
    if (kind == "simulated") {
        if (auto model = cfg.get("victim.model")) {
            return std::make_shared<SimulatedVictim>(load_student(resolve_path(cfg, *model)), std::move(embedder));
        }
        auto train = cfg.get("victim.train");
        if (!train) fail(ErrorCode::Config, "victim.kind=simulated needs victim.train or victim.model");
        const auto pairs = load_labeled(resolve_path(cfg, *train), task.num_classes);
        const auto hyper = hyper_from_config(cfg, "victim", TrainHyper{});
        return make_simulated_victim(pairs, std::move(embedder), task.num_classes, hyper);
    }
    if (kind == "remote") {
        RemoteVictimOptions o;
        auto url = cfg.get("victim.url");
        if (!url) fail(ErrorCode::Config, "victim.kind=remote needs victim.url");
        o.base_url = *url;
        o.model_id = cfg.get_or("victim.model_id", "");
        o.num_classes = task.num_classes;
        o.timeout = std::chrono::milliseconds(cfg.get_u64("victim.timeout_ms", o.timeout.count()));
        o.retries = static_cast<int>(cfg.get_u64("victim.retries", o.retries));
        return std::make_shared<RemoteVictim>(o);
    }
    fail(ErrorCode::Config, "unknown victim.kind '" + kind + "' (expected simulated or remote)");
}

ExperimentConfig resolve_experiment(const Config& cfg) {
    ExperimentConfig x;
    x.raw = cfg;
    x.strategy.strategy = parse_strategy(cfg.get_or("strategy.name", "meaeq"));
    x.strategy.filter.epsilon = cfg.get_double("strategy.epsilon", kDefaultEpsilon);
    x.strategy.filter.prompt = task_from_config(cfg).prompt;
    x.strategy.iterations = cfg.get_u64("strategy.iterations", kDefaultIterations);
    x.strategy.al.rounds = cfg.get_u64("strategy.rounds", x.strategy.al.rounds);
    x.strategy.al.seed_fraction = cfg.get_double("strategy.seed_fraction", x.strategy.al.seed_fraction);

    const auto mode = cfg.get_or("budget.mode", cfg.has("budget.rate") ? "rate" : "absolute");
    if (mode == "rate") {
        x.budget.mode = BudgetMode::Rate;
        x.budget.rate = cfg.get_double("budget.rate", 0.0);
        const auto sizes = builtin_dataset_size(cfg.get_or("task.name", ""));
        x.budget.base_size = cfg.get_u64("budget.base_size", sizes ? sizes->budget_base : 0);
        if (x.budget.base_size == 0) fail(ErrorCode::Config, "rate budgets need budget.base_size");
    } else if (mode == "absolute") {
        x.budget.mode = BudgetMode::Absolute;
        x.budget.absolute_k = cfg.get_u64("budget.k", 0);
    } else {
        fail(ErrorCode::Config, "unknown budget.mode '" + mode + "' (expected rate or absolute)");
    }

    x.student = hyper_from_config(cfg, "student", TrainHyper{});
    x.victim_hyper = hyper_from_config(cfg, "victim", TrainHyper{});

    if (auto values = cfg.get_list("seeds.values"); !values.empty()) {
        for (const auto& v : values) {
            try {
                x.seeds.push_back(std::stoull(v));
            } catch (const std::exception&) {
                fail(ErrorCode::Config, "seeds.values entry '" + v + "' is not an integer");
            }
        }
    } else {
        const auto count = cfg.get_u64("seeds.count", 10);
        const auto start = cfg.get_u64("seeds.start", 0);
        for (std::uint64_t i = 0; i < count; ++i) x.seeds.push_back(start + i);
    }
    if (x.seeds.empty()) fail(ErrorCode::Config, "experiment needs at least one seed");
    return x;
}

ExperimentContext build_context(const Config& cfg) {
    ExperimentContext ctx;
    ctx.task = task_from_config(cfg);
    ctx.store = store_from_config(cfg);
    ctx.scorer = scorer_from_config(cfg);
    ctx.embedder = embedder_from_config(cfg);
    ctx.victim = victim_from_config(cfg, ctx.embedder, ctx.task);
    auto eval = cfg.get("task.eval");
    if (!eval) fail(ErrorCode::Config, "config needs task.eval (labeled evaluation set)");
    ctx.eval = load_labeled(resolve_path(cfg, *eval), ctx.task.num_classes);
    return ctx;
}

MetricsReport run_experiment(const Config& cfg) {
    const auto x = resolve_experiment(cfg);
    const auto ctx = build_context(cfg);
    const auto k = compute_budget(x.budget);
    return run_experiment(ctx, x.strategy, k, x.student, x.seeds, cfg.digest());
}

} // namespace meaeq
