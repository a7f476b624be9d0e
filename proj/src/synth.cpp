#include "meaeq/synth.hpp"

#include "meaeq/config.hpp"
#include "meaeq/error.hpp"
#include "meaeq/eval.hpp"
#include "meaeq/random.hpp"

#include <array>
#include <cmath>
#include <random>
#include <unordered_map>

namespace meaeq {

namespace {

constexpr std::array<const char*, 8> kTaskWords = {"online", "forum", "comment", "group",
                                                   "crowd", "message", "post", "speech"};
constexpr std::array<const char*, 8> kOffWords = {"river", "album", "railway", "county",
                                                  "season", "bridge", "novel", "harbour"};

struct Geometry {
    std::size_t dim;
    std::vector<double> mean_class0;
    std::vector<double> mean_class1;
    std::vector<double> mean_offtask;
};

Geometry make_geometry(const SynthOptions& o) {
    if (o.dim < 3) fail(ErrorCode::Config, "synthetic task needs dim >= 3");
    Geometry g{o.dim, std::vector<double>(o.dim), std::vector<double>(o.dim), std::vector<double>(o.dim)};
    g.mean_class0[0] = -o.separation / 2.0;
    g.mean_class1[0] = o.separation / 2.0;
    g.mean_class0[1] = g.mean_class1[1] = o.task_offset;
    g.mean_offtask[0] = -o.offtask_shift;
    g.mean_offtask[2] = o.offtask_offset;
    return g;
}

Embedding draw(const std::vector<double>& mean, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Embedding e;
    e.values.reserve(mean.size());
    for (double m : mean) e.values.push_back(static_cast<float>(m + normal(rng)));
    return e;
}

} // namespace

SyntheticTask make_synthetic_task(const SynthOptions& o) {
    if (o.pool_size == 0) fail(ErrorCode::Config, "synthetic pool must be non-empty");
    if (!(o.relevant_fraction > 0.0 && o.relevant_fraction <= 1.0)) {
        fail(ErrorCode::Config, "relevant_fraction must lie in (0,1]");
    }
    const auto geo = make_geometry(o);
    std::mt19937_64 rng(o.seed);
    Rng picker(o.seed ^ 0x5eedULL);

    SyntheticTask t;
    t.options = o;
    t.task = *builtin_task("hate_speech");

    // Which pool positions are task-relevant.
    const auto n_relevant = static_cast<std::size_t>(std::llround(o.relevant_fraction * static_cast<double>(o.pool_size)));
    t.relevant.assign(o.pool_size, false);
    for (auto pos : draw_without_replacement(o.pool_size, n_relevant, picker)) t.relevant[pos] = true;
    t.latent_class.assign(o.pool_size, 0);

    std::unordered_map<SentenceId, Embedding> embeddings;
    std::string text;
    for (std::size_t i = 0; i < o.pool_size; ++i) {
        const auto w1 = picker.below(8);
        const auto w2 = picker.below(8);
        std::string line;
        if (t.relevant[i]) {
            const auto c = static_cast<ClassIndex>(picker.below(2));
            t.latent_class[i] = c;
            embeddings.emplace(i, draw(c ? geo.mean_class1 : geo.mean_class0, rng));
            line = "record " + std::to_string(i) + " quotes a " + kTaskWords[w1] + " full of " + o.keyword +
                   " aimed at the " + kTaskWords[w2] + " .";
        } else {
            embeddings.emplace(i, draw(geo.mean_offtask, rng));
            line = "record " + std::to_string(i) + " describes the " + kOffWords[w1] + " near the " +
                   kOffWords[w2] + " .";
        }
        text += line + "\n";
    }
    t.corpus_text = text;
    t.store = ingest_text(t.corpus_text, IngestOptions{5, 128, true});
    if (t.store.size() != o.pool_size) fail(ErrorCode::Inconsistent, "synthetic corpus lost sentences on ingest");

    auto labeled = [&](SentenceId id, std::string_view kind) {
        const auto c = static_cast<ClassIndex>(picker.below(2));
        embeddings.emplace(id, draw(c ? geo.mean_class1 : geo.mean_class0, rng));
        return LabeledPair{Sentence{id, std::string(kind) + " " + std::to_string(id) + " with " + o.keyword + " content", 0},
                           c};
    };
    SentenceId next = o.pool_size;
    for (std::size_t i = 0; i < o.victim_train_size; ++i) t.victim_train.push_back(labeled(next++, "victim sample"));
    for (std::size_t i = 0; i < o.eval_size; ++i) t.eval.push_back(labeled(next++, "eval sample"));

    t.embeddings = std::make_shared<CachedBackend>(std::map<SentenceId, EntailmentScores>{}, std::move(embeddings));
    t.scorer = std::make_shared<HashingBackend>(o.dim, o.seed, std::vector<std::string>{o.keyword});
    return t;
}

void write_synthetic_task(const SyntheticTask& t, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "corpus.txt", t.corpus_text);
    save_store(t.store, dir / "store.jsonl");

    std::vector<std::pair<SentenceId, Embedding>> records;
    const auto total = t.store.size() + t.victim_train.size() + t.eval.size();
    records.reserve(total);
    for (SentenceId id = 0; id < total; ++id) records.emplace_back(id, t.embeddings->embed(Sentence{id, {}, 0}));
    write_embedding_cache(dir / "embeddings.mqemb", records);

    save_labeled(dir / "victim_train.jsonl", t.victim_train);
    save_labeled(dir / "eval.jsonl", t.eval);

    Config cfg;
    cfg.set("task.name", t.task.name);
    cfg.set("task.eval", "eval.jsonl");
    cfg.set("corpus.store", "store.jsonl");
    cfg.set("backend.scores", "test");
    cfg.set("backend.keywords", t.options.keyword);
    cfg.set("backend.dim", std::to_string(t.options.dim));
    cfg.set("backend.embeddings", "cache");
    cfg.set("backend.embedding_cache", "embeddings.mqemb");
    cfg.set("strategy.name", "meaeq");
    cfg.set("strategy.epsilon", "0.95");
    cfg.set("strategy.iterations", "300");
    cfg.set("budget.mode", "absolute");
    cfg.set("budget.k", "60");
    cfg.set("victim.kind", "simulated");
    cfg.set("victim.train", "victim_train.jsonl");
    cfg.set("seeds.count", "10");
    write_file(dir / "experiment.ini", cfg.to_ini());
}

} // namespace meaeq
