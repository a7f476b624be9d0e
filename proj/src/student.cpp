#include "meaeq/student.hpp"

#include "meaeq/error.hpp"
#include "meaeq/hash.hpp"
#include "meaeq/random.hpp"
#include "meaeq/wire.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace meaeq {

namespace {

constexpr char kStudentMagic[8] = {'M', 'Q', 'S', 'T', 'U', '1', '\0', '\0'};

void check_labels(std::span<const ClassIndex> ys, std::size_t num_classes) {
    for (auto y : ys) {
        if (y >= num_classes) {
            fail(ErrorCode::Shape, "label " + std::to_string(y) + " outside " + std::to_string(num_classes) +
                                       " classes");
        }
    }
}

} // namespace

std::uint64_t TrainHyper::digest() const {
    std::ostringstream os;
    os.precision(17);
    os << "epochs=" << epochs << ";lr=" << learning_rate << ";wd=" << weight_decay << ";batch=" << batch_size
       << ";seed=" << seed;
    return fnv1a64(os.str());
}

StudentModel StudentModel::zeros(std::size_t num_classes, std::size_t dim) {
    StudentModel m;
    m.num_classes = num_classes;
    m.dim = dim;
    m.weights.assign(num_classes * dim, 0.0);
    m.bias.assign(num_classes, 0.0);
    return m;
}

std::vector<double> logits(const StudentModel& model, std::span<const float> x) {
    if (x.size() != model.dim) {
        fail(ErrorCode::Shape, "embedding dim " + std::to_string(x.size()) + " does not match model dim " +
                                   std::to_string(model.dim));
    }
    std::vector<double> z(model.bias);
    for (std::size_t c = 0; c < model.num_classes; ++c) {
        const double* w = model.weights.data() + c * model.dim;
        double acc = 0.0;
        for (std::size_t j = 0; j < model.dim; ++j) acc += w[j] * x[j];
        z[c] += acc;
    }
    return z;
}

std::vector<double> softmax(std::span<const double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

Prediction predict(const StudentModel& model, std::span<const float> embedding) {
    const auto z = logits(model, embedding);
    Prediction out;
    out.label = static_cast<ClassIndex>(std::max_element(z.begin(), z.end()) - z.begin());
    out.probabilities = softmax(z);
    return out;
}

Prediction predict(const StudentModel& model, const Embedding& embedding) {
    return predict(model, std::span<const float>(embedding.values));
}

LossAndGradient loss_and_gradient(const StudentModel& model, std::span<const Embedding> xs,
                                  std::span<const ClassIndex> ys, double weight_decay) {
    if (xs.size() != ys.size() || xs.empty()) fail(ErrorCode::Shape, "loss needs matching non-empty rows");
    const std::size_t k = model.num_classes;
    const std::size_t d = model.dim;
    LossAndGradient out;
    out.grad_weights.assign(k * d, 0.0);
    out.grad_bias.assign(k, 0.0);

    const double inv_n = 1.0 / static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto z = logits(model, xs[i].values);
        const double m = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (double v : z) total += std::exp(v - m);
        const double log_norm = m + std::log(total);
        out.loss += (log_norm - z[ys[i]]) * inv_n;

        for (std::size_t c = 0; c < k; ++c) {
            const double residual = (std::exp(z[c] - log_norm) - (c == ys[i] ? 1.0 : 0.0)) * inv_n;
            out.grad_bias[c] += residual;
            double* g = out.grad_weights.data() + c * d;
            for (std::size_t j = 0; j < d; ++j) g[j] += residual * xs[i].values[j];
        }
    }

    double w2 = 0.0;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        w2 += model.weights[i] * model.weights[i];
        out.grad_weights[i] += weight_decay * model.weights[i];
    }
    out.loss += 0.5 * weight_decay * w2;
    return out;
}

StudentModel fit_linear_probe(std::span<const Embedding> xs, std::span<const ClassIndex> ys,
                              std::size_t num_classes, const TrainHyper& hyper, TrainingTrace* trace) {
    if (hyper.epochs < 1 || !(hyper.learning_rate > 0.0) || !(hyper.weight_decay >= 0.0) || hyper.batch_size < 1) {
        fail(ErrorCode::Config, "invalid training hyperparameters");
    }
    if (num_classes < 2) fail(ErrorCode::Config, "a classifier needs at least two classes");
    if (xs.size() != ys.size() || xs.empty()) fail(ErrorCode::Shape, "training needs matching non-empty rows");
    check_labels(ys, num_classes);
    if (std::set<ClassIndex>(ys.begin(), ys.end()).size() < 2) {
        fail(ErrorCode::DegenerateTraining, "training labels cover a single class");
    }
    const std::size_t d = xs.front().dim();
    for (const auto& x : xs) {
        if (x.dim() != d) fail(ErrorCode::Shape, "training embeddings must share one dimension");
    }

    auto model = StudentModel::zeros(num_classes, d);
    model.trained_on = xs.size();
    model.config_digest = hyper.digest();

    TrainingTrace local;
    local.initial_loss = loss_and_gradient(model, xs, ys, hyper.weight_decay).loss;

    std::vector<std::size_t> order(xs.size());
    std::vector<Embedding> batch_x;
    std::vector<ClassIndex> batch_y;
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(hyper.seed, epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
        }
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
            const auto end = std::min(order.size(), start + hyper.batch_size);
            batch_x.clear();
            batch_y.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch_x.push_back(xs[order[i]]);
                batch_y.push_back(ys[order[i]]);
            }
            const auto lg = loss_and_gradient(model, batch_x, batch_y, hyper.weight_decay);
            ++local.steps;
            if (!std::isfinite(lg.loss)) {
                throw NumericalDivergence(local.steps, "non-finite training loss at step " +
                                                           std::to_string(local.steps));
            }
            for (std::size_t i = 0; i < model.weights.size(); ++i) {
                model.weights[i] -= hyper.learning_rate * lg.grad_weights[i];
            }
            for (std::size_t c = 0; c < num_classes; ++c) model.bias[c] -= hyper.learning_rate * lg.grad_bias[c];
        }
    }

    local.final_loss = loss_and_gradient(model, xs, ys, hyper.weight_decay).loss;
    if (!std::isfinite(local.final_loss)) {
        throw NumericalDivergence(local.steps, "non-finite final training loss");
    }
    if (trace != nullptr) *trace = local;
    return model;
}

StudentModel train_student(std::span<const LabeledPair> pairs, const Embedder& embedder,
                           std::size_t num_classes, const TrainHyper& hyper, TrainingTrace* trace) {
    if (pairs.empty()) fail(ErrorCode::DegenerateTraining, "no labeled pairs to train on");
    std::vector<Sentence> queries;
    std::vector<ClassIndex> ys;
    queries.reserve(pairs.size());
    for (const auto& p : pairs) {
        queries.push_back(p.query);
        ys.push_back(p.label);
    }
    check_labels(ys, num_classes);
    if (std::set<ClassIndex>(ys.begin(), ys.end()).size() < 2) {
        fail(ErrorCode::DegenerateTraining, "training labels cover a single class");
    }
    const auto xs = embedder.embed_batch(queries);
    return fit_linear_probe(xs, ys, num_classes, hyper, trace);
}

StudentModel constant_student(std::size_t num_classes, std::size_t dim, ClassIndex label, std::size_t trained_on) {
    auto m = StudentModel::zeros(num_classes, dim);
    m.bias[label] = 1.0;
    m.trained_on = trained_on;
    return m;
}

StudentModel train_student_or_constant(std::span<const LabeledPair> pairs, const Embedder& embedder,
                                       std::size_t num_classes, const TrainHyper& hyper) {
    try {
        return train_student(pairs, embedder, num_classes, hyper);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateTraining || pairs.empty()) throw;
        auto m = constant_student(num_classes, embedder.dim(), pairs.front().label, pairs.size());
        m.config_digest = hyper.digest();
        return m;
    }
}

std::string serialize_student(const StudentModel& model) {
    ByteWriter w;
    w.bytes(std::string_view(kStudentMagic, sizeof kStudentMagic));
    w.u32(static_cast<std::uint32_t>(model.num_classes));
    w.u32(static_cast<std::uint32_t>(model.dim));
    for (double v : model.weights) w.f32(static_cast<float>(v));
    for (double v : model.bias) w.f32(static_cast<float>(v));
    w.u64(model.config_digest);
    w.u64(model.trained_on);
    return w.str();
}

StudentModel deserialize_student(std::string_view bytes) {
    ByteReader r(bytes);
    if (r.bytes(sizeof kStudentMagic) != std::string_view(kStudentMagic, sizeof kStudentMagic)) {
        fail(ErrorCode::Format, "bad student model magic");
    }
    const auto k = r.u32();
    const auto d = r.u32();
    auto m = StudentModel::zeros(k, d);
    for (auto& v : m.weights) v = r.f32();
    for (auto& v : m.bias) v = r.f32();
    m.config_digest = r.u64();
    m.trained_on = r.u64();
    if (!r.done()) fail(ErrorCode::Format, "trailing bytes after student model");
    for (double v : m.weights) {
        if (!std::isfinite(v)) fail(ErrorCode::Format, "non-finite student weight");
    }
    return m;
}

void save_student(const std::filesystem::path& path, const StudentModel& model) {
    write_file(path, serialize_student(model));
}

StudentModel load_student(const std::filesystem::path& path) { return deserialize_student(read_file(path)); }

std::string ExternalTrainer::train(std::span<const LabeledPair> pairs, const TrainHyper& hyper) const {
    nlohmann::json req;
    req["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) req["pairs"].push_back({{"text", p.query.text}, {"label", p.label}});
    req["hyper"] = {{"epochs", hyper.epochs},
                    {"learning_rate", hyper.learning_rate},
                    {"weight_decay", hyper.weight_decay},
                    {"batch_size", hyper.batch_size},
                    {"seed", hyper.seed}};
    auto res = post_json_with_retry(base_url, "/train", req.dump(), timeout, retries, std::chrono::milliseconds(500));
    if (!res.ok) fail(ErrorCode::Backend, res.error);
    try {
        return nlohmann::json::parse(res.body).at("model_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Backend, std::string("malformed /train response: ") + e.what());
    }
}

} // namespace meaeq
