#include "doctest.h"
#include "support/support.hpp"

#include "meaeq/student.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

using namespace meaeq;
using testing::error_code_of;
using testing::gaussian_points;

namespace {

struct Instance {
    StudentModel model;
    std::vector<Embedding> xs;
    std::vector<ClassIndex> ys;
};

Instance random_instance(std::size_t classes, std::size_t dim, std::size_t n, std::uint64_t seed) {
    Instance in{StudentModel::zeros(classes, dim), gaussian_points(n, dim, seed), {}};
    Rng rng(seed);
    for (auto& w : in.model.weights) w = rng.unit() - 0.5;
    for (auto& b : in.model.bias) b = rng.unit() - 0.5;
    for (std::size_t i = 0; i < n; ++i) in.ys.push_back(static_cast<ClassIndex>(rng.below(classes)));
    return in;
}

double loss_at(const Instance& in, double wd) { return loss_and_gradient(in.model, in.xs, in.ys, wd).loss; }

// Separable by construction: class = sign of the first coordinate, with a margin.
std::pair<std::vector<Embedding>, std::vector<ClassIndex>> separable(std::size_t n, std::size_t d, std::uint64_t seed) {
    auto xs = gaussian_points(n, d, seed);
    std::vector<ClassIndex> ys;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 2 == 0;
        xs[i].values[0] = (pos ? 2.0f : -2.0f) + 0.3f * xs[i].values[0];
        ys.push_back(pos ? 1 : 0);
    }
    return {xs, ys};
}

struct MapEmbedder final : Embedder {
    std::unordered_map<SentenceId, Embedding> rows;
    std::size_t dim() const override { return rows.begin()->second.dim(); }
    Embedding embed(const Sentence& s) const override { return rows.at(s.id); }
};

} // namespace

TEST_CASE("gradient matches central finite differences") {
    const double h = 1e-5;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto in = random_instance(3, 6, 12, seed);
        const double wd = 1e-2;
        const auto g = loss_and_gradient(in.model, in.xs, in.ys, wd);
        double worst = 0;
        auto probe = [&](double& param, double analytic) {
            const double keep = param;
            param = keep + h;
            const double up = loss_at(in, wd);
            param = keep - h;
            const double down = loss_at(in, wd);
            param = keep;
            const double numeric = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic)));
        };
        for (std::size_t i = 0; i < in.model.weights.size(); ++i) probe(in.model.weights[i], g.grad_weights[i]);
        for (std::size_t i = 0; i < in.model.bias.size(); ++i) probe(in.model.bias[i], g.grad_bias[i]);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("training is bit-exact per seed") {
    auto [xs, ys] = separable(80, 5, 3);
    TrainHyper h;
    h.seed = 12;
    h.batch_size = 7;
    const auto a = fit_linear_probe(xs, ys, 2, h);
    const auto b = fit_linear_probe(xs, ys, 2, h);
    CHECK(a == b);
    h.seed = 13;
    CHECK_FALSE(fit_linear_probe(xs, ys, 2, h).weights == a.weights);
}

TEST_CASE("separable data is fit exactly") {
    auto [xs, ys] = separable(60, 8, 4);
    TrainHyper h;
    h.epochs = 50;
    const auto m = fit_linear_probe(xs, ys, 2, h);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(predict(m, xs[i]).label == ys[i]);
}

TEST_CASE("one epoch does not increase the loss") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto in = random_instance(3, 4, 40, seed + 50);
        TrainHyper h;
        h.epochs = 1;
        h.learning_rate = 0.05;
        TrainingTrace trace;
        fit_linear_probe(in.xs, in.ys, 3, h, &trace);
        CHECK(trace.final_loss <= trace.initial_loss);
        CHECK(trace.initial_loss == doctest::Approx(std::log(3.0)));
    }
}

TEST_CASE("degenerate and invalid training") {
    const auto xs = gaussian_points(5, 3, 1);
    const std::vector<ClassIndex> same(5, 1);
    CHECK(error_code_of([&] { fit_linear_probe(xs, same, 2, TrainHyper{}); }) == ErrorCode::DegenerateTraining);
    TrainHyper zero;
    zero.epochs = 0;
    const std::vector<ClassIndex> mixed{0, 1, 0, 1, 0};
    CHECK(error_code_of([&] { fit_linear_probe(xs, mixed, 2, zero); }) == ErrorCode::Config);
    TrainHyper wild;
    wild.learning_rate = 1e300;
    CHECK(error_code_of([&] { fit_linear_probe(xs, mixed, 2, wild); }) == ErrorCode::NumericalDivergence);
}

TEST_CASE("constant fallback on a single observed class") {
    MapEmbedder emb;
    std::vector<LabeledPair> pairs;
    for (SentenceId i = 0; i < 4; ++i) {
        emb.rows[i] = Embedding{{float(i), 1.f, -1.f}};
        pairs.push_back({{i, "", 0}, 1});
    }
    const auto m = train_student_or_constant(pairs, emb, 2, TrainHyper{});
    CHECK(m.trained_on == 4);
    for (const auto& [id, e] : emb.rows) CHECK(predict(m, e).label == 1);
}

TEST_CASE("prediction properties") {
    const auto zero = StudentModel::zeros(4, 3);
    const Embedding x{{0.2f, -1.f, 3.f}};
    const auto p = predict(zero, x);
    CHECK(p.label == 0);
    for (double q : p.probabilities) CHECK(q == doctest::Approx(0.25));

    auto in = random_instance(4, 3, 1000, 9);
    for (const auto& e : in.xs) {
        const auto pr = predict(in.model, e);
        double s = 0;
        for (double q : pr.probabilities) s += q;
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }

    auto shifted = in.model;
    for (auto& b : shifted.bias) b += 7.5;
    for (std::size_t i = 0; i < 20; ++i) {
        const auto a = predict(in.model, in.xs[i]);
        const auto b = predict(shifted, in.xs[i]);
        CHECK(a.label == b.label);
        for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(a.probabilities[c] - b.probabilities[c]) <= 1e-9);
    }

    auto no_bias = in.model;
    std::fill(no_bias.bias.begin(), no_bias.bias.end(), 0.0);
    for (std::size_t i = 0; i < 20; ++i) {
        Embedding scaled = in.xs[i];
        for (auto& v : scaled.values) v *= 3.7f;
        CHECK(predict(no_bias, in.xs[i]).label == predict(no_bias, scaled).label);
    }
}

TEST_CASE("student model serializes to float32 precision") {
    testing::TempDir dir;
    auto in = random_instance(3, 5, 1, 2);
    in.model.trained_on = 17;
    in.model.config_digest = 0x1234;
    save_student(dir / "m.bin", in.model);
    const auto back = load_student(dir / "m.bin");
    CHECK(back.num_classes == 3);
    CHECK(back.trained_on == 17);
    CHECK(back.config_digest == 0x1234);
    for (std::size_t i = 0; i < back.weights.size(); ++i) CHECK(back.weights[i] == double(float(in.model.weights[i])));
    auto bytes = serialize_student(in.model);
    CHECK(error_code_of([&] { deserialize_student(bytes.substr(0, bytes.size() - 1)); }) == ErrorCode::Format);
    CHECK(error_code_of([&] { deserialize_student(bytes + "x"); }) == ErrorCode::Format);
}
