#pragma once

#include "meaeq/backends.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace meaeq {

using ClassIndex = std::uint32_t;

/// A query and the hard label the victim returned for it.
struct LabeledPair {
    Sentence query;
    ClassIndex label = 0;
};

struct TrainHyper {
    std::size_t epochs = 10;
    double learning_rate = 0.1;
    double weight_decay = 1e-4;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    std::uint64_t digest() const;
};

/// Multinomial linear classifier over embeddings: logits = W x + b.
struct StudentModel {
    std::size_t num_classes = 0;
    std::size_t dim = 0;
    std::vector<double> weights;  // num_classes x dim, row-major
    std::vector<double> bias;     // num_classes
    std::size_t trained_on = 0;
    std::uint64_t config_digest = 0;

    static StudentModel zeros(std::size_t num_classes, std::size_t dim);

    bool operator==(const StudentModel&) const = default;
};

struct Prediction {
    ClassIndex label = 0;
    std::vector<double> probabilities;
};

// Softmax of the affine map; label is the argmax with ties to the smaller index.
Prediction predict(const StudentModel& model, std::span<const float> embedding);
Prediction predict(const StudentModel& model, const Embedding& embedding);

std::vector<double> logits(const StudentModel& model, std::span<const float> embedding);
std::vector<double> softmax(std::span<const double> logits);

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> grad_weights;  // num_classes x dim
    std::vector<double> grad_bias;
};

/// Mean cross-entropy over the rows plus (weight_decay / 2) * ||W||^2.
/// The bias is not penalized.
LossAndGradient loss_and_gradient(const StudentModel& model, std::span<const Embedding> xs,
                                  std::span<const ClassIndex> ys, double weight_decay);

struct TrainingTrace {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::size_t steps = 0;
};

/// Seeded mini-batch gradient descent from all-zero parameters. Throws
/// DegenerateTraining when fewer than two distinct labels are present and
/// NumericalDivergence on a non-finite loss.
StudentModel fit_linear_probe(std::span<const Embedding> xs, std::span<const ClassIndex> ys,
                              std::size_t num_classes, const TrainHyper& hyper, TrainingTrace* trace = nullptr);

StudentModel train_student(std::span<const LabeledPair> pairs, const Embedder& embedder,
                           std::size_t num_classes, const TrainHyper& hyper, TrainingTrace* trace = nullptr);

// Constant classifier that always predicts `label`; used when the collected
// labels cover a single class.
StudentModel constant_student(std::size_t num_classes, std::size_t dim, ClassIndex label, std::size_t trained_on);

// train_student, falling back to constant_student on DegenerateTraining.
StudentModel train_student_or_constant(std::span<const LabeledPair> pairs, const Embedder& embedder,
                                       std::size_t num_classes, const TrainHyper& hyper);

// "MQSTU1\0\0", u32 num_classes, u32 dim, f32 weights (row-major), f32 bias,
// u64 config digest, u64 training-set size. All little-endian.
std::string serialize_student(const StudentModel& model);
StudentModel deserialize_student(std::string_view bytes);
void save_student(const std::filesystem::path& path, const StudentModel& model);
StudentModel load_student(const std::filesystem::path& path);

/// Client for the sidecar's optional /train hook (transformer students).
struct ExternalTrainer {
    std::string base_url;
    std::chrono::milliseconds timeout{600000};
    int retries = 0;

    // Returns the model_id registered by the sidecar for /classify.
    std::string train(std::span<const LabeledPair> pairs, const TrainHyper& hyper) const;
};

} // namespace meaeq
