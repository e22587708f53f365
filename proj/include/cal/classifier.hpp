#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "cal/dataset.hpp"
#include "cal/matrix.hpp"

namespace cal {

struct ClassifierConfig {
    std::size_t hidden_dim = 0;  // 0 = linear softmax
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    std::size_t evals_per_epoch = 5;
    double l2_penalty = 1e-4;
    std::uint64_t seed = 0;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// Softmax classifier with an optional tanh hidden layer.
///
/// All parameters live in one flat vector:
///   [W_hid (h x d) | b_hid (h) | W_out (C x r) | b_out (C)]
/// where r is h with a hidden layer and d without one.
class Classifier {
public:
    Classifier() = default;
    Classifier(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden_dim() const { return hidden_dim_; }
    std::size_t class_count() const { return class_count_; }
    /// Width of the penultimate representation h(x).
    std::size_t representation_dim() const { return hidden_dim_ > 0 ? hidden_dim_ : input_dim_; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::size_t output_weight_offset() const { return out_w_; }

    /// Gaussian init scaled by 1/sqrt(fan_in); biases start at zero.
    void initialize(Rng& rng);

    /// Penultimate representation of one input row.
    void representation(std::span<const float> x, std::span<double> h) const;
    void logits(std::span<const double> h, std::span<double> z) const;

    /// Mean cross-entropy of the rows plus l2 * ||W||^2 (weights only).
    /// When `gradient` is non-empty it receives d(loss)/d(parameters).
    double loss(const DenseMatrix<float>& x, std::span<const std::size_t> rows, std::span<const int> labels,
                double l2_penalty, std::span<double> gradient = {}) const;

    bool operator==(const Classifier&) const = default;

private:
    std::size_t input_dim_ = 0;
    std::size_t hidden_dim_ = 0;
    std::size_t class_count_ = 0;
    std::size_t hid_b_ = 0;
    std::size_t out_w_ = 0;
    std::size_t out_b_ = 0;
    std::vector<double> params_;
};

struct TrainingReport {
    std::vector<double> validation_losses;  // one per evaluation, in order
    std::size_t best_evaluation = 0;
    double best_validation_loss = 0.0;
};

/// Mini-batch gradient descent (with momentum) on cross-entropy + l2. The
/// validation loss is evaluated evals_per_epoch times per epoch and the
/// checkpoint with the lowest loss is returned (earliest on ties).
/// Deterministic given config.seed and the row order of `train_x`.
Classifier train(const FeatureMatrix& train_x, std::span<const int> train_y, const FeatureMatrix& val_x,
                 std::span<const int> val_y, const ClassifierConfig& config, TrainingReport* report = nullptr);

/// Rows of p(y|x) aligned with `features`.
Matrix predict_proba(const Classifier& model, const FeatureMatrix& features);

/// Mean cross-entropy (no penalty) of `features` against `labels`.
double mean_cross_entropy(const Classifier& model, const FeatureMatrix& features, std::span<const int> labels);

double accuracy(const Classifier& model, const FeatureMatrix& features, std::span<const int> labels);

/// Resolves an encoding selector over the rows of `features`:
///   "model"          penultimate representation (identity for a linear model)
///   "input"          `features` unchanged
///   "external:NAME"  the store's feature space NAME, restricted to the same ids
FeatureMatrix encode(const Classifier& model, const FeatureMatrix& features, std::string_view selector,
                     const DatasetStore* store = nullptr);

/// Checks a selector without resolving it; throws ConfigError when invalid.
void validate_encoding_selector(std::string_view selector);

/// vec((p - e_yhat) (x) [h; 1]): last-layer cross-entropy gradient at the
/// argmax label. Width C * (h + 1) with the bias, C * h without.
std::vector<double> gradient_embedding_row(std::span<const double> p, std::span<const double> h, bool include_bias = true);

/// Gradient embeddings of every row, with the bias feature appended.
FeatureMatrix gradient_embedding(const Classifier& model, const FeatureMatrix& features);

/// Debug checkpoint: `<prefix>.json` header and `<prefix>.fmat` (one row of
/// parameters, stored as float32 so reloads are not bit-exact).
void save_checkpoint(const Classifier& model, const ClassifierConfig& config, const std::filesystem::path& prefix);
Classifier load_checkpoint(const std::filesystem::path& prefix);

}  // namespace cal
