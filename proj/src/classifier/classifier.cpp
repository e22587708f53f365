#include "cal/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cal/fmat.hpp"
#include "cal/kernels.hpp"
#include "cal/parallel.hpp"

namespace cal {

void ClassifierConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (evals_per_epoch < 1) throw ConfigError("evals_per_epoch must be at least 1");
    if (!(l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be non-negative");
}

Classifier::Classifier(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), class_count_(class_count) {
    if (input_dim == 0) throw ShapeError("classifier input dimension must be positive");
    if (class_count < 2) throw ShapeError("classifier needs at least 2 classes");
    hid_b_ = hidden_dim_ * input_dim_;
    out_w_ = hid_b_ + hidden_dim_;
    out_b_ = out_w_ + class_count_ * representation_dim();
    params_.assign(out_b_ + class_count_, 0.0);
}

void Classifier::initialize(Rng& rng) {
    std::fill(params_.begin(), params_.end(), 0.0);
    const double hid_scale = 1.0 / std::sqrt(static_cast<double>(input_dim_));
    for (std::size_t i = 0; i < hid_b_; ++i) params_[i] = rng.normal() * hid_scale;
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(representation_dim()));
    for (std::size_t i = out_w_; i < out_b_; ++i) params_[i] = rng.normal() * out_scale;
}

void Classifier::representation(std::span<const float> x, std::span<double> h) const {
    if (x.size() != input_dim_) {
        throw ShapeError("input has " + std::to_string(x.size()) + " features, model expects " +
                         std::to_string(input_dim_));
    }
    if (hidden_dim_ == 0) {
        std::copy(x.begin(), x.end(), h.begin());
        return;
    }
    for (std::size_t j = 0; j < hidden_dim_; ++j) {
        const double* w = params_.data() + j * input_dim_;
        double a = params_[hid_b_ + j];
        for (std::size_t i = 0; i < input_dim_; ++i) a += w[i] * x[i];
        h[j] = std::tanh(a);
    }
}

void Classifier::logits(std::span<const double> h, std::span<double> z) const {
    const std::size_t r = representation_dim();
    for (std::size_t c = 0; c < class_count_; ++c) {
        const double* w = params_.data() + out_w_ + c * r;
        double s = params_[out_b_ + c];
        for (std::size_t j = 0; j < r; ++j) s += w[j] * h[j];
        z[c] = s;
    }
}

double Classifier::loss(const DenseMatrix<float>& x, std::span<const std::size_t> rows, std::span<const int> labels,
                        double l2_penalty, std::span<double> gradient) const {
    const bool want_grad = !gradient.empty();
    if (want_grad) {
        if (gradient.size() != params_.size()) throw ShapeError("gradient buffer has wrong size");
        std::fill(gradient.begin(), gradient.end(), 0.0);
    }
    const std::size_t r = representation_dim();
    std::vector<double> h(r), z(class_count_), dh(hidden_dim_);
    const double inv_n = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
    double total = 0.0;
    for (std::size_t row : rows) {
        const auto xr = x.row(row);
        representation(xr, h);
        logits(h, z);
        softmax_inplace(z);
        const auto y = static_cast<std::size_t>(labels[row]);
        total += -std::log(std::max(z[y], 1e-300));
        if (!want_grad) continue;

        z[y] -= 1.0;  // dL/dz = p - e_y
        for (std::size_t c = 0; c < class_count_; ++c) {
            const double dz = z[c] * inv_n;
            double* gw = gradient.data() + out_w_ + c * r;
            for (std::size_t j = 0; j < r; ++j) gw[j] += dz * h[j];
            gradient[out_b_ + c] += dz;
        }
        if (hidden_dim_ == 0) continue;
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t c = 0; c < class_count_; ++c) {
            const double dz = z[c] * inv_n;
            const double* w = params_.data() + out_w_ + c * r;
            for (std::size_t j = 0; j < r; ++j) dh[j] += dz * w[j];
        }
        for (std::size_t j = 0; j < hidden_dim_; ++j) {
            const double da = dh[j] * (1.0 - h[j] * h[j]);
            double* gw = gradient.data() + j * input_dim_;
            for (std::size_t i = 0; i < input_dim_; ++i) gw[i] += da * xr[i];
            gradient[hid_b_ + j] += da;
        }
    }
    total *= inv_n;

    if (l2_penalty > 0.0) {
        auto penalize = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                total += l2_penalty * params_[i] * params_[i];
                if (want_grad) gradient[i] += 2.0 * l2_penalty * params_[i];
            }
        };
        penalize(0, hid_b_);
        penalize(out_w_, out_b_);
    }
    return total;
}

namespace {

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes, bool need_all) {
    if (labels.size() != rows) throw ShapeError("label count does not match feature rows");
    std::vector<std::size_t> seen(classes, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw ValidationError("label " + std::to_string(y) + " outside class range");
        }
        ++seen[static_cast<std::size_t>(y)];
    }
    if (!need_all) return;
    for (std::size_t c = 0; c < classes; ++c) {
        if (seen[c] == 0) throw ValidationError("class " + std::to_string(c) + " missing from training rows");
    }
}

std::size_t infer_class_count(std::span<const int> a, std::span<const int> b) {
    int top = 1;
    for (int y : a) top = std::max(top, y);
    for (int y : b) top = std::max(top, y);
    return static_cast<std::size_t>(top) + 1;
}

}  // namespace

Classifier train(const FeatureMatrix& train_x, std::span<const int> train_y, const FeatureMatrix& val_x,
                 std::span<const int> val_y, const ClassifierConfig& config, TrainingReport* report) {
    config.validate();
    if (train_x.rows() == 0) throw ValidationError("no training rows");
    if (val_x.rows() == 0) throw ValidationError("validation set is empty");
    if (val_x.cols() != train_x.cols()) throw ShapeError("validation features differ in width from training features");

    const std::size_t classes = infer_class_count(train_y, val_y);
    check_labels(train_y, train_x.rows(), classes, true);
    check_labels(val_y, val_x.rows(), classes, false);

    Rng rng(config.seed);
    Classifier model(train_x.cols(), config.hidden_dim, classes);
    model.initialize(rng);

    const std::size_t n = train_x.rows();
    const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
    std::vector<std::size_t> eval_after(config.evals_per_epoch);
    for (std::size_t j = 0; j < eval_after.size(); ++j) {
        eval_after[j] = ((j + 1) * batches + config.evals_per_epoch - 1) / config.evals_per_epoch;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> val_rows(val_x.rows());
    std::iota(val_rows.begin(), val_rows.end(), 0);

    auto params = model.parameters();
    std::vector<double> grad(params.size()), velocity(params.size(), 0.0);
    Classifier best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t evaluation = 0;
    TrainingReport local;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t begin = b * config.batch_size;
            const std::size_t end = std::min(n, begin + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + begin, end - begin);
            const double batch_loss = model.loss(train_x.values(), rows, train_y, config.l2_penalty, grad);
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "non-finite training loss " << batch_loss << " at epoch " << epoch << ", batch " << b
                    << " (learning_rate=" << config.learning_rate << ")";
                throw NumericalError(msg.str());
            }
            for (std::size_t i = 0; i < params.size(); ++i) {
                velocity[i] = config.momentum * velocity[i] - config.learning_rate * grad[i];
                params[i] += velocity[i];
            }
            for (std::size_t pos : eval_after) {
                if (pos != b + 1) continue;
                const double vl = model.loss(val_x.values(), val_rows, val_y, 0.0);
                if (!std::isfinite(vl)) throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
                local.validation_losses.push_back(vl);
                if (vl < best_loss) {
                    best_loss = vl;
                    best = model;
                    local.best_evaluation = evaluation;
                }
                ++evaluation;
            }
        }
    }
    local.best_validation_loss = best_loss;
    if (report) *report = std::move(local);
    return best;
}

Matrix predict_proba(const Classifier& model, const FeatureMatrix& features) {
    if (features.cols() != model.input_dim()) {
        throw ShapeError("predict_proba: features have " + std::to_string(features.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim()));
    }
    Matrix out(features.rows(), model.class_count());
    parallel_for(features.rows(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> h(model.representation_dim());
        for (std::size_t i = begin; i < end; ++i) {
            model.representation(features.row(i), h);
            model.logits(h, out.row(i));
            softmax_inplace(out.row(i));
        }
    });
    return out;
}

double mean_cross_entropy(const Classifier& model, const FeatureMatrix& features, std::span<const int> labels) {
    if (labels.size() != features.rows()) throw ShapeError("label count does not match feature rows");
    std::vector<std::size_t> rows(features.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return model.loss(features.values(), rows, labels, 0.0);
}

double accuracy(const Classifier& model, const FeatureMatrix& features, std::span<const int> labels) {
    if (labels.size() != features.rows()) throw ShapeError("label count does not match feature rows");
    if (features.rows() == 0) return 0.0;
    const auto probs = predict_proba(model, features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        if (static_cast<int>(argmax(probs.row(i))) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

void validate_encoding_selector(std::string_view selector) {
    if (selector == "model" || selector == "input") return;
    if (selector.starts_with("external:") && selector.size() > 9) return;
    throw ConfigError("unknown encoding selector '" + std::string(selector) + "'");
}

FeatureMatrix encode(const Classifier& model, const FeatureMatrix& features, std::string_view selector,
                     const DatasetStore* store) {
    validate_encoding_selector(selector);
    if (selector == "input") return features;
    if (selector.starts_with("external:")) {
        if (!store) throw ConfigError("selector '" + std::string(selector) + "' needs a dataset store");
        return store->feature_space(selector.substr(9)).select(features.row_ids());
    }
    if (model.hidden_dim() == 0) {
        if (features.cols() != model.input_dim()) throw ShapeError("encode: feature width does not match model");
        return features;
    }
    DenseMatrix<float> out(features.rows(), model.hidden_dim());
    parallel_for(features.rows(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> h(model.hidden_dim());
        for (std::size_t i = begin; i < end; ++i) {
            model.representation(features.row(i), h);
            for (std::size_t j = 0; j < h.size(); ++j) out(i, j) = static_cast<float>(h[j]);
        }
    });
    return FeatureMatrix(std::move(out), features.row_ids());
}

std::vector<double> gradient_embedding_row(std::span<const double> p, std::span<const double> h, bool include_bias) {
    const std::size_t width = h.size() + (include_bias ? 1 : 0);
    const std::size_t predicted = argmax(p);
    std::vector<double> g(p.size() * width);
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double residual = p[c] - (c == predicted ? 1.0 : 0.0);
        for (std::size_t j = 0; j < h.size(); ++j) g[c * width + j] = residual * h[j];
        if (include_bias) g[c * width + h.size()] = residual;
    }
    return g;
}

FeatureMatrix gradient_embedding(const Classifier& model, const FeatureMatrix& features) {
    if (features.cols() != model.input_dim()) throw ShapeError("gradient_embedding: feature width does not match model");
    const std::size_t width = model.class_count() * (model.representation_dim() + 1);
    DenseMatrix<float> out(features.rows(), width);
    parallel_for(features.rows(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> h(model.representation_dim()), z(model.class_count());
        for (std::size_t i = begin; i < end; ++i) {
            model.representation(features.row(i), h);
            model.logits(h, z);
            softmax_inplace(z);
            const auto g = gradient_embedding_row(z, h, true);
            for (std::size_t j = 0; j < width; ++j) out(i, j) = static_cast<float>(g[j]);
        }
    });
    return FeatureMatrix(std::move(out), features.row_ids());
}

void save_checkpoint(const Classifier& model, const ClassifierConfig& config, const std::filesystem::path& prefix) {
    nlohmann::json header;
    header["input_dim"] = model.input_dim();
    header["hidden_dim"] = model.hidden_dim();
    header["class_count"] = model.class_count();
    header["parameter_count"] = model.parameters().size();
    header["config"] = {{"hidden_dim", config.hidden_dim},       {"learning_rate", config.learning_rate},
                        {"momentum", config.momentum},           {"epochs", config.epochs},
                        {"batch_size", config.batch_size},       {"evals_per_epoch", config.evals_per_epoch},
                        {"l2_penalty", config.l2_penalty},       {"seed", config.seed}};
    std::ofstream(prefix.string() + ".json") << header.dump(2) << '\n';

    const auto params = model.parameters();
    const std::size_t count = params.size();
    std::vector<float> values(params.begin(), params.end());
    write_feature_matrix(prefix.string() + ".fmat",
                         FeatureMatrix(DenseMatrix<float>(1, count, std::move(values)), {"parameters"}));
}

Classifier load_checkpoint(const std::filesystem::path& prefix) {
    std::ifstream in(prefix.string() + ".json");
    if (!in) throw FormatError("missing checkpoint header " + prefix.string() + ".json");
    nlohmann::json header;
    try {
        in >> header;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint header: ") + e.what());
    }
    Classifier model(header.at("input_dim").get<std::size_t>(), header.at("hidden_dim").get<std::size_t>(),
                     header.at("class_count").get<std::size_t>());
    const auto matrix = load_feature_matrix(prefix.string() + ".fmat");
    auto params = model.parameters();
    if (matrix.rows() != 1 || matrix.cols() != params.size()) throw FormatError("checkpoint parameter count mismatch");
    std::copy(matrix.row(0).begin(), matrix.row(0).end(), params.begin());
    return model;
}

}  // namespace cal
