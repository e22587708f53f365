#include "cal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace cal {

DatasetStore generate_synthetic(const SyntheticSpec& spec) {
    if (spec.classes < 2) throw ValidationError("synthetic data needs at least 2 classes");
    if (spec.dim < static_cast<std::size_t>(spec.classes)) {
        throw SizingError("synthetic data needs dim >= classes for the simplex layout");
    }
    if (spec.per_class == 0) throw SizingError("per_class must be positive");
    if (!(spec.separation >= 0.0)) throw ValidationError("separation must be non-negative");
    if (spec.tokens_per_point > spec.landmarks) throw SizingError("tokens_per_point exceeds landmarks");

    const auto classes = static_cast<std::size_t>(spec.classes);
    const std::size_t d = spec.dim;
    Rng rng(derive_seed(spec.seed, "synthetic"));

    // Scaled basis vectors e_c * s / sqrt(2) are pairwise `separation` apart;
    // subtract their centroid so the mixture is centered.
    Matrix means(classes, d);
    const double scale = spec.separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t j = 0; j < classes; ++j) {
            means(c, j) = (c == j ? scale : 0.0) - scale / static_cast<double>(classes);
        }
    }
    auto draw = [&](std::size_t c, std::span<float> out) {
        for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(means(c, j) + rng.normal());
    };

    const std::size_t total = classes * spec.per_class;
    DenseMatrix<float> values(total, d);
    std::vector<int> labels(total);
    for (std::size_t i = 0; i < total; ++i) {
        labels[i] = static_cast<int>(i % classes);
        draw(i % classes, values.row(i));
    }
    DenseMatrix<float> landmarks(spec.landmarks, d);
    for (std::size_t l = 0; l < spec.landmarks; ++l) draw(rng.uniform_index(classes), landmarks.row(l));

    std::vector<Split> splits(total, Split::pool);
    const std::size_t held = spec.per_class / 10;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = c; i < total; i += classes) members.push_back(i);
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.uniform_index(i)]);
        for (std::size_t i = 0; i < held; ++i) splits[members[i]] = Split::validation;
        for (std::size_t i = held; i < 2 * held; ++i) splits[members[i]] = Split::test;
    }

    const int width = std::max(6, static_cast<int>(std::to_string(total).size()));
    std::vector<std::string> ids(total);
    DatasetStore store(spec.classes);
    std::vector<std::pair<double, std::size_t>> dist(spec.landmarks);
    for (std::size_t i = 0; i < total; ++i) {
        const auto digits = std::to_string(i);
        ids[i] = "x" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(width, digits.size()), '0') + digits;
        for (std::size_t l = 0; l < spec.landmarks; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = static_cast<double>(values(i, j)) - landmarks(l, j);
                s += diff * diff;
            }
            dist[l] = {s, l};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(spec.tokens_per_point), dist.end());
        std::vector<std::string> tokens;
        for (std::size_t t = 0; t < spec.tokens_per_point; ++t) tokens.push_back("lm" + std::to_string(dist[t].second));
        store.add_example(Example{ids[i], labels[i], std::move(tokens), splits[i]});
    }
    store.add_feature_space("input", FeatureMatrix(std::move(values), std::move(ids)));
    return store;
}

}  // namespace cal
