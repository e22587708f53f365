#include "cal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "cal/kernels.hpp"
#include "cal/neighbors.hpp"

namespace cal {

double div_input(const std::set<std::string>& batch_tokens, const std::set<std::string>& rest_tokens) {
    if (batch_tokens.empty() && rest_tokens.empty()) {
        throw ValidationError("Div-I undefined: both token sets are empty");
    }
    std::size_t shared = 0;
    for (const auto& t : batch_tokens) shared += rest_tokens.count(t);
    const std::size_t joint = batch_tokens.size() + rest_tokens.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(joint);
}

std::set<std::string> token_union(const DatasetStore& store, std::span<const std::string> ids) {
    std::set<std::string> out;
    for (const auto& id : ids) {
        const auto& ex = store.example(id);
        if (!ex.tokens) throw ValidationError("example '" + id + "' has no tokens");
        out.insert(ex.tokens->begin(), ex.tokens->end());
    }
    return out;
}

double div_feature(std::span<const std::string> batch_ids, std::span<const std::string> universe_ids,
                   const FeatureMatrix& encodings) {
    if (batch_ids.empty()) throw ValidationError("Div-F needs a non-empty batch");
    const std::unordered_set<std::string> universe(universe_ids.begin(), universe_ids.end());
    for (const auto& id : batch_ids) {
        if (!universe.contains(id)) throw ValidationError("Div-F batch member '" + id + "' not in U");
    }
    const KnnIndex index(encodings.select(batch_ids));
    const auto nearest = index.query_batch(encodings.select(universe_ids), 1);
    double total = 0.0;
    for (const auto& nb : nearest) total += nb.distances.front();
    const double mean = total / static_cast<double>(universe_ids.size());
    return mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
}

ProbabilityTable::ProbabilityTable(std::vector<std::string> ids, Matrix probs)
    : ids_(std::move(ids)), probs_(std::move(probs)) {
    if (ids_.size() != probs_.rows()) throw ShapeError("probability table rows do not match ids");
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

std::span<const double> ProbabilityTable::row(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw StateError("no probability row for '" + std::string(id) + "'");
    return probs_.row(it->second);
}

double uncertainty_of_batch(std::span<const std::string> batch_ids, const ProbabilityTable& full_model_probs) {
    if (batch_ids.empty()) throw ValidationError("uncertainty of an empty batch");
    double total = 0.0;
    for (const auto& id : batch_ids) total += predictive_entropy(full_model_probs.row(id));
    return total / static_cast<double>(batch_ids.size());
}

double representativeness(std::span<const std::string> batch_ids, std::span<const std::string> universe_ids,
                          const FeatureMatrix& encodings, std::size_t k, ReprMode mode) {
    if (batch_ids.empty()) throw ValidationError("Repr needs a non-empty batch");
    if (k == 0) throw ValidationError("Repr needs K >= 1");
    if (universe_ids.size() <= k) {
        throw SizingError("Repr with K=" + std::to_string(k) + " needs more than K points in U");
    }
    const FeatureMatrix universe = encodings.select(universe_ids);
    const KnnIndex index(universe);
    double total = 0.0;
    for (const auto& id : batch_ids) {
        const auto self = universe.find_row(id);
        if (!self) throw ValidationError("Repr batch member '" + id + "' not in U");
        const auto nb = index.query(universe.row(*self), k + 1);
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t i = 0; i < nb.indices.size() && used < k; ++i) {
            if (nb.indices[i] == *self) continue;
            sum += nb.distances[i];
            ++used;
        }
        const double mean_dist = sum / static_cast<double>(k);
        if (mean_dist == 0.0) return std::numeric_limits<double>::infinity();
        total += mode == ReprMode::inverse_mean_distance ? mean_dist : 1.0 / mean_dist;
    }
    const double avg = total / static_cast<double>(batch_ids.size());
    return 1.0 / avg;
}

}  // namespace cal
