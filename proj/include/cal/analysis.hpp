#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cal/dataset.hpp"
#include "cal/matrix.hpp"

namespace cal {

/// Batch diagnostics. Unset metrics could not be computed (e.g. no tokens);
/// +infinity marks a degenerate zero-distance geometry.
struct BatchDiagnostics {
    std::optional<double> div_input;
    std::optional<double> div_feature;
    std::optional<double> uncertainty;
    std::optional<double> representativeness;
};

/// Jaccard similarity |A n B| / |A u B|. Throws ValidationError when both
/// sets are empty.
double div_input(const std::set<std::string>& batch_tokens, const std::set<std::string>& rest_tokens);

/// Token-set union of the given examples. Throws ValidationError when an
/// example carries no tokens.
std::set<std::string> token_union(const DatasetStore& store, std::span<const std::string> ids);

/// Inverse of the mean, over U, of the distance to the nearest batch member.
/// Q must be a non-empty subset of U. Returns +infinity when that mean is 0.
double div_feature(std::span<const std::string> batch_ids, std::span<const std::string> universe_ids,
                   const FeatureMatrix& encodings);

/// Predictive probabilities keyed by example id.
class ProbabilityTable {
public:
    ProbabilityTable() = default;
    ProbabilityTable(std::vector<std::string> ids, Matrix probs);

    std::span<const double> row(std::string_view id) const;  // StateError when missing
    const std::vector<std::string>& ids() const { return ids_; }
    const Matrix& probs() const { return probs_; }

private:
    std::vector<std::string> ids_;
    Matrix probs_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Mean predictive entropy (nats) of the batch under the reference model.
double uncertainty_of_batch(std::span<const std::string> batch_ids, const ProbabilityTable& full_model_probs);

enum class ReprMode {
    inverse_mean_distance,  // 1 / mean_x meanDist_K(x): high for dense batches
    literal,                // 1 / mean_x (1 / meanDist_K(x))
};

/// KNN-density representativeness of a batch within U (self excluded from
/// each point's K neighbors). Throws SizingError when |U| <= K. Returns
/// +infinity when any member has zero mean neighbor distance.
double representativeness(std::span<const std::string> batch_ids, std::span<const std::string> universe_ids,
                          const FeatureMatrix& encodings, std::size_t k = 10,
                          ReprMode mode = ReprMode::inverse_mean_distance);

}  // namespace cal
