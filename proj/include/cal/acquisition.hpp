#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cal/classifier.hpp"
#include "cal/dataset.hpp"
#include "cal/matrix.hpp"
#include "cal/rng.hpp"

namespace cal {

enum class Strategy { random, entropy, cal, kmeans_embedding, badge };
enum class CalDirection { argmax, argmin };
enum class CalPooling { mean, max, median };
enum class CalScoring { kl, cross_entropy };
enum class CalNeighborhood { per_unlabeled, per_labeled };

std::string_view to_string(Strategy s);
std::string_view to_string(CalDirection d);
std::string_view to_string(CalPooling p);
std::string_view to_string(CalScoring s);
std::string_view to_string(CalNeighborhood n);
Strategy parse_strategy(std::string_view s);
CalDirection parse_cal_direction(std::string_view s);
CalPooling parse_cal_pooling(std::string_view s);
CalScoring parse_cal_scoring(std::string_view s);
CalNeighborhood parse_cal_neighborhood(std::string_view s);

struct AcquisitionConfig {
    Strategy strategy = Strategy::cal;
    std::size_t b = 1;
    std::size_t k = 10;
    CalDirection cal_direction = CalDirection::argmax;
    CalPooling cal_pooling = CalPooling::mean;
    CalScoring cal_scoring = CalScoring::kl;
    CalNeighborhood cal_neighborhood = CalNeighborhood::per_unlabeled;
    /// Weight of the mean neighbor distance added to each CAL score. 0 = off.
    double cal_distance_weight = 0.0;
    std::string encoding = "model";
    bool kmeans_normalize = true;
    std::size_t kmeans_iters = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BatchSelection {
    std::vector<std::string> ids;     // selection order
    std::vector<double> scores;       // aligned with ids; NaN where the strategy has no score
    std::vector<double> pool_scores;  // aligned with the input pool (score-based strategies only)
    double inference_seconds = 0.0;
    double selection_seconds = 0.0;
    bool k_clamped = false;
};

/// Model outputs a CAL round needs. Rows of each matrix align with its ids.
struct CalInputs {
    std::span<const std::string> pool_ids;
    const Matrix& pool_probs;
    const FeatureMatrix& pool_encodings;
    const Matrix& labeled_probs;
    const FeatureMatrix& labeled_encodings;
    std::span<const int> labeled_labels;  // gold labels, used by cross-entropy scoring
};

struct CalScores {
    std::vector<double> scores;  // aligned with pool_ids
    bool k_clamped = false;
};

/// Per-candidate contrastive scores. With per_unlabeled neighborhoods each
/// candidate is scored against its k nearest labeled examples; with
/// per_labeled each labeled example scores its k nearest candidates and
/// candidates never reached score 0. Per-neighbor terms are
/// KL(p(y|x_l) || p(y|x_p)) or -ln p(y_l|x_p), pooled by config.cal_pooling.
CalScores cal_scores(const CalInputs& inputs, const AcquisitionConfig& config);

/// Contrastive acquisition: top-b (argmax) or bottom-b (argmin) candidates by
/// cal_scores; ties go to the ascending id.
BatchSelection acquire_cal(const CalInputs& inputs, const AcquisitionConfig& config);
BatchSelection acquire_cal_per_labeled(const CalInputs& inputs, AcquisitionConfig config);
BatchSelection acquire_cal_cross_entropy(const CalInputs& inputs, AcquisitionConfig config);

BatchSelection acquire_entropy(std::span<const std::string> pool_ids, const Matrix& pool_probs, std::size_t b);
BatchSelection acquire_random(std::span<const std::string> pool_ids, std::size_t b, Rng& rng);

/// Clusters the encodings (optionally row-normalized) into b groups and takes
/// the member nearest each centroid. Throws SizingError when b exceeds the
/// number of rows.
BatchSelection acquire_kmeans_embedding(const FeatureMatrix& encodings, std::size_t b, bool normalize, Rng& rng,
                                        std::size_t max_iters = 100);

/// k-means++ seeding over precomputed gradient embeddings.
BatchSelection select_badge(const FeatureMatrix& gradient_embeddings, std::size_t b, Rng& rng);
BatchSelection acquire_badge(const Classifier& model, const FeatureMatrix& pool_features, std::size_t b, Rng& rng);

/// Positions of the best `b` scores. descending = argmax order. Ties go to
/// the lexicographically smaller id.
std::vector<std::size_t> rank_by_score(std::span<const double> scores, std::span<const std::string> ids, std::size_t b,
                                       bool descending);

/// Median of a non-empty sequence (mean of the middle pair for even sizes).
double median(std::vector<double> values);

/// Audit dump: one {"id", "score", "strategy"} object per line. Entries with
/// a NaN score are written with "score": null. Fields of `context` (an
/// object, e.g. seed and iteration) are copied into every line.
void write_scores_jsonl(std::ostream& out, std::span<const std::string> ids, std::span<const double> scores,
                        std::string_view strategy, const nlohmann::json& context = nullptr);

}  // namespace cal
