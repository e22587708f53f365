#include "cal/acquisition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "cal/kernels.hpp"
#include "cal/kmeans.hpp"
#include "cal/neighbors.hpp"
#include "cal/parallel.hpp"

namespace cal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<std::string_view, E> (&table)[N], const char* what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E e, const std::pair<std::string_view, E> (&table)[N]) {
    for (const auto& [name, value] : table) {
        if (value == e) return name;
    }
    return "?";
}

constexpr std::pair<std::string_view, Strategy> kStrategies[] = {{"random", Strategy::random},
                                                                 {"entropy", Strategy::entropy},
                                                                 {"cal", Strategy::cal},
                                                                 {"kmeans_embedding", Strategy::kmeans_embedding},
                                                                 {"badge", Strategy::badge}};
constexpr std::pair<std::string_view, CalDirection> kDirections[] = {{"argmax", CalDirection::argmax},
                                                                     {"argmin", CalDirection::argmin}};
constexpr std::pair<std::string_view, CalPooling> kPoolings[] = {
    {"mean", CalPooling::mean}, {"max", CalPooling::max}, {"median", CalPooling::median}};
constexpr std::pair<std::string_view, CalScoring> kScorings[] = {{"kl", CalScoring::kl},
                                                                 {"cross_entropy", CalScoring::cross_entropy}};
constexpr std::pair<std::string_view, CalNeighborhood> kNeighborhoods[] = {
    {"per_unlabeled", CalNeighborhood::per_unlabeled}, {"per_labeled", CalNeighborhood::per_labeled}};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double pool_terms(std::vector<double>& terms, CalPooling pooling) {
    switch (pooling) {
        case CalPooling::mean: {
            double s = 0.0;
            for (double t : terms) s += t;
            return s / static_cast<double>(terms.size());
        }
        case CalPooling::max: return *std::max_element(terms.begin(), terms.end());
        case CalPooling::median: return median(terms);
    }
    return 0.0;
}

double neighbor_term(const CalInputs& in, CalScoring scoring, std::size_t labeled_row, std::size_t pool_row) {
    if (scoring == CalScoring::kl) return kl_divergence(in.labeled_probs.row(labeled_row), in.pool_probs.row(pool_row));
    return cross_entropy_term(in.pool_probs.row(pool_row), in.labeled_labels[labeled_row]);
}

void check_inputs(const CalInputs& in, const AcquisitionConfig& config) {
    if (in.pool_ids.empty()) throw StateError("CAL acquisition from an empty pool");
    if (in.labeled_encodings.rows() == 0) throw StateError("CAL needs at least one labeled example");
    if (in.pool_probs.rows() != in.pool_ids.size() || in.pool_encodings.rows() != in.pool_ids.size()) {
        throw ShapeError("CAL pool probabilities/encodings do not align with pool ids");
    }
    if (in.labeled_probs.rows() != in.labeled_encodings.rows()) {
        throw ShapeError("CAL labeled probabilities/encodings do not align");
    }
    if (in.pool_encodings.cols() != in.labeled_encodings.cols()) throw ShapeError("CAL encodings differ in dimension");
    if (in.pool_probs.cols() != in.labeled_probs.cols()) throw ShapeError("CAL probabilities differ in class count");
    if (config.cal_scoring == CalScoring::cross_entropy && in.labeled_labels.size() != in.labeled_encodings.rows()) {
        throw ShapeError("cross-entropy scoring needs one gold label per labeled example");
    }
}

BatchSelection from_ranking(std::span<const std::string> ids, std::vector<double> scores, std::size_t b,
                            bool descending) {
    BatchSelection sel;
    for (std::size_t i : rank_by_score(scores, ids, b, descending)) {
        sel.ids.push_back(ids[i]);
        sel.scores.push_back(scores[i]);
    }
    sel.pool_scores = std::move(scores);
    return sel;
}

}  // namespace

std::string_view to_string(Strategy s) { return enum_name(s, kStrategies); }
std::string_view to_string(CalDirection d) { return enum_name(d, kDirections); }
std::string_view to_string(CalPooling p) { return enum_name(p, kPoolings); }
std::string_view to_string(CalScoring s) { return enum_name(s, kScorings); }
std::string_view to_string(CalNeighborhood n) { return enum_name(n, kNeighborhoods); }
Strategy parse_strategy(std::string_view s) { return parse_enum(s, kStrategies, "strategy"); }
CalDirection parse_cal_direction(std::string_view s) { return parse_enum(s, kDirections, "cal_direction"); }
CalPooling parse_cal_pooling(std::string_view s) { return parse_enum(s, kPoolings, "cal_pooling"); }
CalScoring parse_cal_scoring(std::string_view s) { return parse_enum(s, kScorings, "cal_scoring"); }
CalNeighborhood parse_cal_neighborhood(std::string_view s) { return parse_enum(s, kNeighborhoods, "cal_neighborhood"); }

void AcquisitionConfig::validate() const {
    if (b < 1) throw ConfigError("acquisition size b must be at least 1");
    if (k < 1) throw ConfigError("neighbor count k must be at least 1");
    if (!(cal_distance_weight >= 0.0)) throw ConfigError("cal_distance_weight must be non-negative");
    if (kmeans_iters < 1) throw ConfigError("kmeans_iters must be at least 1");
    validate_encoding_selector(encoding);
}

double median(std::vector<double> values) {
    if (values.empty()) throw ShapeError("median of an empty sequence");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::vector<std::size_t> rank_by_score(std::span<const double> scores, std::span<const std::string> ids, std::size_t b,
                                       bool descending) {
    if (scores.size() != ids.size()) throw ShapeError("scores and ids differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    b = std::min(b, order.size());
    auto better = [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return descending ? scores[a] > scores[c] : scores[a] < scores[c];
        return ids[a] < ids[c];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(b), order.end(), better);
    order.resize(b);
    return order;
}

CalScores cal_scores(const CalInputs& in, const AcquisitionConfig& config) {
    check_inputs(in, config);
    const std::size_t pool = in.pool_ids.size();
    const std::size_t labeled = in.labeled_encodings.rows();
    CalScores out;
    out.scores.assign(pool, 0.0);

    if (config.cal_neighborhood == CalNeighborhood::per_unlabeled) {
        const KnnIndex index(in.labeled_encodings);
        out.k_clamped = config.k > labeled;
        const auto neighbors = index.query_batch(in.pool_encodings, config.k);
        parallel_for(pool, [&](std::size_t begin, std::size_t end) {
            std::vector<double> terms;
            for (std::size_t p = begin; p < end; ++p) {
                const auto& nb = neighbors[p];
                terms.clear();
                double dist = 0.0;
                for (std::size_t i = 0; i < nb.indices.size(); ++i) {
                    terms.push_back(neighbor_term(in, config.cal_scoring, nb.indices[i], p));
                    dist += nb.distances[i];
                }
                double s = pool_terms(terms, config.cal_pooling);
                if (config.cal_distance_weight > 0.0) {
                    s += config.cal_distance_weight * dist / static_cast<double>(nb.indices.size());
                }
                out.scores[p] = s;
            }
        });
        return out;
    }

    // per_labeled: each labeled example scores its k nearest pool candidates.
    const KnnIndex index(in.pool_encodings);
    out.k_clamped = config.k > pool;
    const auto neighbors = index.query_batch(in.labeled_encodings, config.k);
    std::vector<std::vector<double>> terms(pool);
    std::vector<std::vector<double>> dists(pool);
    for (std::size_t l = 0; l < labeled; ++l) {
        const auto& nb = neighbors[l];
        for (std::size_t i = 0; i < nb.indices.size(); ++i) {
            const std::size_t p = nb.indices[i];
            terms[p].push_back(neighbor_term(in, config.cal_scoring, l, p));
            dists[p].push_back(nb.distances[i]);
        }
    }
    for (std::size_t p = 0; p < pool; ++p) {
        if (terms[p].empty()) continue;
        double s = pool_terms(terms[p], config.cal_pooling);
        if (config.cal_distance_weight > 0.0) {
            s += config.cal_distance_weight * std::accumulate(dists[p].begin(), dists[p].end(), 0.0) /
                 static_cast<double>(dists[p].size());
        }
        out.scores[p] = s;
    }
    return out;
}

BatchSelection acquire_cal(const CalInputs& inputs, const AcquisitionConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    auto scored = cal_scores(inputs, config);
    auto sel = from_ranking(inputs.pool_ids, std::move(scored.scores), config.b,
                            config.cal_direction == CalDirection::argmax);
    sel.k_clamped = scored.k_clamped;
    sel.selection_seconds = seconds_since(start);
    return sel;
}

BatchSelection acquire_cal_per_labeled(const CalInputs& inputs, AcquisitionConfig config) {
    config.cal_neighborhood = CalNeighborhood::per_labeled;
    return acquire_cal(inputs, config);
}

BatchSelection acquire_cal_cross_entropy(const CalInputs& inputs, AcquisitionConfig config) {
    config.cal_scoring = CalScoring::cross_entropy;
    return acquire_cal(inputs, config);
}

BatchSelection acquire_entropy(std::span<const std::string> pool_ids, const Matrix& pool_probs, std::size_t b) {
    const auto start = std::chrono::steady_clock::now();
    if (pool_probs.rows() != pool_ids.size()) throw ShapeError("entropy: probabilities do not align with pool ids");
    std::vector<double> scores(pool_ids.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = predictive_entropy(pool_probs.row(i));
    auto sel = from_ranking(pool_ids, std::move(scores), b, true);
    sel.selection_seconds = seconds_since(start);
    return sel;
}

BatchSelection acquire_random(std::span<const std::string> pool_ids, std::size_t b, Rng& rng) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> ids(pool_ids.begin(), pool_ids.end());
    b = std::min(b, ids.size());
    for (std::size_t i = 0; i < b; ++i) std::swap(ids[i], ids[i + rng.uniform_index(ids.size() - i)]);
    ids.resize(b);
    BatchSelection sel;
    sel.ids = std::move(ids);
    sel.scores.assign(b, kNaN);
    sel.selection_seconds = seconds_since(start);
    return sel;
}

BatchSelection acquire_kmeans_embedding(const FeatureMatrix& encodings, std::size_t b, bool normalize, Rng& rng,
                                        std::size_t max_iters) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = encodings.rows();
    if (b > n) throw SizingError("k-means acquisition of " + std::to_string(b) + " from a pool of " + std::to_string(n));
    BatchSelection sel;
    if (b == 0) return sel;
    const FeatureMatrix points = normalize ? l2_normalize_rows(encodings) : encodings;
    const auto km = lloyd_kmeans(points, b, max_iters, rng);

    std::vector<std::size_t> pick(b, n);
    std::vector<double> pick_d(b, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = km.assignments[i];
        double d = 0.0;
        for (std::size_t j = 0; j < points.cols(); ++j) {
            const double diff = static_cast<double>(points.row(i)[j]) - km.centroids(c, j);
            d += diff * diff;
        }
        if (d < pick_d[c] || (d == pick_d[c] && points.row_id(i) < points.row_id(pick[c]))) {
            pick_d[c] = d;
            pick[c] = i;
        }
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < b; ++c) {
        if (pick[c] == n) continue;
        taken[pick[c]] = true;
        sel.ids.push_back(points.row_id(pick[c]));
        sel.scores.push_back(std::sqrt(pick_d[c]));
    }
    if (sel.ids.size() < b) {
        // Empty clusters (only possible with duplicate points): fill by ascending id.
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i) {
            if (!taken[i]) rest.push_back(i);
        }
        std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t c) { return points.row_id(a) < points.row_id(c); });
        for (std::size_t i = 0; sel.ids.size() < b; ++i) {
            sel.ids.push_back(points.row_id(rest[i]));
            sel.scores.push_back(kNaN);
        }
    }
    sel.selection_seconds = seconds_since(start);
    return sel;
}

BatchSelection select_badge(const FeatureMatrix& gradient_embeddings, std::size_t b, Rng& rng) {
    const auto start = std::chrono::steady_clock::now();
    BatchSelection sel;
    for (std::size_t i : kmeans_pp_init(gradient_embeddings, std::min(b, gradient_embeddings.rows()), rng)) {
        sel.ids.push_back(gradient_embeddings.row_id(i));
        sel.scores.push_back(std::sqrt(squared_norm(gradient_embeddings.row(i))));
    }
    sel.selection_seconds = seconds_since(start);
    return sel;
}

BatchSelection acquire_badge(const Classifier& model, const FeatureMatrix& pool_features, std::size_t b, Rng& rng) {
    const auto start = std::chrono::steady_clock::now();
    const auto embeddings = gradient_embedding(model, pool_features);
    const double inference = seconds_since(start);
    auto sel = select_badge(embeddings, b, rng);
    sel.inference_seconds = inference;
    return sel;
}

void write_scores_jsonl(std::ostream& out, std::span<const std::string> ids, std::span<const double> scores,
                        std::string_view strategy, const nlohmann::json& context) {
    if (ids.size() != scores.size()) throw ShapeError("scores and ids differ in length");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        nlohmann::json j = context.is_object() ? context : nlohmann::json::object();
        j["id"] = ids[i];
        j["score"] = std::isfinite(scores[i]) ? nlohmann::json(scores[i]) : nlohmann::json(nullptr);
        j["strategy"] = std::string(strategy);
        out << j.dump() << '\n';
    }
}

}  // namespace cal
