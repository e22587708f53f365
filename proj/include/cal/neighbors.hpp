#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cal/dataset.hpp"

namespace cal {

/// k nearest reference rows of one query, nearest first.
struct NeighborSet {
    std::vector<std::size_t> indices;  // rows of the reference matrix
    std::vector<double> distances;     // Euclidean, non-decreasing
    bool k_clamped = false;            // requested k exceeded the reference size
};

/// Exact Euclidean KNN over a fixed reference matrix.
///
/// Squared distances are evaluated as ||q||^2 + ||r||^2 - 2 q.r in double,
/// with negative round-off clamped to zero. Norms and dot products share one
/// accumulation order, so a query equal to a reference row gets distance 0
/// exactly. Ties are broken by ascending reference row.
class KnnIndex {
public:
    /// Throws ValidationError for an empty reference.
    explicit KnnIndex(FeatureMatrix reference);

    const FeatureMatrix& reference() const { return reference_; }
    std::span<const double> norms() const { return norms_; }
    std::size_t size() const { return reference_.rows(); }
    std::size_t dim() const { return reference_.cols(); }

    /// k is clamped to size() (flagged in the result). Throws ShapeError on a
    /// dimension mismatch and ValidationError for k = 0.
    NeighborSet query(std::span<const float> q, std::size_t k) const;

    /// One NeighborSet per query row. Queries are processed in blocks against
    /// reference tiles and may be sharded across threads; the output does not
    /// depend on the shard count.
    std::vector<NeighborSet> query_batch(const FeatureMatrix& queries, std::size_t k) const;

private:
    void select(std::vector<std::pair<double, std::size_t>>& scratch, std::size_t k, NeighborSet& out) const;

    FeatureMatrix reference_;
    std::vector<double> norms_;
};

KnnIndex build_index(FeatureMatrix reference);

/// Squared norm with the same accumulation order the index uses.
double squared_norm(std::span<const float> v);
double dot(std::span<const float> a, std::span<const float> b);

}  // namespace cal
