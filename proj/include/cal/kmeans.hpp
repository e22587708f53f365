#pragma once

#include <cstddef>
#include <vector>

#include "cal/dataset.hpp"
#include "cal/rng.hpp"

namespace cal {

/// k-means++ seeding: the first center is uniform, each further center is
/// drawn with probability proportional to its squared distance to the nearest
/// chosen center. If every remaining point has zero distance, the next center
/// is uniform over the unchosen points. Returns distinct row indices in draw
/// order. Throws SizingError when k exceeds the row count.
std::vector<std::size_t> kmeans_pp_init(const FeatureMatrix& points, std::size_t k, Rng& rng);

struct KMeansResult {
    Matrix centroids;                      // k x d
    std::vector<std::size_t> assignments;  // cluster per row
    double inertia = 0.0;                  // sum of squared distances to assigned centroid
    std::vector<double> inertia_history;   // one entry per assignment step
    std::size_t iterations = 0;
};

/// Lloyd iterations from a k-means++ start. Ties in assignment go to the
/// lowest cluster index; an empty cluster is reseeded to the point farthest
/// from its current centroid. Stops when assignments repeat, when the relative
/// inertia improvement drops to `tolerance`, or after `max_iters` updates.
KMeansResult lloyd_kmeans(const FeatureMatrix& points, std::size_t k, std::size_t max_iters, Rng& rng,
                          double tolerance = 1e-6);

/// Rows scaled to unit L2 norm; zero rows are left unchanged.
FeatureMatrix l2_normalize_rows(const FeatureMatrix& points);

}  // namespace cal
