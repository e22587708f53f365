#include "cal/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cal/parallel.hpp"

namespace cal {

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        s += d * d;
    }
    return s;
}

double squared_distance(std::span<const float> a, std::span<const double> c) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = static_cast<double>(a[j]) - c[j];
        s += d * d;
    }
    return s;
}

// Assigns every point to its nearest centroid; returns the inertia.
double assign(const FeatureMatrix& points, const Matrix& centroids, std::vector<std::size_t>& assignments,
              std::vector<double>& cost) {
    parallel_for(points.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centroids.rows(); ++c) {
                const double d = squared_distance(points.row(i), centroids.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assignments[i] = best;
            cost[i] = best_d;
        }
    });
    double inertia = 0.0;
    for (double c : cost) inertia += c;
    return inertia;
}

}  // namespace

std::vector<std::size_t> kmeans_pp_init(const FeatureMatrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    if (k > n) throw SizingError("k-means++ with k=" + std::to_string(k) + " over " + std::to_string(n) + " points");
    std::vector<std::size_t> centers;
    if (k == 0) return centers;
    centers.reserve(k);
    std::vector<bool> chosen(n, false);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t idx) {
        centers.push_back(idx);
        chosen[idx] = true;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = chosen[i] ? 0.0 : std::min(nearest[i], squared_distance(points.row(i), points.row(idx)));
        }
    };

    take(rng.uniform_index(n));
    while (centers.size() < k) {
        double total = 0.0;
        for (double d : nearest) total += d;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double running = 0.0;
            std::size_t pick = n;
            std::size_t last_positive = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (nearest[i] <= 0.0) continue;
                last_positive = i;
                running += nearest[i];
                if (running > target) {
                    pick = i;
                    break;
                }
            }
            take(pick < n ? pick : last_positive);
        } else {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) free.push_back(i);
            }
            take(free[rng.uniform_index(free.size())]);
        }
    }
    return centers;
}

KMeansResult lloyd_kmeans(const FeatureMatrix& points, std::size_t k, std::size_t max_iters, Rng& rng,
                          double tolerance) {
    if (k == 0) throw SizingError("k-means with k = 0");
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    const auto seeds = kmeans_pp_init(points, k, rng);

    KMeansResult result;
    result.centroids = Matrix(k, d);
    for (std::size_t c = 0; c < k; ++c) {
        const auto src = points.row(seeds[c]);
        std::copy(src.begin(), src.end(), result.centroids.row(c).begin());
    }
    result.assignments.assign(n, 0);
    std::vector<double> cost(n);
    std::vector<std::size_t> previous;

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        const double inertia = assign(points, result.centroids, result.assignments, cost);
        result.inertia_history.push_back(inertia);
        if (iter > 0 && result.assignments == previous) break;
        previous = result.assignments;

        Matrix sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = result.assignments[i];
            ++counts[c];
            auto row = points.row(i);
            auto acc = sums.row(c);
            for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < d; ++j) result.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            // Reseed to the point farthest from its (updated) centroid, never
            // emptying another cluster.
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[result.assignments[i]] < 2) continue;
                const double dist = squared_distance(points.row(i), result.centroids.row(result.assignments[i]));
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            if (far == n) continue;
            --counts[result.assignments[far]];
            result.assignments[far] = c;
            counts[c] = 1;
            const auto src = points.row(far);
            std::copy(src.begin(), src.end(), result.centroids.row(c).begin());
        }
        ++result.iterations;

        const auto& hist = result.inertia_history;
        if (hist.size() >= 2 && hist[hist.size() - 2] - hist.back() <= tolerance * hist[hist.size() - 2]) break;
    }
    const double final_inertia = assign(points, result.centroids, result.assignments, cost);
    result.inertia_history.push_back(final_inertia);
    result.inertia = final_inertia;
    return result;
}

FeatureMatrix l2_normalize_rows(const FeatureMatrix& points) {
    DenseMatrix<float> out = points.values();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        double n2 = 0.0;
        for (float v : row) n2 += static_cast<double>(v) * v;
        if (n2 == 0.0) continue;
        const double inv = 1.0 / std::sqrt(n2);
        for (float& v : row) v = static_cast<float>(v * inv);
    }
    return FeatureMatrix(std::move(out), points.row_ids());
}

}  // namespace cal
