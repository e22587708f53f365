#include "cal/neighbors.hpp"

#include <algorithm>
#include <cmath>

#include "cal/parallel.hpp"

namespace cal {

double squared_norm(std::span<const float> v) { return dot(v, v); }

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    return s;
}

KnnIndex::KnnIndex(FeatureMatrix reference) : reference_(std::move(reference)) {
    if (reference_.rows() == 0) throw ValidationError("KNN reference is empty");
    norms_.resize(reference_.rows());
    for (std::size_t i = 0; i < reference_.rows(); ++i) norms_[i] = squared_norm(reference_.row(i));
}

KnnIndex build_index(FeatureMatrix reference) { return KnnIndex(std::move(reference)); }

void KnnIndex::select(std::vector<std::pair<double, std::size_t>>& scratch, std::size_t k, NeighborSet& out) const {
    out.k_clamped = k > scratch.size();
    k = std::min(k, scratch.size());
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
    out.indices.resize(k);
    out.distances.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.indices[i] = scratch[i].second;
        out.distances[i] = std::sqrt(scratch[i].first);
    }
}

NeighborSet KnnIndex::query(std::span<const float> q, std::size_t k) const {
    if (k == 0) throw ValidationError("KNN query with k = 0");
    if (q.size() != dim()) {
        throw ShapeError("query has dimension " + std::to_string(q.size()) + ", index has " + std::to_string(dim()));
    }
    const double qn = squared_norm(q);
    std::vector<std::pair<double, std::size_t>> scratch(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const double d2 = qn + norms_[i] - 2.0 * dot(q, reference_.row(i));
        scratch[i] = {std::max(d2, 0.0), i};
    }
    NeighborSet out;
    select(scratch, k, out);
    return out;
}

std::vector<NeighborSet> KnnIndex::query_batch(const FeatureMatrix& queries, std::size_t k) const {
    if (k == 0) throw ValidationError("KNN query with k = 0");
    if (queries.cols() != dim()) {
        throw ShapeError("queries have dimension " + std::to_string(queries.cols()) + ", index has " +
                         std::to_string(dim()));
    }
    constexpr std::size_t kQueryBlock = 16;
    constexpr std::size_t kRefTile = 256;
    std::vector<NeighborSet> out(queries.rows());
    const std::size_t blocks = (queries.rows() + kQueryBlock - 1) / kQueryBlock;

    parallel_for(blocks, [&](std::size_t block_begin, std::size_t block_end) {
        std::vector<std::vector<std::pair<double, std::size_t>>> scratch(kQueryBlock,
                                                                         std::vector<std::pair<double, std::size_t>>(size()));
        std::vector<double> qnorm(kQueryBlock);
        for (std::size_t block = block_begin; block < block_end; ++block) {
            const std::size_t q0 = block * kQueryBlock;
            const std::size_t q1 = std::min(queries.rows(), q0 + kQueryBlock);
            for (std::size_t q = q0; q < q1; ++q) qnorm[q - q0] = squared_norm(queries.row(q));
            for (std::size_t r0 = 0; r0 < size(); r0 += kRefTile) {
                const std::size_t r1 = std::min(size(), r0 + kRefTile);
                for (std::size_t q = q0; q < q1; ++q) {
                    const auto qrow = queries.row(q);
                    auto& s = scratch[q - q0];
                    for (std::size_t r = r0; r < r1; ++r) {
                        const double d2 = qnorm[q - q0] + norms_[r] - 2.0 * dot(qrow, reference_.row(r));
                        s[r] = {std::max(d2, 0.0), r};
                    }
                }
            }
            for (std::size_t q = q0; q < q1; ++q) select(scratch[q - q0], k, out[q]);
        }
    }, 4);
    return out;
}

}  // namespace cal
