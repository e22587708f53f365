#pragma once

#include <cstddef>
#include <cstdint>

#include "cal/dataset.hpp"

namespace cal {

struct SyntheticSpec {
    int classes = 4;
    std::size_t per_class = 250;
    std::size_t dim = 16;
    double separation = 4.0;
    std::uint64_t seed = 0;
    std::size_t landmarks = 64;        // token vocabulary size
    std::size_t tokens_per_point = 4;  // nearest landmarks emitted as tokens
};

/// Isotropic unit-variance Gaussian blobs whose class means sit on a regular
/// simplex with pairwise distance `separation` (requires dim >= classes).
///
/// Each class is split independently: floor(10%) validation, floor(10%) test,
/// the rest pool. Ids are "x" + zero-padded index. Every example also gets a
/// token view: the codes ("lm<j>") of its nearest landmarks, where landmarks
/// are extra draws from the same mixture. Features are registered as the
/// "input" space.
DatasetStore generate_synthetic(const SyntheticSpec& spec);

}  // namespace cal
