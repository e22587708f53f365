#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace cal {

/// Seeded random stream.
///
/// Only the raw 64-bit output of std::mt19937_64 is used (its sequence is fixed
/// by the standard). Integer, uniform and normal draws are derived here rather
/// than through <random> distributions, whose algorithms are
/// implementation-defined, so a seed produces the same draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n);

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01();

    /// Standard normal draw (Box-Muller, one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Derives the seed of a named sub-stream from a master seed:
/// splitmix64(master ^ fnv1a64(stream) ^ splitmix64(index + 1)).
/// Every randomized component of a run draws from its own sub-stream so that
/// adding draws to one component never shifts another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

}  // namespace cal
