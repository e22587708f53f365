#pragma once

#include <span>
#include <vector>

namespace cal {

/// Floor applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

/// KL(P || Q) in nats. Q is clamped to kProbabilityFloor; terms with P = 0
/// contribute 0. Throws ShapeError on a length mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// -sum p ln p in nats, with 0 ln 0 = 0.
double predictive_entropy(std::span<const double> p);

/// -ln max(p[label], floor).
double cross_entropy_term(std::span<const double> p, int label);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);
void softmax_inplace(std::span<double> logits);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace cal
