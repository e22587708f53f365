#include "cal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cal/error.hpp"

namespace cal {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw ShapeError("kl_divergence: lengths " + std::to_string(p.size()) + " and " + std::to_string(q.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        sum += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kProbabilityFloor)));
    }
    // Rounding can leave -1e-17 for identical inputs.
    return std::max(sum, 0.0);
}

double predictive_entropy(std::span<const double> p) {
    double sum = 0.0;
    for (double v : p) {
        if (v > 0.0) sum -= v * std::log(v);
    }
    return std::max(sum, 0.0);
}

double cross_entropy_term(std::span<const double> p, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= p.size()) {
        throw ShapeError("cross_entropy_term: label " + std::to_string(label) + " out of range");
    }
    return -std::log(std::max(p[static_cast<std::size_t>(label)], kProbabilityFloor));
}

void softmax_inplace(std::span<double> z) {
    if (z.empty()) return;
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : z) v /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    softmax_inplace(out);
    return out;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

}  // namespace cal
