#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cal/error.hpp"
#include "cal/kernels.hpp"
#include "oracles.hpp"

using namespace cal;

using V = std::vector<double>;

TEST_CASE("kl_divergence reference values") {
    CHECK(kl_divergence(V{0.8, 0.2}, V{0.6, 0.4}) == doctest::Approx(0.0915162218494357).epsilon(1e-12));
    CHECK(std::abs(kl_divergence(V{0.8, 0.2}, V{0.6, 0.4}) - 0.091515) < 5e-6);
    CHECK(kl_divergence(V{1.0, 0.0}, V{0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(kl_divergence(V{0.3, 0.7}, V{0.3, 0.7}) == 0.0);
    CHECK(std::isfinite(kl_divergence(V{0.5, 0.5}, V{1.0, 0.0})));
    CHECK_THROWS_AS(kl_divergence(V{0.5, 0.5}, V{1.0}), ShapeError);
}

TEST_CASE("predictive_entropy reference values") {
    CHECK(predictive_entropy(V{1.0, 0.0, 0.0}) == 0.0);
    CHECK(predictive_entropy(V{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(predictive_entropy(V{0.7, 0.3}) == doctest::Approx(0.610864302054893).epsilon(1e-12));
}

TEST_CASE("kernel properties over random simplex pairs") {
    std::mt19937_64 gen(42);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t c = 2 + static_cast<std::size_t>(trial % 6);
        const auto p = oracle::simplex(gen, c, 1.0 + trial % 3);
        const auto q = oracle::simplex(gen, c);
        const double d = kl_divergence(p, q);
        CHECK(d >= 0.0);
        CHECK(std::abs(d - static_cast<double>(oracle::kl(p, q))) < 1e-9);
        CHECK(kl_divergence(p, p) < 1e-12);

        const double h = predictive_entropy(p);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(c)) + 1e-12);
        auto perm = p;
        std::reverse(perm.begin(), perm.end());
        CHECK(predictive_entropy(perm) == doctest::Approx(h).epsilon(1e-12));
    }
}

TEST_CASE("cross_entropy_term") {
    CHECK(cross_entropy_term(V{0.9, 0.1}, 1) == doctest::Approx(2.302585092994046).epsilon(1e-12));
    CHECK(cross_entropy_term(V{0.0, 1.0}, 1) == 0.0);
    CHECK(cross_entropy_term(V{1.0, 0.0}, 1) == doctest::Approx(-std::log(kProbabilityFloor)));
    CHECK_THROWS_AS(cross_entropy_term(V{0.5, 0.5}, 2), ShapeError);
    // KL(e_y || q) = -ln q_y
    std::mt19937_64 gen(5);
    for (int i = 0; i < 100; ++i) {
        const auto q = oracle::simplex(gen, 4);
        V onehot(4, 0.0);
        onehot[static_cast<std::size_t>(i % 4)] = 1.0;
        CHECK(kl_divergence(onehot, q) == doctest::Approx(cross_entropy_term(q, i % 4)).epsilon(1e-12));
    }
}

TEST_CASE("softmax is stable and shift invariant") {
    const auto big = softmax(V{1000.0, 0.0});
    CHECK(big[0] == 1.0);
    CHECK(big[1] >= 0.0);
    CHECK(big[1] < 1e-300);
    const auto flat = softmax(V{3.5, 3.5, 3.5});
    for (double v : flat) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const auto a = softmax(V{1.0, 2.0, -1.0});
    const auto b = softmax(V{1001.0, 1002.0, 999.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1000.0, 1000.0);
    for (int i = 0; i < 200; ++i) {
        V z(5);
        for (auto& v : z) v = u(gen);
        const auto p = softmax(z);
        double s = 0.0;
        for (double v : p) s += v;
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("argmax ties go to the lowest index") {
    CHECK(argmax(V{0.2, 0.4, 0.4}) == 1);
    CHECK(argmax(V{1.0}) == 0);
}
