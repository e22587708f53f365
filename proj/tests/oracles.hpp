#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library code paths it is used to check.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cal/dataset.hpp"
#include "cal/matrix.hpp"

namespace oracle {

inline constexpr long double kFloor = 1e-12L;

/// Direct summation in long double with the 0 ln 0 = 0 convention.
inline long double kl(const std::vector<double>& p, const std::vector<double>& q) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        const long double pi = p[i];
        const long double qi = std::max<long double>(q[i], kFloor);
        s += pi * (std::log(pi) - std::log(qi));
    }
    return std::max(s, 0.0L);
}

inline long double entropy(const std::vector<double>& p) {
    long double s = 0.0L;
    for (double v : p) {
        if (v > 0.0) s -= static_cast<long double>(v) * std::log(static_cast<long double>(v));
    }
    return s;
}

/// Random point on the probability simplex. `spikiness` > 1 concentrates mass.
inline std::vector<double> simplex(std::mt19937_64& gen, std::size_t c, double spikiness = 1.0) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(c);
    double s = 0.0;
    for (auto& v : p) {
        v = std::pow(e(gen), spikiness);
        s += v;
    }
    for (auto& v : p) v /= s;
    return p;
}

inline cal::Matrix prob_matrix(const std::vector<std::vector<double>>& rows) {
    cal::Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

inline std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "e") {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string digits = std::to_string(i);
        ids[i] = prefix + std::string(6 - std::min<std::size_t>(6, digits.size()), '0') + digits;
    }
    return ids;
}

inline cal::FeatureMatrix features(const std::vector<std::vector<float>>& rows, const std::string& prefix = "e") {
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    std::vector<float> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return cal::FeatureMatrix(cal::DenseMatrix<float>(rows.size(), cols, std::move(flat)), make_ids(rows.size(), prefix));
}

inline cal::FeatureMatrix random_features(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                                          const std::string& prefix = "e", double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<std::vector<float>> data(rows, std::vector<float>(cols));
    for (auto& r : data) {
        for (auto& v : r) v = static_cast<float>(n(gen));
    }
    return features(data, prefix);
}

/// Euclidean distance by the textbook difference formula, in long double.
inline long double distance(std::span<const float> a, std::span<const float> b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

/// Two-loop KNN: all distances, full sort, ties by ascending row.
inline std::vector<std::pair<long double, std::size_t>> knn(const cal::FeatureMatrix& ref, std::span<const float> q,
                                                            std::size_t k) {
    std::vector<std::pair<long double, std::size_t>> all;
    for (std::size_t r = 0; r < ref.rows(); ++r) all.emplace_back(distance(ref.row(r), q), r);
    std::sort(all.begin(), all.end());
    all.resize(std::min(k, all.size()));
    return all;
}

enum class Pool { mean, max, median };

inline long double pool_terms(std::vector<long double> t, Pool mode) {
    if (mode == Pool::mean) {
        long double s = 0.0L;
        for (auto v : t) s += v;
        return s / static_cast<long double>(t.size());
    }
    std::sort(t.begin(), t.end());
    if (mode == Pool::max) return t.back();
    const std::size_t m = t.size() / 2;
    return t.size() % 2 ? t[m] : (t[m - 1] + t[m]) / 2.0L;
}

inline std::vector<double> row_of(const cal::Matrix& m, std::size_t r) {
    auto s = m.row(r);
    return {s.begin(), s.end()};
}

/// Exhaustive CAL scoring: every candidate against every labeled point,
/// distances sorted, the k nearest KL(labeled || candidate) terms pooled.
inline std::vector<long double> cal_scores(const cal::FeatureMatrix& pool_enc, const cal::Matrix& pool_p,
                                           const cal::FeatureMatrix& lab_enc, const cal::Matrix& lab_p, std::size_t k,
                                           Pool mode) {
    std::vector<long double> out;
    for (std::size_t c = 0; c < pool_enc.rows(); ++c) {
        std::vector<std::pair<long double, std::size_t>> d;
        for (std::size_t l = 0; l < lab_enc.rows(); ++l) d.emplace_back(distance(lab_enc.row(l), pool_enc.row(c)), l);
        std::sort(d.begin(), d.end());
        std::vector<long double> terms;
        for (std::size_t i = 0; i < std::min(k, d.size()); ++i) {
            terms.push_back(kl(row_of(lab_p, d[i].second), row_of(pool_p, c)));
        }
        out.push_back(pool_terms(terms, mode));
    }
    return out;
}

/// Labeled-to-pool variant: each labeled point scores its k nearest pool
/// points; pool points average their terms and unpicked points score 0.
inline std::vector<long double> cal_scores_per_labeled(const cal::FeatureMatrix& pool_enc, const cal::Matrix& pool_p,
                                                       const cal::FeatureMatrix& lab_enc, const cal::Matrix& lab_p,
                                                       std::size_t k) {
    std::vector<std::vector<long double>> terms(pool_enc.rows());
    for (std::size_t l = 0; l < lab_enc.rows(); ++l) {
        std::vector<std::pair<long double, std::size_t>> d;
        for (std::size_t c = 0; c < pool_enc.rows(); ++c) d.emplace_back(distance(lab_enc.row(l), pool_enc.row(c)), c);
        std::sort(d.begin(), d.end());
        for (std::size_t i = 0; i < std::min(k, d.size()); ++i) {
            terms[d[i].second].push_back(kl(row_of(lab_p, l), row_of(pool_p, d[i].second)));
        }
    }
    std::vector<long double> out;
    for (auto& t : terms) out.push_back(t.empty() ? 0.0L : pool_terms(t, Pool::mean));
    return out;
}

/// Indices of the b best scores, ties by ascending id.
inline std::vector<std::size_t> top_b(const std::vector<long double>& scores, const std::vector<std::string>& ids,
                                      std::size_t b, bool descending) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return descending ? scores[a] > scores[c] : scores[a] < scores[c];
        return ids[a] < ids[c];
    });
    order.resize(std::min(b, order.size()));
    return order;
}

/// Central finite differences of f at x, one coordinate at a time.
template <typename F>
std::vector<double> finite_difference(F&& f, std::vector<double> x, double eps = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + eps;
        const double up = f(x);
        x[i] = orig - eps;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("caltest-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace oracle
