#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cal/dataset.hpp"

namespace cal {

/// Lowercases ASCII letters, splits on whitespace (ASCII and the common
/// Unicode space characters) and strips leading/trailing ASCII punctuation.
/// Tokens that become empty are dropped.
std::vector<std::string> tokenize(std::string_view text);

struct Vocabulary {
    std::vector<std::string> tokens;  // id -> token, ascending
    std::vector<std::size_t> document_frequency;
    std::unordered_map<std::string, std::size_t> ids;

    std::size_t size() const { return tokens.size(); }
};

/// Vocabulary of tokens appearing in at least `min_df` documents.
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> documents, std::size_t min_df);

/// tf-idf rows: tf(i,t) * (ln((1+N)/(1+df(t))) + 1), then L2-normalized.
/// Documents without vocabulary tokens stay all-zero.
DenseMatrix<float> tfidf_rows(std::span<const std::vector<std::string>> documents, const Vocabulary& vocabulary);

/// Builds the tf-idf space over every example of the store (ids ascending) and
/// registers it as "tfidf".
FeatureMatrix build_tfidf(DatasetStore& store, std::size_t min_df);

}  // namespace cal
