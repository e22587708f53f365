#include "cal/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace cal {

namespace {

// Byte length of a Unicode whitespace sequence starting at s[i], or 0.
std::size_t whitespace_length(std::string_view s, std::size_t i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
    auto byte = [&](std::size_t k) { return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u; };
    if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;  // U+0085, U+00A0
    if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;    // U+1680
    if (c == 0xE2 && byte(1) == 0x80) {
        const auto b = byte(2);
        if ((b >= 0x80 && b <= 0x8A) || b == 0xA8 || b == 0xA9 || b == 0xAF) return 3;  // U+2000..200A, 2028, 2029, 202F
    }
    if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
    if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
    return 0;
}

void flush(std::string& current, std::vector<std::string>& out) {
    std::size_t begin = 0;
    std::size_t end = current.size();
    while (begin < end && std::ispunct(static_cast<unsigned char>(current[begin]))) ++begin;
    while (end > begin && std::ispunct(static_cast<unsigned char>(current[end - 1]))) --end;
    if (end > begin) out.push_back(current.substr(begin, end - begin));
    current.clear();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < text.size();) {
        if (const auto ws = whitespace_length(text, i); ws > 0) {
            flush(current, out);
            i += ws;
            continue;
        }
        current += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
        ++i;
    }
    flush(current, out);
    return out;
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> documents, std::size_t min_df) {
    if (min_df < 1) throw ValidationError("min_df must be at least 1");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
        std::set<std::string_view> unique(doc.begin(), doc.end());
        for (auto t : unique) ++df[std::string(t)];
    }
    Vocabulary vocab;
    for (const auto& [token, count] : df) {
        if (count < min_df) continue;
        vocab.ids.emplace(token, vocab.tokens.size());
        vocab.tokens.push_back(token);
        vocab.document_frequency.push_back(count);
    }
    if (vocab.tokens.empty()) {
        throw ValidationError("vocabulary empty after min_df=" + std::to_string(min_df) + " filter");
    }
    return vocab;
}

DenseMatrix<float> tfidf_rows(std::span<const std::vector<std::string>> documents, const Vocabulary& vocabulary) {
    const double n = static_cast<double>(documents.size());
    std::vector<double> idf(vocabulary.size());
    for (std::size_t t = 0; t < idf.size(); ++t) {
        idf[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(vocabulary.document_frequency[t]))) + 1.0;
    }
    DenseMatrix<float> out(documents.size(), vocabulary.size());
    std::vector<double> row(vocabulary.size());
    for (std::size_t i = 0; i < documents.size(); ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        for (const auto& tok : documents[i]) {
            if (auto it = vocabulary.ids.find(tok); it != vocabulary.ids.end()) row[it->second] += 1.0;
        }
        double norm2 = 0.0;
        for (std::size_t t = 0; t < row.size(); ++t) {
            row[t] *= idf[t];
            norm2 += row[t] * row[t];
        }
        if (norm2 == 0.0) continue;
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t t = 0; t < row.size(); ++t) out(i, t) = static_cast<float>(row[t] * inv);
    }
    return out;
}

FeatureMatrix build_tfidf(DatasetStore& store, std::size_t min_df) {
    std::vector<std::string> ids;
    for (const auto& ex : store.examples()) ids.push_back(ex.id);
    std::sort(ids.begin(), ids.end());
    std::vector<std::vector<std::string>> docs;
    docs.reserve(ids.size());
    for (const auto& id : ids) {
        const auto& ex = store.example(id);
        if (!ex.tokens) throw ValidationError("example '" + id + "' has no tokens for tf-idf");
        docs.push_back(*ex.tokens);
    }
    const auto vocab = build_vocabulary(docs, min_df);
    FeatureMatrix matrix(tfidf_rows(docs, vocab), std::move(ids));
    store.add_feature_space("tfidf", matrix);
    return matrix;
}

}  // namespace cal
