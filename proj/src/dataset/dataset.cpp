#include "cal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "cal/text.hpp"

namespace cal {

std::string_view to_string(Split split) {
    switch (split) {
        case Split::pool: return "pool";
        case Split::labeled: return "labeled";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "pool";
}

Split parse_split(std::string_view name) {
    if (name == "pool") return Split::pool;
    if (name == "labeled") return Split::labeled;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    throw ValidationError("unknown split '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix::FeatureMatrix(DenseMatrix<float> values, std::vector<std::string> row_ids)
    : values_(std::move(values)), row_ids_(std::move(row_ids)) {
    if (values_.rows() != row_ids_.size()) {
        throw ValidationError("feature matrix has " + std::to_string(values_.rows()) + " rows but " +
                              std::to_string(row_ids_.size()) + " row ids");
    }
    index_.reserve(row_ids_.size());
    for (std::size_t r = 0; r < row_ids_.size(); ++r) {
        if (!index_.emplace(row_ids_[r], r).second) {
            throw ValidationError("duplicate row id '" + row_ids_[r] + "' in feature matrix");
        }
    }
    for (std::size_t r = 0; r < values_.rows(); ++r) {
        for (float v : values_.row(r)) {
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite value in feature matrix row " + std::to_string(r));
            }
        }
    }
}

std::optional<std::size_t> FeatureMatrix::find_row(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t FeatureMatrix::row_of(std::string_view id) const {
    auto r = find_row(id);
    if (!r) throw StateError("id '" + std::string(id) + "' not present in feature matrix");
    return *r;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::string> ids) const {
    DenseMatrix<float> out(ids.size(), cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto src = row(row_of(ids[i]));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return FeatureMatrix(std::move(out), std::vector<std::string>(ids.begin(), ids.end()));
}

// ---------------------------------------------------------------------------
// DatasetStore

DatasetStore::DatasetStore(int class_count) : class_count_(class_count) {
    if (class_count < 2) throw ValidationError("class count must be at least 2");
}

void DatasetStore::add_example(Example example) {
    if (example.label < 0 || example.label >= class_count_) {
        throw ValidationError("label " + std::to_string(example.label) + " of '" + example.id +
                              "' outside [0, " + std::to_string(class_count_) + ")");
    }
    if (index_.contains(example.id)) {
        throw ValidationError("duplicate example id '" + example.id + "'");
    }
    if (!feature_spaces_.empty()) {
        throw StateError("examples cannot be added after feature spaces are registered");
    }
    index_.emplace(example.id, examples_.size());
    examples_.push_back(std::move(example));
}

bool DatasetStore::contains(std::string_view id) const { return index_.contains(std::string(id)); }

std::size_t DatasetStore::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw StateError("unknown example id '" + std::string(id) + "'");
    return it->second;
}

const Example& DatasetStore::example(std::string_view id) const { return examples_[index_of(id)]; }

std::vector<int> DatasetStore::labels_of(std::span<const std::string> ids) const {
    std::vector<int> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(example(id).label);
    return out;
}

std::vector<std::string> DatasetStore::ids_in(Split split) const {
    std::vector<std::string> out;
    for (const auto& ex : examples_) {
        if (ex.split == split) out.push_back(ex.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t DatasetStore::count_in(Split split) const {
    return static_cast<std::size_t>(
        std::count_if(examples_.begin(), examples_.end(), [&](const Example& e) { return e.split == split; }));
}

void DatasetStore::set_split(std::string_view id, Split split) { examples_[index_of(id)].split = split; }

void DatasetStore::add_feature_space(std::string name, FeatureMatrix matrix) {
    if (matrix.rows() != examples_.size()) {
        throw ValidationError("feature space '" + name + "' has " + std::to_string(matrix.rows()) +
                              " rows for " + std::to_string(examples_.size()) + " examples");
    }
    for (const auto& ex : examples_) {
        if (!matrix.find_row(ex.id)) {
            throw ValidationError("feature space '" + name + "' misses example '" + ex.id + "'");
        }
    }
    feature_spaces_.insert_or_assign(std::move(name), std::move(matrix));
}

bool DatasetStore::has_feature_space(std::string_view name) const {
    return feature_spaces_.find(name) != feature_spaces_.end();
}

const FeatureMatrix& DatasetStore::feature_space(std::string_view name) const {
    auto it = feature_spaces_.find(name);
    if (it == feature_spaces_.end()) {
        throw ConfigError("no feature space named '" + std::string(name) + "'");
    }
    return it->second;
}

std::vector<std::string> DatasetStore::feature_space_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : feature_spaces_) out.push_back(name);
    return out;
}

// ---------------------------------------------------------------------------
// JSONL

DatasetStore load_jsonl(const std::filesystem::path& path, int class_count) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file " + path.string());
    DatasetStore store(class_count);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(where + ": malformed JSON (" + e.what() + ")");
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("label") ||
            !j["label"].is_number_integer() || !j.contains("split") || !j["split"].is_string()) {
            throw ParseError(where + ": expected object with string id, integer label, string split");
        }
        Example ex;
        ex.id = j["id"].get<std::string>();
        ex.label = j["label"].get<int>();
        try {
            ex.split = parse_split(j["split"].get<std::string>());
            if (j.contains("text") && !j["text"].is_null()) {
                if (!j["text"].is_string()) throw ParseError(where + ": text must be a string");
                ex.tokens = tokenize(j["text"].get<std::string>());
            }
            store.add_example(std::move(ex));
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    return store;
}

void write_jsonl(const std::filesystem::path& path, const DatasetStore& store) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write dataset file " + path.string());
    for (const auto& ex : store.examples()) {
        nlohmann::json j;
        j["id"] = ex.id;
        j["label"] = ex.label;
        j["split"] = std::string(to_string(ex.split));
        if (ex.tokens) {
            std::string text;
            for (const auto& t : *ex.tokens) {
                if (!text.empty()) text += ' ';
                text += t;
            }
            j["text"] = text;
        }
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<std::size_t> stratified_quotas(std::span<const std::size_t> class_counts, std::size_t total) {
    const std::size_t classes = class_counts.size();
    const std::size_t population = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    if (total < classes) {
        throw SizingError("stratified sample of " + std::to_string(total) + " cannot cover " +
                          std::to_string(classes) + " classes");
    }
    if (total > population) throw SizingError("stratified sample larger than the population");

    std::vector<std::size_t> quota(classes);
    std::vector<double> remainder(classes);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const double exact = static_cast<double>(total) * static_cast<double>(class_counts[c]) /
                             static_cast<double>(population);
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    std::vector<std::size_t> order(classes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < total; ++i) {
        ++quota[order[i % classes]];
        ++assigned;
    }
    for (std::size_t c = 0; c < classes; ++c) {
        if (quota[c] > 0) continue;
        auto donor = std::max_element(quota.begin(), quota.end());
        --*donor;
        quota[c] = 1;
    }
    return quota;
}

std::vector<std::string> stratified_initial_sample(DatasetStore& store, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("sample fraction must be in (0, 1]");
    const auto pool = store.ids_in(Split::pool);
    if (pool.empty()) throw StateError("stratified sample from an empty pool");

    const auto classes = static_cast<std::size_t>(store.class_count());
    std::vector<std::vector<std::string>> by_class(classes);
    for (const auto& id : pool) by_class[static_cast<std::size_t>(store.label_of(id))].push_back(id);
    std::vector<std::size_t> counts(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        if (by_class[c].empty()) {
            throw ValidationError("stratification error: class " + std::to_string(c) + " absent from pool");
        }
        counts[c] = by_class[c].size();
    }

    const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
    const auto quota = stratified_quotas(counts, total);

    std::vector<std::string> drawn;
    drawn.reserve(total);
    for (std::size_t c = 0; c < classes; ++c) {
        auto& members = by_class[c];
        for (std::size_t i = 0; i < quota[c]; ++i) {
            const std::size_t j = i + rng.uniform_index(members.size() - i);
            std::swap(members[i], members[j]);
            drawn.push_back(members[i]);
        }
    }
    transfer_to_labeled(store, drawn);
    return drawn;
}

void transfer_to_labeled(DatasetStore& store, std::span<const std::string> ids) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!store.contains(id) || store.example(id).split != Split::pool || !seen.insert(id).second) {
            throw StateError("cannot transfer '" + id + "': not in pool");
        }
    }
    for (const auto& id : ids) store.set_split(id, Split::labeled);
}

}  // namespace cal
