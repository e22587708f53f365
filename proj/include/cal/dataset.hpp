#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cal/matrix.hpp"
#include "cal/rng.hpp"

namespace cal {

enum class Split { pool, labeled, validation, test };

std::string_view to_string(Split split);
/// Parses "pool", "labeled", "validation" or "test".
Split parse_split(std::string_view name);

struct Example {
    std::string id;
    int label = 0;
    std::optional<std::vector<std::string>> tokens;
    Split split = Split::pool;
};

/// Dense feature matrix whose rows are keyed by example id. Values are stored
/// as 32-bit floats; consumers accumulate in double.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    /// Throws ValidationError on a row/id count mismatch, duplicate ids or a
    /// non-finite value.
    FeatureMatrix(DenseMatrix<float> values, std::vector<std::string> row_ids);

    std::size_t rows() const { return values_.rows(); }
    std::size_t cols() const { return values_.cols(); }
    std::span<const float> row(std::size_t r) const { return values_.row(r); }
    const std::string& row_id(std::size_t r) const { return row_ids_[r]; }
    const std::vector<std::string>& row_ids() const { return row_ids_; }
    const DenseMatrix<float>& values() const { return values_; }

    std::optional<std::size_t> find_row(std::string_view id) const;
    /// Row index of an id; throws StateError when absent.
    std::size_t row_of(std::string_view id) const;

    /// Sub-matrix holding the rows of `ids`, in that order.
    FeatureMatrix select(std::span<const std::string> ids) const;

    bool operator==(const FeatureMatrix& other) const {
        return values_ == other.values_ && row_ids_ == other.row_ids_;
    }

private:
    DenseMatrix<float> values_;
    std::vector<std::string> row_ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// The example universe plus its named feature spaces.
class DatasetStore {
public:
    DatasetStore() = default;
    /// class_count must be at least 2.
    explicit DatasetStore(int class_count);

    int class_count() const { return class_count_; }
    std::size_t size() const { return examples_.size(); }
    const std::vector<Example>& examples() const { return examples_; }

    /// Rejects duplicate ids and labels outside [0, C) with ValidationError.
    void add_example(Example example);

    bool contains(std::string_view id) const;
    const Example& example(std::string_view id) const;
    int label_of(std::string_view id) const { return example(id).label; }
    std::vector<int> labels_of(std::span<const std::string> ids) const;

    /// Ids currently in `split`, ascending.
    std::vector<std::string> ids_in(Split split) const;
    std::size_t count_in(Split split) const;
    void set_split(std::string_view id, Split split);

    /// The matrix must cover every example id exactly once.
    void add_feature_space(std::string name, FeatureMatrix matrix);
    bool has_feature_space(std::string_view name) const;
    const FeatureMatrix& feature_space(std::string_view name) const;
    std::vector<std::string> feature_space_names() const;

private:
    std::size_t index_of(std::string_view id) const;

    int class_count_ = 2;
    std::vector<Example> examples_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<std::string, FeatureMatrix, std::less<>> feature_spaces_;
};

/// Reads the dataset JSONL format: one object per line with "id" (string),
/// "label" (integer), "split" (string) and optional "text". Blank lines are
/// skipped. Errors carry the 1-based line number.
DatasetStore load_jsonl(const std::filesystem::path& path, int class_count);

/// Writes the store back in the same format. Tokens are joined with single
/// spaces into "text".
void write_jsonl(const std::filesystem::path& path, const DatasetStore& store);

/// Per-class quotas for a stratified sample of `total` items: proportional to
/// `class_counts` with largest-remainder rounding (ties to the lower class
/// index), then raised to at least one per class by taking from the largest
/// quota.
std::vector<std::size_t> stratified_quotas(std::span<const std::size_t> class_counts, std::size_t total);

/// Draws round(fraction * |pool|) pool examples preserving the pool label
/// distribution and moves them to the labeled split. Returns the drawn ids.
std::vector<std::string> stratified_initial_sample(DatasetStore& store, double fraction, Rng& rng);

/// Moves `ids` from pool to labeled. Every id must be in the pool.
void transfer_to_labeled(DatasetStore& store, std::span<const std::string> ids);

}  // namespace cal
