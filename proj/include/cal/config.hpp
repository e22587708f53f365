#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cal/acquisition.hpp"
#include "cal/analysis.hpp"
#include "cal/classifier.hpp"

namespace cal {

/// Everything a simulation run needs. Loaded from a flat `key = value` file
/// (see README for the schema); CLI flags override file values.
struct LoopConfig {
    std::filesystem::path dataset;                                // dataset JSONL
    std::filesystem::path features;                               // FMAT registered as "input"
    std::map<std::string, std::filesystem::path> extra_spaces;    // space.NAME = path
    int classes = 0;
    std::size_t tfidf_min_df = 0;  // > 0 registers a "tfidf" space from example text

    std::string feature_space = "input";  // classifier input
    double budget_fraction = 0.15;
    double init_fraction = 0.01;
    double acquisition_fraction = 0.02;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    AcquisitionConfig acquisition;
    ClassifierConfig classifier;

    std::string analysis_encoding = "model";  // feature space of Div-F and Repr
    std::size_t repr_k = 10;
    ReprMode repr_mode = ReprMode::inverse_mean_distance;

    std::string label;  // reporting name; derived from the strategy when empty
    bool record_timing = false;  // include wall-clock fields in results JSONL
    bool dump_scores = false;    // write scores.jsonl during the run

    void validate() const;
    /// e.g. "cal", "cal-opposite", "cal-per_labeled-max", "entropy".
    std::string strategy_label() const;
};

/// Applies one setting; throws ConfigError for unknown keys or bad values.
void apply_setting(LoopConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines; '#' starts a comment. Relative paths are
/// resolved against `base_dir`.
LoopConfig parse_config(std::string_view text, LoopConfig config = {}, const std::filesystem::path& base_dir = {});
LoopConfig load_config(const std::filesystem::path& path);

/// Every setting as key/value strings, suitable for apply_setting.
std::vector<std::pair<std::string, std::string>> config_entries(const LoopConfig& config);

/// Labeled-set arithmetic for a pool of `pool_size` examples.
struct BudgetPlan {
    std::size_t pool_size = 0;
    std::size_t initial = 0;     // round(init_fraction * pool)
    std::size_t batch = 0;       // round(acquisition_fraction * pool)
    std::size_t budget = 0;      // round(budget_fraction * pool)
    std::size_t iterations = 0;  // floor((budget - initial) / batch)
};

/// Throws ConfigError when fewer than one iteration fits.
BudgetPlan plan_budget(const LoopConfig& config, std::size_t pool_size);

}  // namespace cal
