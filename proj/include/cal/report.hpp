#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cal/simulation.hpp"

namespace cal {

/// Metric fields as JSON. Unset metrics are null; infinite ones are null
/// with a companion "<metric>_infinite": true.
nlohmann::json diagnostics_to_json(const BatchDiagnostics& d);
BatchDiagnostics diagnostics_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const IterationRecord& record, bool include_timing);
IterationRecord record_from_json(const nlohmann::json& j);

/// One record per line in seed order, then an {"aborted": true} marker line
/// for every aborted seed.
void write_results_jsonl(std::ostream& out, const RunResult& run);
void write_learning_curve_csv(std::ostream& out, const RunResult& run);
void write_timing_csv(std::ostream& out, const RunResult& run);

/// Writes results.jsonl, learning_curve.csv, timing.csv and run.json.
void write_run(const RunResult& run, const std::filesystem::path& dir);

/// Reads a run directory written by write_run (or its run.json path).
RunResult read_run(const std::filesystem::path& path);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
    std::size_t n = 0;
};

/// Mean and sample standard deviation. Infinite inputs give an infinite mean.
Summary summarize(std::span<const double> values);

struct CurvePoint {
    std::string strategy;
    std::size_t labeled_size = 0;
    Summary accuracy;
};

struct StrategyRow {
    std::string strategy;
    Summary final_accuracy;
    Summary full_model_accuracy;
    std::map<std::string, Summary> metrics;  // div_input, div_feature, uncertainty, representativeness
};

struct CompareReport {
    std::vector<CurvePoint> curve;  // by strategy, then labeled size
    std::vector<StrategyRow> rows;  // by strategy
};

/// Groups the non-aborted seeds of every run by strategy label.
CompareReport compare(std::span<const RunResult> runs);

void write_curve_csv(std::ostream& out, const CompareReport& report);
void write_aggregate_csv(std::ostream& out, const CompareReport& report);
std::string format_summary(const CompareReport& report);

/// Writes curve.csv, aggregate.csv and summary.txt.
void write_compare(const CompareReport& report, const std::filesystem::path& dir);

}  // namespace cal
