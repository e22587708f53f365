#include "cal/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cal/error.hpp"

namespace cal {

namespace {

constexpr const char* kMetricNames[] = {"div_input", "div_feature", "uncertainty", "representativeness"};

std::optional<double>& metric(BatchDiagnostics& d, std::string_view name) {
    if (name == "div_input") return d.div_input;
    if (name == "div_feature") return d.div_feature;
    if (name == "uncertainty") return d.uncertainty;
    return d.representativeness;
}

const std::optional<double>& metric(const BatchDiagnostics& d, std::string_view name) {
    return metric(const_cast<BatchDiagnostics&>(d), name);
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw FormatError("cannot write " + p.string());
    return out;
}

nlohmann::json parse_json(const std::string& text, const std::string& where) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
}

}  // namespace

nlohmann::json diagnostics_to_json(const BatchDiagnostics& d) {
    nlohmann::json j = nlohmann::json::object();
    for (const char* name : kMetricNames) {
        const auto& v = metric(d, name);
        if (v && std::isfinite(*v)) {
            j[name] = *v;
        } else {
            j[name] = nullptr;
            if (v && std::isinf(*v)) j[std::string(name) + "_infinite"] = true;
        }
    }
    return j;
}

BatchDiagnostics diagnostics_from_json(const nlohmann::json& j) {
    BatchDiagnostics d;
    for (const char* name : kMetricNames) {
        const std::string inf_key = std::string(name) + "_infinite";
        if (j.contains(name) && j.at(name).is_number()) {
            metric(d, name) = j.at(name).get<double>();
        } else if (j.value(inf_key, false)) {
            metric(d, name) = std::numeric_limits<double>::infinity();
        }
    }
    return d;
}

nlohmann::json record_to_json(const IterationRecord& r, bool include_timing) {
    nlohmann::json j;
    j["strategy"] = r.strategy;
    j["seed"] = r.seed;
    j["iteration"] = r.iteration;
    j["labeled_size"] = r.labeled_size;
    j["test_accuracy"] = r.test_accuracy;
    j["validation_loss"] = r.validation_loss;
    j["diagnostics"] = diagnostics_to_json(r.diagnostics);
    if (include_timing) {
        j["inference_seconds"] = r.inference_seconds;
        j["selection_seconds"] = r.selection_seconds;
        j["total_seconds"] = r.total_seconds;
    }
    j["acquired_ids"] = r.acquired_ids;
    return j;
}

IterationRecord record_from_json(const nlohmann::json& j) {
    try {
        IterationRecord r;
        r.strategy = j.at("strategy").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.iteration = j.at("iteration").get<std::size_t>();
        r.labeled_size = j.at("labeled_size").get<std::size_t>();
        r.test_accuracy = j.at("test_accuracy").get<double>();
        r.validation_loss = j.at("validation_loss").get<double>();
        r.diagnostics = diagnostics_from_json(j.at("diagnostics"));
        r.inference_seconds = j.value("inference_seconds", 0.0);
        r.selection_seconds = j.value("selection_seconds", 0.0);
        r.total_seconds = j.value("total_seconds", 0.0);
        r.acquired_ids = j.at("acquired_ids").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed iteration record: ") + e.what());
    }
}

void write_results_jsonl(std::ostream& out, const RunResult& run) {
    for (const auto& seed : run.seeds) {
        for (const auto& r : seed.records) out << record_to_json(r, run.config.record_timing).dump() << '\n';
    }
    for (const auto& seed : run.seeds) {
        if (!seed.aborted) continue;
        const nlohmann::json j{{"strategy", run.strategy}, {"seed", seed.seed}, {"aborted", true}, {"error", seed.error}};
        out << j.dump() << '\n';
    }
}

void write_learning_curve_csv(std::ostream& out, const RunResult& run) {
    out << "strategy,seed,labeled_size,accuracy\n";
    for (const auto& seed : run.seeds) {
        for (const auto& r : seed.records) {
            out << csv_field(run.strategy) << ',' << seed.seed << ',' << r.labeled_size << ',' << fmt(r.test_accuracy)
                << '\n';
        }
    }
}

void write_timing_csv(std::ostream& out, const RunResult& run) {
    out << "strategy,seed,iteration,labeled_size,inference_seconds,selection_seconds,total_seconds\n";
    for (const auto& seed : run.seeds) {
        for (const auto& r : seed.records) {
            out << csv_field(run.strategy) << ',' << seed.seed << ',' << r.iteration << ',' << r.labeled_size << ','
                << fmt(r.inference_seconds) << ',' << fmt(r.selection_seconds) << ',' << fmt(r.total_seconds) << '\n';
        }
    }
}

void write_run(const RunResult& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "results.jsonl");
        write_results_jsonl(out, run);
    }
    {
        auto out = open_out(dir / "learning_curve.csv");
        write_learning_curve_csv(out, run);
    }
    {
        auto out = open_out(dir / "timing.csv");
        write_timing_csv(out, run);
    }
    nlohmann::json j;
    j["strategy"] = run.strategy;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_entries(run.config)) cfg[k] = v;
    j["config"] = cfg;
    j["plan"] = {{"pool_size", run.plan.pool_size},
                 {"initial", run.plan.initial},
                 {"batch", run.plan.batch},
                 {"budget", run.plan.budget},
                 {"iterations", run.plan.iterations}};
    j["seeds"] = nlohmann::json::array();
    for (const auto& s : run.seeds) {
        j["seeds"].push_back({{"seed", s.seed},
                              {"initial_ids", s.initial_ids},
                              {"acquired_ids", s.acquired_ids},
                              {"summary", diagnostics_to_json(s.summary)},
                              {"full_model_accuracy", s.full_model_accuracy},
                              {"aborted", s.aborted},
                              {"error", s.error}});
    }
    auto out = open_out(dir / "run.json");
    out << j.dump(2) << '\n';
}

RunResult read_run(const std::filesystem::path& path) {
    const auto dir = std::filesystem::is_directory(path) ? path : path.parent_path();
    const auto run_json = dir / "run.json";
    std::ifstream in(run_json, std::ios::binary);
    if (!in) throw FormatError("cannot read " + run_json.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const auto j = parse_json(buf.str(), run_json.string());

    RunResult run;
    try {
        for (const auto& [k, v] : j.at("config").items()) {
            const auto value = v.get<std::string>();
            apply_setting(run.config, k, value);
        }
        run.strategy = j.at("strategy").get<std::string>();
        const auto& p = j.at("plan");
        run.plan = {p.at("pool_size").get<std::size_t>(), p.at("initial").get<std::size_t>(),
                    p.at("batch").get<std::size_t>(), p.at("budget").get<std::size_t>(),
                    p.at("iterations").get<std::size_t>()};
        for (const auto& s : j.at("seeds")) {
            SeedRun seed;
            seed.seed = s.at("seed").get<std::uint64_t>();
            seed.initial_ids = s.at("initial_ids").get<std::vector<std::string>>();
            seed.acquired_ids = s.at("acquired_ids").get<std::vector<std::string>>();
            seed.summary = diagnostics_from_json(s.at("summary"));
            seed.full_model_accuracy = s.at("full_model_accuracy").get<double>();
            seed.aborted = s.at("aborted").get<bool>();
            seed.error = s.at("error").get<std::string>();
            run.seeds.push_back(std::move(seed));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(run_json.string() + ": " + e.what());
    }

    const auto results = dir / "results.jsonl";
    std::ifstream rin(results, std::ios::binary);
    if (!rin) throw FormatError("cannot read " + results.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(rin, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto rec = parse_json(line, results.string() + ":" + std::to_string(line_no));
        if (rec.value("aborted", false)) continue;
        auto r = record_from_json(rec);
        bool placed = false;
        for (auto& seed : run.seeds) {
            if (seed.seed == r.seed) {
                seed.records.push_back(std::move(r));
                placed = true;
                break;
            }
        }
        if (!placed) throw ParseError(results.string() + ":" + std::to_string(line_no) + ": record for unknown seed");
    }
    return run;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n < 2 || !std::isfinite(s.mean)) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
    return s;
}

CompareReport compare(std::span<const RunResult> runs) {
    struct Acc {
        std::map<std::size_t, std::vector<double>> curve;
        std::vector<double> final_acc;
        std::vector<double> full_acc;
        std::map<std::string, std::vector<double>> metrics;
    };
    std::map<std::string, Acc> by_strategy;
    for (const auto& run : runs) {
        auto& acc = by_strategy[run.strategy];
        for (const auto& seed : run.seeds) {
            if (seed.aborted || seed.records.empty()) continue;
            for (const auto& r : seed.records) acc.curve[r.labeled_size].push_back(r.test_accuracy);
            acc.final_acc.push_back(seed.records.back().test_accuracy);
            acc.full_acc.push_back(seed.full_model_accuracy);
            for (const char* name : kMetricNames) {
                const auto& v = metric(seed.summary, name);
                if (v) acc.metrics[name].push_back(*v);
            }
        }
    }
    CompareReport report;
    for (const auto& [strategy, acc] : by_strategy) {
        if (acc.final_acc.empty()) continue;
        for (const auto& [size, values] : acc.curve) report.curve.push_back({strategy, size, summarize(values)});
        StrategyRow row;
        row.strategy = strategy;
        row.final_accuracy = summarize(acc.final_acc);
        row.full_model_accuracy = summarize(acc.full_acc);
        for (const auto& [name, values] : acc.metrics) row.metrics[name] = summarize(values);
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_curve_csv(std::ostream& out, const CompareReport& report) {
    out << "strategy,labeled_size,mean_accuracy,std_accuracy,seeds\n";
    for (const auto& p : report.curve) {
        out << csv_field(p.strategy) << ',' << p.labeled_size << ',' << fmt(p.accuracy.mean) << ','
            << fmt(p.accuracy.std) << ',' << p.accuracy.n << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const CompareReport& report) {
    out << "strategy,seeds,final_accuracy_mean,final_accuracy_std,full_model_accuracy_mean";
    for (const char* name : kMetricNames) out << ',' << name << "_mean," << name << "_std";
    out << '\n';
    for (const auto& row : report.rows) {
        out << csv_field(row.strategy) << ',' << row.final_accuracy.n << ',' << fmt(row.final_accuracy.mean) << ','
            << fmt(row.final_accuracy.std) << ',' << fmt(row.full_model_accuracy.mean);
        for (const char* name : kMetricNames) {
            const auto it = row.metrics.find(name);
            if (it == row.metrics.end()) out << ",,";
            else out << ',' << fmt(it->second.mean) << ',' << fmt(it->second.std);
        }
        out << '\n';
    }
}

std::string format_summary(const CompareReport& report) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-28s %5s %17s %9s %9s %9s %9s\n", "strategy", "seeds", "final accuracy",
                  "Div-I", "Div-F", "Unc.", "Repr.");
    out << buf;
    auto cell = [](const StrategyRow& row, const char* name) {
        const auto it = row.metrics.find(name);
        return it == row.metrics.end() ? std::string("-") : fmt(it->second.mean);
    };
    for (const auto& row : report.rows) {
        char acc[64];
        std::snprintf(acc, sizeof acc, "%.4f +- %.4f", row.final_accuracy.mean, row.final_accuracy.std);
        std::snprintf(buf, sizeof buf, "%-28s %5zu %17s %9.9s %9.9s %9.9s %9.9s\n", row.strategy.c_str(),
                      row.final_accuracy.n, acc, cell(row, "div_input").c_str(), cell(row, "div_feature").c_str(),
                      cell(row, "uncertainty").c_str(), cell(row, "representativeness").c_str());
        out << buf;
    }
    return out.str();
}

void write_compare(const CompareReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "curve.csv");
        write_curve_csv(out, report);
    }
    {
        auto out = open_out(dir / "aggregate.csv");
        write_aggregate_csv(out, report);
    }
    auto out = open_out(dir / "summary.txt");
    out << format_summary(report);
}

}  // namespace cal
