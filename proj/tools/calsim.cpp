// calsim: command-line driver for pool-based active learning simulations.

#include <glob.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cal/error.hpp"
#include "cal/fmat.hpp"
#include "cal/parallel.hpp"
#include "cal/report.hpp"
#include "cal/simulation.hpp"
#include "cal/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

void apply_overrides(cal::LoopConfig& config, const std::vector<std::string>& settings) {
    for (const auto& s : settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw cal::ConfigError("--set expects key=value, got '" + s + "'");
        cal::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
}

std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
    std::vector<fs::path> out;
    for (const auto& pattern : patterns) {
        glob_t g{};
        const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
        if (rc == 0) {
            for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
        }
        globfree(&g);
        if (rc == GLOB_NOMATCH) throw cal::ConfigError("no run matches '" + pattern + "'");
        if (rc != 0 && rc != GLOB_NOMATCH) throw cal::ConfigError("cannot expand '" + pattern + "'");
    }
    return out;
}

int cmd_run(const fs::path& config_path, const std::string& strategy, const std::vector<std::string>& seeds,
            const std::vector<std::string>& settings, const fs::path& out_dir) {
    cal::LoopConfig config;
    if (!config_path.empty()) config = cal::load_config(config_path);
    if (!strategy.empty()) cal::apply_setting(config, "strategy", strategy);
    if (!seeds.empty()) {
        std::string joined;
        for (const auto& s : seeds) joined += (joined.empty() ? "" : ",") + s;
        cal::apply_setting(config, "seeds", joined);
    }
    apply_overrides(config, settings);
    config.validate();

    const auto store = cal::load_store(config);
    fs::create_directories(out_dir);
    std::ofstream scores;
    if (config.dump_scores) {
        scores.open(out_dir / "scores.jsonl", std::ios::binary);
        if (!scores) throw cal::FormatError("cannot write " + (out_dir / "scores.jsonl").string());
    }
    const auto run = cal::run_simulation(store, config, nullptr, config.dump_scores ? &scores : nullptr);
    cal::write_run(run, out_dir);

    int status = 0;
    for (const auto& seed : run.seeds) {
        if (seed.aborted) {
            std::fprintf(stderr, "%s seed %llu aborted after %zu records: %s\n", run.strategy.c_str(),
                         static_cast<unsigned long long>(seed.seed), seed.records.size(), seed.error.c_str());
            status = 2;
            continue;
        }
        const auto& last = seed.records.back();
        std::printf("%s seed %llu: labeled %zu, accuracy %.4f (full model %.4f)\n", run.strategy.c_str(),
                    static_cast<unsigned long long>(seed.seed), last.labeled_size, last.test_accuracy,
                    seed.full_model_accuracy);
    }
    return status;
}

int cmd_compare(const std::vector<std::string>& patterns, const fs::path& out_dir) {
    std::vector<cal::RunResult> runs;
    for (const auto& p : expand_globs(patterns)) runs.push_back(cal::read_run(p));
    const auto report = cal::compare(runs);
    if (!out_dir.empty()) cal::write_compare(report, out_dir);
    std::cout << cal::format_summary(report);
    return 0;
}

int cmd_gen_synth(const cal::SyntheticSpec& spec, const fs::path& out_dir) {
    const auto store = cal::generate_synthetic(spec);
    fs::create_directories(out_dir);
    cal::write_jsonl(out_dir / "dataset.jsonl", store);
    cal::write_feature_matrix(out_dir / "features.fmat", store.feature_space("input"));
    std::ofstream cfg(out_dir / "run.cfg");
    if (!cfg) throw cal::FormatError("cannot write " + (out_dir / "run.cfg").string());
    cfg << "# synthetic blobs: classes=" << spec.classes << " per_class=" << spec.per_class << " dim=" << spec.dim
        << " separation=" << spec.separation << " seed=" << spec.seed << "\n"
        << "dataset = dataset.jsonl\n"
        << "features = features.fmat\n"
        << "classes = " << spec.classes << "\n";
    std::printf("wrote %zu examples to %s\n", store.examples().size(), out_dir.string().c_str());
    return 0;
}

int cmd_analyze(const fs::path& run_path, const fs::path& out_path) {
    const auto run = cal::read_run(run_path);
    const auto store = cal::load_store(run.config);
    cal::FullModelCache cache;
    const fs::path target = out_path.empty() ? (fs::is_directory(run_path) ? run_path : run_path.parent_path()) /
                                                   "analysis.jsonl"
                                             : out_path;
    std::ofstream out(target, std::ios::binary);
    if (!out) throw cal::FormatError("cannot write " + target.string());
    cal::replay_run(store, run, [&](const cal::ReplayStep& step) {
        if (step.record.acquired_ids.empty()) return;
        const auto& full = cache.get(store, run.config, step.seed);
        const auto pool_ids = step.store.ids_in(cal::Split::pool);
        const auto d =
            cal::diagnose_batch(step.store, step.model, run.config, pool_ids, step.record.acquired_ids, full.train_probs);
        nlohmann::json j{{"strategy", run.strategy}, {"seed", step.seed}, {"iteration", step.iteration},
                         {"labeled_size", step.record.labeled_size}};
        j["diagnostics"] = cal::diagnostics_to_json(d);
        j["matches_recorded"] = cal::diagnostics_to_json(d) == cal::diagnostics_to_json(step.record.diagnostics);
        out << j.dump() << '\n';
    });
    std::printf("wrote %s\n", target.string().c_str());
    return 0;
}

int cmd_export_scores(const fs::path& run_path, const fs::path& out_path) {
    const auto run = cal::read_run(run_path);
    const auto store = cal::load_store(run.config);
    const fs::path target = out_path.empty() ? (fs::is_directory(run_path) ? run_path : run_path.parent_path()) /
                                                   "scores.jsonl"
                                             : out_path;
    std::ofstream out(target, std::ios::binary);
    if (!out) throw cal::FormatError("cannot write " + target.string());
    cal::replay_run(store, run, [&](const cal::ReplayStep& step) {
        if (step.record.acquired_ids.empty()) return;
        const auto pool_ids = step.store.ids_in(cal::Split::pool);
        const auto sel = cal::acquire_step(step.store, step.model, run.config, step.seed, step.iteration,
                                           step.record.acquired_ids.size());
        const nlohmann::json context{{"seed", step.seed}, {"iteration", step.iteration}};
        if (!sel.pool_scores.empty()) cal::write_scores_jsonl(out, pool_ids, sel.pool_scores, run.strategy, context);
        else cal::write_scores_jsonl(out, sel.ids, sel.scores, run.strategy, context);
    });
    std::printf("wrote %s\n", target.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pool-based active learning simulator"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

    fs::path config_path, run_out = "run";
    std::string strategy;
    std::vector<std::string> seeds, settings;
    auto* run = app.add_subcommand("run", "Simulate active learning over every configured seed");
    run->add_option("--config", config_path, "Config file (key = value)");
    run->add_option("--strategy", strategy, "random | entropy | cal | kmeans_embedding | badge");
    run->add_option("--seed", seeds, "Seed(s); overrides the config")->delimiter(',');
    run->add_option("--set", settings, "Override a config key (key=value); repeatable");
    run->add_option("--out", run_out, "Output directory")->capture_default_str();

    std::vector<std::string> run_patterns;
    fs::path compare_out;
    auto* cmp = app.add_subcommand("compare", "Aggregate several runs");
    cmp->add_option("--runs", run_patterns, "Run directories or glob patterns")->required();
    cmp->add_option("--out", compare_out, "Directory for curve.csv, aggregate.csv and summary.txt");

    cal::SyntheticSpec spec;
    fs::path synth_out = "synthetic";
    auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic Gaussian-blob dataset");
    gen->add_option("--classes", spec.classes)->capture_default_str();
    gen->add_option("--per-class", spec.per_class)->capture_default_str();
    gen->add_option("--dim", spec.dim)->capture_default_str();
    gen->add_option("--separation", spec.separation)->capture_default_str();
    gen->add_option("--seed", spec.seed)->capture_default_str();
    gen->add_option("--landmarks", spec.landmarks)->capture_default_str();
    gen->add_option("--out", synth_out)->capture_default_str();

    fs::path analyze_run, analyze_out;
    auto* ana = app.add_subcommand("analyze", "Recompute batch diagnostics of a finished run");
    ana->add_option("--run", analyze_run, "Run directory")->required();
    ana->add_option("--out", analyze_out, "Output JSONL (default <run>/analysis.jsonl)");

    fs::path export_run, export_out;
    auto* exp = app.add_subcommand("export-scores", "Replay a run and dump per-candidate acquisition scores");
    exp->add_option("--run", export_run, "Run directory")->required();
    exp->add_option("--out", export_out, "Output JSONL (default <run>/scores.jsonl)");

    CLI11_PARSE(app, argc, argv);
    cal::set_max_workers(threads);
    try {
        if (*run) return cmd_run(config_path, strategy, seeds, settings, run_out);
        if (*cmp) return cmd_compare(run_patterns, compare_out);
        if (*gen) return cmd_gen_synth(spec, synth_out);
        if (*ana) return cmd_analyze(analyze_run, analyze_out);
        if (*exp) return cmd_export_scores(export_run, export_out);
    } catch (const cal::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
