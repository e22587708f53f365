#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cal/error.hpp"
#include "cal/report.hpp"
#include "cal/simulation.hpp"
#include "cal/synthetic.hpp"
#include "oracles.hpp"

using namespace cal;

namespace {

SyntheticSpec small_spec(double separation = 4.0) {
    SyntheticSpec s;
    s.per_class = 250;
    s.separation = separation;
    s.seed = 3;
    return s;
}

LoopConfig small_config(Strategy strategy) {
    LoopConfig c;
    c.classes = 4;
    c.seeds = {1, 2};
    c.acquisition.strategy = strategy;
    return c;
}

std::string results_text(const RunResult& run) {
    std::ostringstream out;
    write_results_jsonl(out, run);
    return out.str();
}

}  // namespace

TEST_CASE("synthetic generator is deterministic and split by class") {
    const auto a = generate_synthetic(small_spec());
    const auto b = generate_synthetic(small_spec());
    REQUIRE(a.size() == 1000);
    CHECK(a.count_in(Split::validation) == 100);
    CHECK(a.count_in(Split::test) == 100);
    CHECK(a.count_in(Split::pool) == 800);
    CHECK(a.examples().front().id == "x000000");
    const auto& fa = a.feature_space("input");
    const auto& fb = b.feature_space("input");
    REQUIRE(fa.rows() == fb.rows());
    for (std::size_t i = 0; i < fa.rows(); ++i) {
        for (std::size_t j = 0; j < fa.cols(); ++j) REQUIRE(fa.values()(i, j) == fb.values()(i, j));
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.examples()[i].split == b.examples()[i].split);
        CHECK(a.examples()[i].tokens == b.examples()[i].tokens);
    }
    SyntheticSpec bad = small_spec();
    bad.dim = 2;
    CHECK_THROWS_AS(generate_synthetic(bad), SizingError);
}

TEST_CASE("synthetic separation controls attainable accuracy") {
    const LoopConfig c = small_config(Strategy::random);
    const auto none = train_full_model(generate_synthetic(small_spec(0.0)), c, 1);
    CHECK(std::abs(none.test_accuracy - 0.25) <= 0.08);
    const auto far = train_full_model(generate_synthetic(small_spec(8.0)), c, 1);
    CHECK(far.test_accuracy >= 0.97);
}

TEST_CASE("budget is conserved and acquisitions are disjoint") {
    const auto store = generate_synthetic(small_spec());
    for (auto strategy : {Strategy::cal, Strategy::entropy, Strategy::random, Strategy::kmeans_embedding,
                          Strategy::badge}) {
        const auto run = run_simulation(store, small_config(strategy));
        CAPTURE(run.strategy);
        REQUIRE(run.plan.iterations == 7);
        for (const auto& seed : run.seeds) {
            REQUIRE_FALSE(seed.aborted);
            REQUIRE(seed.records.size() == run.plan.iterations + 1);
            std::set<std::string> seen(seed.initial_ids.begin(), seed.initial_ids.end());
            CHECK(seen.size() == run.plan.initial);
            for (std::size_t t = 0; t < seed.records.size(); ++t) {
                const auto& rec = seed.records[t];
                CHECK(rec.iteration == t);
                CHECK(rec.labeled_size == run.plan.initial + t * run.plan.batch);
                CHECK(rec.inference_seconds + rec.selection_seconds <= rec.total_seconds);
                const std::size_t expected = t < run.plan.iterations ? run.plan.batch : 0;
                CHECK(rec.acquired_ids.size() == expected);
                for (const auto& id : rec.acquired_ids) {
                    CHECK(seen.insert(id).second);
                    CHECK(store.example(id).split == Split::pool);
                }
            }
            CHECK(seen.size() == run.plan.initial + run.plan.iterations * run.plan.batch);
            CHECK(seed.acquired_ids.size() == run.plan.iterations * run.plan.batch);
            CHECK(seed.summary.uncertainty.has_value());
            CHECK(seed.summary.div_feature.has_value());
            CHECK(seed.summary.div_input.has_value());
        }
    }
}

TEST_CASE("runs are bit-identical across repeats") {
    const auto store = generate_synthetic(small_spec());
    for (auto strategy : {Strategy::cal, Strategy::random, Strategy::badge, Strategy::kmeans_embedding}) {
        const auto a = run_simulation(store, small_config(strategy));
        const auto b = run_simulation(store, small_config(strategy));
        CHECK(results_text(a) == results_text(b));
    }
}

TEST_CASE("one-shot acquisition of the whole pool matches the full model") {
    const auto store = generate_synthetic(small_spec());
    LoopConfig c = small_config(Strategy::random);
    c.init_fraction = 0.01;
    c.acquisition_fraction = 0.99;
    c.budget_fraction = 1.0;
    const auto run = run_simulation(store, c);
    REQUIRE(run.plan.iterations == 1);
    for (const auto& seed : run.seeds) {
        REQUIRE(seed.records.back().labeled_size == store.count_in(Split::pool));
        CHECK(seed.records.back().test_accuracy == seed.full_model_accuracy);
    }
}

TEST_CASE("full model is at least as good as the final AL model") {
    const auto store = generate_synthetic(small_spec());
    const auto run = run_simulation(store, small_config(Strategy::cal));
    double final_mean = 0.0, full_mean = 0.0;
    for (const auto& seed : run.seeds) {
        final_mean += seed.records.back().test_accuracy;
        full_mean += seed.full_model_accuracy;
    }
    CHECK(full_mean >= final_mean - 0.02 * static_cast<double>(run.seeds.size()));
}

TEST_CASE("full model cache returns the same model") {
    const auto store = generate_synthetic(small_spec());
    const auto config = small_config(Strategy::cal);
    FullModelCache cache;
    const auto& a = cache.get(store, config, 1);
    const auto& b = cache.get(store, config, 1);
    CHECK(&a == &b);
    const auto fresh = train_full_model(store, config, 1);
    REQUIRE(fresh.train_probs.ids() == a.train_probs.ids());
    const auto& p = a.train_probs.probs();
    const auto& q = fresh.train_probs.probs();
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) REQUIRE(p(i, j) == q(i, j));
    }
    CHECK(a.test_accuracy == fresh.test_accuracy);
}

TEST_CASE("a failing seed is marked aborted") {
    const auto store = generate_synthetic(small_spec());
    LoopConfig c = small_config(Strategy::cal);
    c.analysis_encoding = "external:missing";
    const auto run = run_simulation(store, c);
    REQUIRE(run.seeds.size() == 2);
    for (const auto& seed : run.seeds) {
        CHECK(seed.aborted);
        CHECK_FALSE(seed.error.empty());
    }
    const auto text = results_text(run);
    CHECK(text.find("\"aborted\":true") != std::string::npos);
    const auto report = compare(std::span<const RunResult>(&run, 1));
    CHECK(report.rows.empty());
}

TEST_CASE("diagnostics JSON encodes infinite and unset metrics") {
    BatchDiagnostics d;
    d.div_feature = std::numeric_limits<double>::infinity();
    d.uncertainty = 0.5;
    const auto j = diagnostics_to_json(d);
    CHECK(j.at("div_input").is_null());
    CHECK(j.at("div_feature").is_null());
    CHECK(j.at("div_feature_infinite") == true);
    CHECK_FALSE(j.contains("uncertainty_infinite"));
    CHECK(j.at("uncertainty") == 0.5);
    const auto back = diagnostics_from_json(j);
    CHECK_FALSE(back.div_input.has_value());
    REQUIRE(back.div_feature.has_value());
    CHECK(std::isinf(*back.div_feature));
    CHECK(back.uncertainty == 0.5);
    CHECK_FALSE(back.representativeness.has_value());
}

TEST_CASE("timing is written only when requested") {
    IterationRecord r;
    r.inference_seconds = 0.25;
    CHECK_FALSE(record_to_json(r, false).contains("inference_seconds"));
    CHECK(record_to_json(r, true).at("inference_seconds") == 0.25);
}

TEST_CASE("write_run and read_run round-trip") {
    const auto store = generate_synthetic(small_spec());
    auto config = small_config(Strategy::entropy);
    config.seeds = {4};
    const auto run = run_simulation(store, config);
    oracle::TempDir dir("run");
    write_run(run, dir.path() / "r");
    for (const char* name : {"results.jsonl", "learning_curve.csv", "timing.csv", "run.json"}) {
        CHECK(std::filesystem::exists(dir.path() / "r" / name));
    }
    const auto back = read_run(dir.path() / "r");
    CHECK(back.strategy == run.strategy);
    CHECK(config_entries(back.config) == config_entries(run.config));
    CHECK(back.plan.iterations == run.plan.iterations);
    REQUIRE(back.seeds.size() == 1);
    CHECK(back.seeds[0].initial_ids == run.seeds[0].initial_ids);
    CHECK(back.seeds[0].acquired_ids == run.seeds[0].acquired_ids);
    CHECK(back.seeds[0].full_model_accuracy == run.seeds[0].full_model_accuracy);
    CHECK(results_text(back) == results_text(run));
    CHECK_THROWS(read_run(dir.path() / "missing"));
}

TEST_CASE("replay reproduces recorded accuracies") {
    const auto store = generate_synthetic(small_spec());
    auto config = small_config(Strategy::cal);
    config.seeds = {2};
    const auto run = run_simulation(store, config);
    std::size_t visits = 0;
    replay_run(store, run, [&](const ReplayStep& step) {
        CHECK(step.store.count_in(Split::labeled) == step.record.labeled_size);
        const auto test_ids = step.store.ids_in(Split::test);
        const auto x = step.store.feature_space("input").select(test_ids);
        CHECK(accuracy(step.model, x, step.store.labels_of(test_ids)) == step.record.test_accuracy);
        ++visits;
    });
    CHECK(visits == run.plan.iterations + 1);
}

TEST_CASE("summaries use the sample standard deviation") {
    const std::vector<double> one{0.7};
    CHECK(summarize(one).std == 0.0);
    const std::vector<double> three{1.0, 2.0, 4.0};
    const auto s = summarize(three);
    CHECK(s.mean == doctest::Approx(7.0 / 3.0));
    CHECK(s.std == doctest::Approx(std::sqrt(((16.0 + 1.0 + 25.0) / 9.0) / 2.0)));
    CHECK(s.n == 3);
}

TEST_CASE("compare aggregates hand-built runs") {
    auto make = [](std::string label, std::uint64_t seed, double acc0, double acc1, double unc) {
        RunResult run;
        run.strategy = label;
        SeedRun s;
        s.seed = seed;
        s.full_model_accuracy = 0.9;
        s.summary.uncertainty = unc;
        for (std::size_t t = 0; t < 2; ++t) {
            IterationRecord r;
            r.strategy = label;
            r.seed = seed;
            r.iteration = t;
            r.labeled_size = 10 + 20 * t;
            r.test_accuracy = t == 0 ? acc0 : acc1;
            s.records.push_back(r);
        }
        run.seeds.push_back(s);
        return run;
    };
    const std::vector<RunResult> runs{make("cal", 1, 0.5, 0.8, 0.3), make("cal", 2, 0.6, 0.6, 0.5),
                                      make("random", 1, 0.5, 0.7, 0.1)};
    const auto report = compare(runs);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].strategy == "cal");
    CHECK(report.rows[0].final_accuracy.mean == doctest::Approx(0.7));
    CHECK(report.rows[0].final_accuracy.std == doctest::Approx(std::sqrt(0.02)));
    CHECK(report.rows[0].metrics.at("uncertainty").mean == doctest::Approx(0.4));
    CHECK(report.rows[1].final_accuracy.std == 0.0);
    REQUIRE(report.curve.size() == 4);
    CHECK(report.curve[0].labeled_size == 10);
    CHECK(report.curve[0].accuracy.mean == doctest::Approx(0.55));

    const std::vector<RunResult> twice{make("cal", 1, 0.5, 0.8, 0.3), make("cal", 1, 0.5, 0.8, 0.3)};
    CHECK(compare(twice).rows[0].final_accuracy.std == 0.0);

    std::ostringstream csv;
    write_aggregate_csv(csv, report);
    CHECK(csv.str().find("cal") != std::string::npos);
    CHECK(format_summary(report).find("random") != std::string::npos);
}
