#include "cal/simulation.hpp"

#include <chrono>
#include <algorithm>
#include <ostream>
#include <set>

#include "cal/fmat.hpp"
#include "cal/kernels.hpp"
#include "cal/text.hpp"

namespace cal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SplitData {
    FeatureMatrix x;
    std::vector<int> y;
};

SplitData split_data(const DatasetStore& store, const LoopConfig& config, Split split) {
    const auto ids = store.ids_in(split);
    return {store.feature_space(config.feature_space).select(ids), store.labels_of(ids)};
}

bool all_have_tokens(const DatasetStore& store, std::span<const std::string> ids) {
    for (const auto& id : ids) {
        if (!store.example(id).tokens) return false;
    }
    return true;
}

}  // namespace

std::uint64_t training_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "train"); }

Classifier train_on_labeled(const DatasetStore& store, const LoopConfig& config, std::uint64_t seed,
                            TrainingReport* report) {
    const auto fit = split_data(store, config, Split::labeled);
    const auto val = split_data(store, config, Split::validation);
    auto cfg = config.classifier;
    cfg.seed = training_seed(seed);
    return train(fit.x, fit.y, val.x, val.y, cfg, report);
}

FullModel train_full_model(const DatasetStore& store, const LoopConfig& config, std::uint64_t seed) {
    auto ids = store.ids_in(Split::pool);
    const auto labeled = store.ids_in(Split::labeled);
    ids.insert(ids.end(), labeled.begin(), labeled.end());
    std::sort(ids.begin(), ids.end());
    const auto& space = store.feature_space(config.feature_space);
    const auto x = space.select(ids);
    const auto y = store.labels_of(ids);
    const auto val = split_data(store, config, Split::validation);
    const auto test = split_data(store, config, Split::test);
    auto cfg = config.classifier;
    cfg.seed = training_seed(seed);

    FullModel full;
    full.model = train(x, y, val.x, val.y, cfg);
    full.train_probs = ProbabilityTable(ids, predict_proba(full.model, x));
    full.test_accuracy = accuracy(full.model, test.x, test.y);
    return full;
}

const FullModel& FullModelCache::get(const DatasetStore& store, const LoopConfig& config, std::uint64_t seed) {
    auto it = models_.find(seed);
    if (it == models_.end()) {
        it = models_.emplace(seed, std::make_shared<const FullModel>(train_full_model(store, config, seed))).first;
    }
    return *it->second;
}

BatchSelection acquire_step(const DatasetStore& store, const Classifier& model, const LoopConfig& config,
                            std::uint64_t seed, std::size_t iteration, std::size_t batch) {
    auto acq = config.acquisition;
    acq.b = batch;
    acq.seed = derive_seed(seed, "acquire", iteration);
    Rng rng(acq.seed);
    const auto pool_ids = store.ids_in(Split::pool);
    if (pool_ids.empty()) throw StateError("acquisition from an empty pool");
    const auto& space = store.feature_space(config.feature_space);

    const auto start = Clock::now();
    switch (acq.strategy) {
        case Strategy::random: {
            return acquire_random(pool_ids, batch, rng);
        }
        case Strategy::entropy: {
            const auto probs = predict_proba(model, space.select(pool_ids));
            const double inference = seconds_since(start);
            auto sel = acquire_entropy(pool_ids, probs, batch);
            sel.inference_seconds = inference;
            return sel;
        }
        case Strategy::cal: {
            const auto labeled_ids = store.ids_in(Split::labeled);
            const auto pool_x = space.select(pool_ids);
            const auto labeled_x = space.select(labeled_ids);
            const auto pool_probs = predict_proba(model, pool_x);
            const auto labeled_probs = predict_proba(model, labeled_x);
            const auto pool_enc = encode(model, pool_x, acq.encoding, &store);
            const auto labeled_enc = encode(model, labeled_x, acq.encoding, &store);
            const auto labels = store.labels_of(labeled_ids);
            const double inference = seconds_since(start);
            const CalInputs in{pool_ids, pool_probs, pool_enc, labeled_probs, labeled_enc, labels};
            auto sel = acquire_cal(in, acq);
            sel.inference_seconds = inference;
            return sel;
        }
        case Strategy::kmeans_embedding: {
            const auto enc = encode(model, space.select(pool_ids), acq.encoding, &store);
            const double inference = seconds_since(start);
            auto sel = acquire_kmeans_embedding(enc, std::min(batch, enc.rows()), acq.kmeans_normalize, rng,
                                                acq.kmeans_iters);
            sel.inference_seconds = inference;
            return sel;
        }
        case Strategy::badge: {
            return acquire_badge(model, space.select(pool_ids), batch, rng);
        }
    }
    throw ConfigError("unhandled strategy");
}

BatchDiagnostics diagnose_batch(const DatasetStore& store, const Classifier& model, const LoopConfig& config,
                                std::span<const std::string> pool_ids, std::span<const std::string> batch_ids,
                                const ProbabilityTable& full_probs) {
    BatchDiagnostics out;
    if (batch_ids.empty()) return out;
    const auto enc = encode(model, store.feature_space(config.feature_space).select(pool_ids),
                            config.analysis_encoding, &store);
    out.div_feature = div_feature(batch_ids, pool_ids, enc);
    if (pool_ids.size() > config.repr_k) {
        out.representativeness = representativeness(batch_ids, pool_ids, enc, config.repr_k, config.repr_mode);
    }
    out.uncertainty = uncertainty_of_batch(batch_ids, full_probs);
    if (all_have_tokens(store, pool_ids)) {
        const std::set<std::string> chosen(batch_ids.begin(), batch_ids.end());
        std::vector<std::string> rest;
        for (const auto& id : pool_ids) {
            if (!chosen.contains(id)) rest.push_back(id);
        }
        const auto q = token_union(store, batch_ids);
        const auto r = token_union(store, rest);
        if (!q.empty() || !r.empty()) out.div_input = div_input(q, r);
    }
    return out;
}

DatasetStore load_store(const LoopConfig& config) {
    if (config.classes < 2) throw ConfigError("config needs classes >= 2");
    if (config.dataset.empty()) throw ConfigError("config needs a dataset path");
    auto store = load_jsonl(config.dataset, config.classes);
    if (!config.features.empty()) store.add_feature_space("input", load_feature_matrix(config.features));
    for (const auto& [name, path] : config.extra_spaces) store.add_feature_space(name, load_feature_matrix(path));
    if (config.tfidf_min_df > 0) build_tfidf(store, config.tfidf_min_df);
    return store;
}

namespace {

void run_seed(const DatasetStore& base, const LoopConfig& config, const std::string& label, const BudgetPlan& plan,
              FullModelCache& cache, SeedRun& out, std::ostream* scores) {
    DatasetStore store = base;
    Rng init_rng(derive_seed(out.seed, "init"));
    out.initial_ids = stratified_initial_sample(store, config.init_fraction, init_rng);
    const auto& full = cache.get(base, config, out.seed);
    out.full_model_accuracy = full.test_accuracy;
    const auto test = split_data(store, config, Split::test);

    for (std::size_t t = 0; t <= plan.iterations; ++t) {
        const auto iter_start = Clock::now();
        IterationRecord rec;
        rec.strategy = label;
        rec.seed = out.seed;
        rec.iteration = t;
        rec.labeled_size = store.count_in(Split::labeled);

        TrainingReport report;
        const auto model = train_on_labeled(store, config, out.seed, &report);
        rec.validation_loss = report.best_validation_loss;
        rec.test_accuracy = accuracy(model, test.x, test.y);

        if (t < plan.iterations) {
            const auto pool_ids = store.ids_in(Split::pool);
            auto sel = acquire_step(store, model, config, out.seed, t, plan.batch);
            rec.inference_seconds = sel.inference_seconds;
            rec.selection_seconds = sel.selection_seconds;
            rec.diagnostics = diagnose_batch(store, model, config, pool_ids, sel.ids, full.train_probs);
            if (scores) {
                const nlohmann::json context{{"seed", out.seed}, {"iteration", t}};
                if (!sel.pool_scores.empty()) write_scores_jsonl(*scores, pool_ids, sel.pool_scores, label, context);
                else write_scores_jsonl(*scores, sel.ids, sel.scores, label, context);
            }
            transfer_to_labeled(store, sel.ids);
            out.acquired_ids.insert(out.acquired_ids.end(), sel.ids.begin(), sel.ids.end());
            rec.acquired_ids = std::move(sel.ids);
        }
        rec.total_seconds = seconds_since(iter_start);
        out.records.push_back(std::move(rec));
    }

    if (!out.records.empty()) {
        const auto& first = out.records.front().diagnostics;
        out.summary.div_input = first.div_input;
        out.summary.div_feature = first.div_feature;
        out.summary.representativeness = first.representativeness;
    }
    if (!out.acquired_ids.empty()) out.summary.uncertainty = uncertainty_of_batch(out.acquired_ids, full.train_probs);
}

}  // namespace

RunResult run_simulation(const DatasetStore& store, const LoopConfig& config, FullModelCache* cache,
                         std::ostream* scores) {
    config.validate();
    if (!store.has_feature_space(config.feature_space)) {
        throw ConfigError("feature space '" + config.feature_space + "' not loaded");
    }
    RunResult result;
    result.config = config;
    result.strategy = config.strategy_label();
    result.plan = plan_budget(config, store.count_in(Split::pool));

    FullModelCache local;
    FullModelCache& models = cache ? *cache : local;
    for (auto seed : config.seeds) {
        SeedRun run;
        run.seed = seed;
        try {
            run_seed(store, config, result.strategy, result.plan, models, run, scores);
        } catch (const std::exception& e) {
            run.aborted = true;
            run.error = e.what();
        }
        result.seeds.push_back(std::move(run));
    }
    return result;
}

void replay_run(const DatasetStore& base, const RunResult& run, const std::function<void(const ReplayStep&)>& visit) {
    for (const auto& seed_run : run.seeds) {
        DatasetStore store = base;
        transfer_to_labeled(store, seed_run.initial_ids);
        for (const auto& rec : seed_run.records) {
            const auto model = train_on_labeled(store, run.config, seed_run.seed);
            visit(ReplayStep{seed_run.seed, rec.iteration, store, model, rec});
            transfer_to_labeled(store, rec.acquired_ids);
        }
    }
}

}  // namespace cal
