#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cal/acquisition.hpp"
#include "cal/analysis.hpp"
#include "cal/classifier.hpp"
#include "cal/config.hpp"
#include "cal/dataset.hpp"

namespace cal {

/// One point of the learning curve. Iteration t trains on the labeled set of
/// size initial + t * b; every record except the last also carries the batch
/// acquired from that model and its diagnostics.
struct IterationRecord {
    std::string strategy;
    std::uint64_t seed = 0;
    std::size_t iteration = 0;
    std::size_t labeled_size = 0;
    double test_accuracy = 0.0;
    double validation_loss = 0.0;
    BatchDiagnostics diagnostics;
    double inference_seconds = 0.0;
    double selection_seconds = 0.0;
    double total_seconds = 0.0;
    std::vector<std::string> acquired_ids;
};

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<std::string> initial_ids;
    std::vector<IterationRecord> records;
    std::vector<std::string> acquired_ids;  // every acquisition, in order
    /// Div-I, Div-F and Repr of the first batch; Unc. of all acquired ids.
    BatchDiagnostics summary;
    double full_model_accuracy = 0.0;
    bool aborted = false;
    std::string error;
};

struct RunResult {
    LoopConfig config;
    std::string strategy;  // config.strategy_label()
    BudgetPlan plan;
    std::vector<SeedRun> seeds;
};

/// Fully supervised reference model: trained on pool + labeled with the run's
/// classifier settings and training seed.
struct FullModel {
    Classifier model;
    ProbabilityTable train_probs;  // p(y|x) for every pool + labeled example
    double test_accuracy = 0.0;
};

/// Memoizes full models per seed for one store and classifier config.
class FullModelCache {
public:
    const FullModel& get(const DatasetStore& store, const LoopConfig& config, std::uint64_t seed);

private:
    std::map<std::uint64_t, std::shared_ptr<const FullModel>> models_;
};

/// Seed of the classifier for a run seed. Shared by every iteration and the
/// full model, so identical training sets give identical models.
std::uint64_t training_seed(std::uint64_t run_seed);

FullModel train_full_model(const DatasetStore& store, const LoopConfig& config, std::uint64_t seed);

/// Trains on the store's current labeled split (ids ascending).
Classifier train_on_labeled(const DatasetStore& store, const LoopConfig& config, std::uint64_t seed,
                            TrainingReport* report = nullptr);

/// Runs the strategy for one AL round on the current store state. Inference
/// (forward passes, encodings, gradient embeddings) and selection
/// (ranking/clustering) are timed separately.
BatchSelection acquire_step(const DatasetStore& store, const Classifier& model, const LoopConfig& config,
                            std::uint64_t seed, std::size_t iteration, std::size_t batch);

BatchDiagnostics diagnose_batch(const DatasetStore& store, const Classifier& model, const LoopConfig& config,
                                std::span<const std::string> pool_ids, std::span<const std::string> batch_ids,
                                const ProbabilityTable& full_probs);

/// Loads the dataset, feature spaces and optional tf-idf space named by the config.
DatasetStore load_store(const LoopConfig& config);

/// The full AL simulation over every configured seed. A seed that hits an
/// error keeps its completed records and is marked aborted.
/// Per-round pool scores are written to `scores` when it is non-null.
RunResult run_simulation(const DatasetStore& store, const LoopConfig& config, FullModelCache* cache = nullptr,
                         std::ostream* scores = nullptr);

/// Store state and model of one replayed iteration.
struct ReplayStep {
    std::uint64_t seed;
    std::size_t iteration;
    const DatasetStore& store;
    const Classifier& model;
    const IterationRecord& record;
};

/// Rebuilds every recorded iteration of a run (labeled set, retrained model)
/// from the stored initial and acquired ids and calls `visit` for each.
void replay_run(const DatasetStore& store, const RunResult& run, const std::function<void(const ReplayStep&)>& visit);

}  // namespace cal
