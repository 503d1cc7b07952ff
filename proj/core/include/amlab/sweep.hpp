#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amlab/attacks.hpp"
#include "amlab/dataset.hpp"
#include "amlab/defense.hpp"
#include "amlab/synthetic.hpp"
#include "amlab/train.hpp"

namespace amlab {

/// Everything one experiment needs: the defender's splits, the OE outlier
/// set, the attacker's surrogate pool and seed set, and the architecture.
struct TaskBundle {
    LabeledDataset train;
    LabeledDataset test;
    LabeledDataset outliers;
    LabeledDataset surrogate;
    LabeledDataset seed;  // attacker's small ID seed set (jbda)
    std::vector<LayerSpec> arch;        // defender/misinformer architecture
    std::vector<LayerSpec> clone_arch;  // attacker's student; smaller, since the
                                        // attacker does not know the victim's net
    std::size_t num_classes;
};

/// The 4-cluster 2-d preset with a shifted low-overlap surrogate pool and
/// axis-aligned outliers; everything derives deterministically from `seed`.
TaskBundle make_separable_task(std::uint64_t seed, std::size_t jbda_seed_size = 20);

using TaskFactory = std::function<TaskBundle(std::uint64_t seed)>;

struct TradeoffPoint {
    std::string knob_name;  // tau | alpha_pp | dp_magnitude
    double knob_value = 0.0;
    double defender_accuracy = 0.0;  // through the defended query path
    double clone_accuracy = 0.0;     // clone on defender-test
    AttackKind attack = AttackKind::knockoff;
    LabelStrategy strategy = LabelStrategy::soft;
    std::uint64_t seed = 0;
    bool accuracy_floor_violated = false;
};

struct SweepRequest {
    DefenseKind defense = DefenseKind::am;
    std::string knob_name = "tau";
    std::vector<double> knob_values;
    AttackConfig attack;
    TrainConfig defender_train;
    TrainConfig misinformer_train;
    TrainConfig clone_train;
    std::uint64_t base_seed = 1;
    std::size_t seeds_per_point = 3;
    std::optional<double> accuracy_floor;
    std::size_t threads = 0;  // 0 = AMLAB_THREADS env or 1
    TaskFactory task_factory;  // defaults to make_separable_task
};

/// Sensible training configs for the separable preset.
TrainConfig default_defender_train(std::uint64_t seed);
TrainConfig default_misinformer_train(std::uint64_t seed);
TrainConfig default_clone_train(std::uint64_t seed);

/// Trains the defender with outlier exposure on the bundle.
Classifier train_defender_on(const TaskBundle& task, const TrainConfig& cfg);

/// One full train-attack-evaluate cycle at the given knob value.
TradeoffPoint run_tradeoff_point(const SweepRequest& req, double knob_value,
                                 std::uint64_t seed);

/// One point per (knob value, seed); deterministic, independent points,
/// optionally executed on a small thread pool. With `failures` null any
/// point error is rethrown; otherwise failed points are skipped and their
/// messages collected, so completed points can still be persisted.
std::vector<TradeoffPoint> sweep(const SweepRequest& req,
                                 std::vector<std::string>* failures = nullptr);

/// Mean defender/clone accuracy per knob value over seeds.
std::vector<TradeoffPoint> mean_over_seeds(const std::vector<TradeoffPoint>& points);

/// Largest tau whose defended benign accuracy stays within max_drop of the
/// undefended accuracy on `test`.
double calibrate_tau(const Classifier& defender, const Classifier& misinformer,
                     const LabeledDataset& test, double max_drop, double nu = 1000.0);

/// Binary-searches the defense knob (tau for AM, alpha for PP) until the
/// defended accuracy lands within `tolerance` of `target_accuracy`.
double calibrate_knob_for_accuracy(DefenseKind kind, const Classifier& defender,
                                   const Classifier& misinformer, const LabeledDataset& test,
                                   double target_accuracy, double tolerance);

}  // namespace amlab
