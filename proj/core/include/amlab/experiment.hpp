#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "amlab/attacks.hpp"
#include "amlab/defense.hpp"
#include "amlab/sweep.hpp"

namespace amlab {

/// A pipeline stage needs an artifact an earlier stage has not produced.
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IdxTaskPaths {
    std::string train_images, train_labels;
    std::string test_images, test_labels;
    std::string outlier_images, outlier_labels;
    std::string surrogate_images, surrogate_labels;

    bool configured() const { return !train_images.empty(); }
};

/// Whole-experiment configuration, parsed from one JSON file. Unknown
/// keys are rejected; the hash is stable under key reordering.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs";
    std::string task_preset = "separable";
    IdxTaskPaths idx;
    std::size_t jbda_seed_size = 20;

    TrainConfig defender_train{0.1, 40, 16, 0.5, 1};
    TrainConfig misinformer_train{0.1, 40, 16, 0.0, 102};
    TrainConfig clone_train{0.1, 50, 16, 0.0, 203};

    DefenseConfig defense;
    AttackConfig attack;

    std::string sweep_knob = "tau";
    std::vector<double> sweep_values;
    std::size_t sweep_seeds_per_point = 3;
    double accuracy_floor = -1.0;  // negative disables the floor flag

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
    static nlohmann::json defaults_json();
    nlohmann::json to_json() const;

    std::uint64_t config_hash() const;
    /// out_dir/<12 hex chars of the config hash>
    std::string run_dir() const;

    TaskBundle build_task(std::uint64_t task_seed) const;
    SweepRequest build_sweep_request() const;
};

struct StageMetrics {
    double test_accuracy = 0.0;
    double mean_msp_id = 0.0;
    double mean_msp_outlier = 0.0;
};

/// Pipeline stages backing the CLI subcommands. Each persists its
/// artifacts under cfg.run_dir() and returns headline metrics.
StageMetrics run_train_defender(const ExperimentConfig& cfg);
StageMetrics run_train_misinformer(const ExperimentConfig& cfg);

struct AttackMetrics {
    double clone_accuracy = 0.0;
    std::size_t queries_used = 0;
};
AttackMetrics run_attack(const ExperimentConfig& cfg);

/// Full trade-off sweep; writes tradeoff.csv/.svg (per-seed points) and
/// tradeoff_mean.csv (per-knob means). Returns the report directory.
std::string run_sweep(const ExperimentConfig& cfg);

/// Rebuilds SVG charts from CSVs already present in the run directory.
void run_report(const ExperimentConfig& cfg);

}  // namespace amlab
