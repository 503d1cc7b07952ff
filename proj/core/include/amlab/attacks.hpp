#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amlab/dataset.hpp"
#include "amlab/defense.hpp"
#include "amlab/net.hpp"
#include "amlab/train.hpp"

namespace amlab {

enum class AttackKind { knockoff, jbda };
enum class LabelStrategy { soft, argmax };

std::string attack_kind_name(AttackKind k);
AttackKind attack_kind_from_name(const std::string& name);
std::string label_strategy_name(LabelStrategy s);
LabelStrategy label_strategy_from_name(const std::string& name);

struct AttackConfig {
    AttackKind kind = AttackKind::knockoff;
    std::size_t query_budget = 500;       // knockoff
    std::string surrogate = "surrogate";  // knockoff: dataset name
    std::size_t seed_size = 20;           // jbda
    std::size_t rounds = 4;               // jbda augmentation rounds
    double jbda_step = 0.8;               // jbda perturbation step
    std::size_t clone_epochs_per_round = 10;
    LabelStrategy label_strategy = LabelStrategy::soft;
    bool restart_clone_each_round = true;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Victim responses harvested through the black-box query interface.
struct HarvestedDataset {
    std::vector<Tensor> inputs;
    std::vector<Tensor> targets;  // probability vectors as served
    AttackConfig source_attack;

    std::size_t size() const { return inputs.size(); }

    void save_file(const std::string& path) const;
    static HarvestedDataset load_file(const std::string& path);
};

/// Queries the victim with `budget` surrogate inputs. Sampling is without
/// replacement up to the surrogate size, then with replacement.
HarvestedDataset knockoff_harvest(QueryInterface& victim, const LabeledDataset& surrogate,
                                  std::size_t budget, std::uint64_t rng_seed,
                                  const std::string& user_id = "attacker");

/// x' = x + step * sign(d loss / d x) for the clone's cross entropy at
/// `label`. sign(0) = 0, so every coordinate moves by exactly 0 or step.
Tensor jbda_synthesize(Classifier& clone, const Tensor& x, std::size_t label, double step);

struct JbdaResult {
    Classifier clone;
    HarvestedDataset harvest;
};

/// Full augmentation loop: label the seed set via the victim, train the
/// clone, then each round perturb every current example, label the new
/// points via the victim and retrain. Dataset size doubles per round.
JbdaResult jbda_attack(QueryInterface& victim, const LabeledDataset& seed,
                       const std::vector<LayerSpec>& clone_arch, const AttackConfig& cfg,
                       const TrainConfig& clone_train, const std::string& user_id = "attacker");

/// Distills the harvest into a clone: soft targets via distillation loss,
/// argmax targets via plain cross entropy.
Classifier train_clone(const HarvestedDataset& harvest, const std::vector<LayerSpec>& arch,
                       std::size_t num_classes, const TrainConfig& cfg,
                       LabelStrategy label_strategy, const Classifier* warm_start = nullptr);

}  // namespace amlab
