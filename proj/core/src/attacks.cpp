#include "amlab/attacks.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "amlab/idx.hpp"
#include "amlab/losses.hpp"
#include "amlab/rng.hpp"

namespace amlab {

std::string attack_kind_name(AttackKind k) {
    return k == AttackKind::knockoff ? "knockoff" : "jbda";
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "knockoff") return AttackKind::knockoff;
    if (name == "jbda") return AttackKind::jbda;
    throw ConfigError("unknown attack kind: " + name);
}

std::string label_strategy_name(LabelStrategy s) {
    return s == LabelStrategy::soft ? "soft" : "argmax";
}

LabelStrategy label_strategy_from_name(const std::string& name) {
    if (name == "soft") return LabelStrategy::soft;
    if (name == "argmax") return LabelStrategy::argmax;
    throw ConfigError("unknown label strategy: " + name);
}

void AttackConfig::validate() const {
    if (kind == AttackKind::knockoff && query_budget < 1)
        throw ConfigError("query_budget must be >= 1");
    if (kind == AttackKind::jbda) {
        if (seed_size < 1) throw ConfigError("seed_size must be >= 1");
        if (!(jbda_step >= 0.0)) throw ConfigError("jbda_step must be >= 0");
    }
    if (clone_epochs_per_round < 1) throw ConfigError("clone_epochs_per_round must be >= 1");
}

namespace {

std::size_t argmax_of(const Tensor& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

}  // namespace

HarvestedDataset knockoff_harvest(QueryInterface& victim, const LabeledDataset& surrogate,
                                  std::size_t budget, std::uint64_t rng_seed,
                                  const std::string& user_id) {
    if (surrogate.empty()) throw ConfigError("knockoff: surrogate dataset is empty");
    Rng rng(rng_seed);
    auto perm = rng.permutation(surrogate.size());

    HarvestedDataset out;
    out.inputs.reserve(budget);
    out.targets.reserve(budget);
    for (std::size_t q = 0; q < budget; ++q) {
        // Without replacement until the surrogate is exhausted, then with.
        std::size_t idx = q < perm.size() ? perm[q] : rng.index(surrogate.size());
        const Tensor& x = surrogate.input(idx);
        out.inputs.push_back(x);
        out.targets.push_back(victim.query(x, user_id));
    }
    out.source_attack.kind = AttackKind::knockoff;
    out.source_attack.query_budget = budget;
    out.source_attack.surrogate = surrogate.name();
    out.source_attack.rng_seed = rng_seed;
    return out;
}

Tensor jbda_synthesize(Classifier& clone, const Tensor& x, std::size_t label, double step) {
    clone.zero_grads();
    Tensor pred = clone.forward(x);
    Tensor dx = clone.backward(cross_entropy_grad(pred, label));
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = dx[i] > 0.0 ? 1.0 : (dx[i] < 0.0 ? -1.0 : 0.0);
        out[i] += step * s;
    }
    return out;
}

JbdaResult jbda_attack(QueryInterface& victim, const LabeledDataset& seed,
                       const std::vector<LayerSpec>& clone_arch, const AttackConfig& cfg,
                       const TrainConfig& clone_train, const std::string& user_id) {
    cfg.validate();
    if (seed.empty()) throw ConfigError("jbda: seed dataset is empty");
    std::size_t take = std::min(cfg.seed_size, seed.size());

    HarvestedDataset harvest;
    harvest.source_attack = cfg;
    for (std::size_t i = 0; i < take; ++i) {
        harvest.inputs.push_back(seed.input(i));
        harvest.targets.push_back(victim.query(seed.input(i), user_id));
    }

    TrainConfig round_cfg = clone_train;
    round_cfg.epochs = cfg.clone_epochs_per_round;
    Classifier clone =
        train_clone(harvest, clone_arch, seed.num_classes(), round_cfg, cfg.label_strategy);

    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        std::size_t current = harvest.size();
        for (std::size_t i = 0; i < current; ++i) {
            std::size_t label = argmax_of(harvest.targets[i]);
            Tensor synth = jbda_synthesize(clone, harvest.inputs[i], label, cfg.jbda_step);
            Tensor served = victim.query(synth, user_id);
            harvest.inputs.push_back(std::move(synth));
            harvest.targets.push_back(std::move(served));
        }
        round_cfg.rng_seed = clone_train.rng_seed + round + 1;
        if (cfg.restart_clone_each_round) {
            clone = train_clone(harvest, clone_arch, seed.num_classes(), round_cfg,
                                cfg.label_strategy);
        } else {
            // Continue from the current parameters on the grown dataset.
            Classifier next =
                train_clone(harvest, clone_arch, seed.num_classes(), round_cfg,
                            cfg.label_strategy, &clone);
            clone = std::move(next);
        }
    }
    return {std::move(clone), std::move(harvest)};
}

Classifier train_clone(const HarvestedDataset& harvest, const std::vector<LayerSpec>& arch,
                       std::size_t num_classes, const TrainConfig& cfg,
                       LabelStrategy label_strategy, const Classifier* warm_start) {
    cfg.validate();
    if (harvest.size() == 0) throw ConfigError("train_clone: empty harvest");
    Classifier model = warm_start ? *warm_start : Classifier(arch, num_classes, cfg.rng_seed);

    Rng order_rng(cfg.rng_seed);
    std::vector<std::size_t> order(harvest.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(start + cfg.batch_size, order.size());
            double inv_batch = 1.0 / static_cast<double>(end - start);
            model.zero_grads();
            for (std::size_t b = start; b < end; ++b) {
                std::size_t idx = order[b];
                Tensor pred = model.forward(harvest.inputs[idx]);
                Tensor g = label_strategy == LabelStrategy::soft
                               ? distillation_loss_grad(pred, harvest.targets[idx])
                               : cross_entropy_grad(pred, argmax_of(harvest.targets[idx]));
                for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv_batch;
                model.backward(g);
            }
            model.sgd_step(cfg.learning_rate);
        }
    }
    return model;
}

namespace {

constexpr char kHarvestMagic[4] = {'A', 'M', 'H', 'V'};
constexpr std::uint32_t kHarvestVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("harvest file truncated");
    return v;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    write_pod<std::uint64_t>(out, t.rank());
    for (auto d : t.shape()) write_pod<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& in) {
    auto rank = read_pod<std::uint64_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_pod<std::uint64_t>(in);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw FormatError("harvest file truncated");
    return t;
}

}  // namespace

void HarvestedDataset::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write(kHarvestMagic, 4);
    write_pod<std::uint32_t>(out, kHarvestVersion);
    // Provenance header so evaluation is replayable without re-querying.
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(source_attack.kind));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(source_attack.label_strategy));
    write_pod<std::uint64_t>(out, source_attack.query_budget);
    write_pod<std::uint64_t>(out, source_attack.seed_size);
    write_pod<std::uint64_t>(out, source_attack.rounds);
    write_pod<double>(out, source_attack.jbda_step);
    write_pod<std::uint64_t>(out, source_attack.rng_seed);
    write_pod<std::uint64_t>(out, inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        write_tensor(out, inputs[i]);
        write_tensor(out, targets[i]);
    }
}

HarvestedDataset HarvestedDataset::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open harvest file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kHarvestMagic, 4) != 0)
        throw FormatError("bad harvest magic");
    if (read_pod<std::uint32_t>(in) != kHarvestVersion)
        throw FormatError("unsupported harvest version");
    HarvestedDataset out;
    out.source_attack.kind = static_cast<AttackKind>(read_pod<std::uint8_t>(in));
    out.source_attack.label_strategy = static_cast<LabelStrategy>(read_pod<std::uint8_t>(in));
    out.source_attack.query_budget = read_pod<std::uint64_t>(in);
    out.source_attack.seed_size = read_pod<std::uint64_t>(in);
    out.source_attack.rounds = read_pod<std::uint64_t>(in);
    out.source_attack.jbda_step = read_pod<double>(in);
    out.source_attack.rng_seed = read_pod<std::uint64_t>(in);
    auto n = read_pod<std::uint64_t>(in);
    out.inputs.reserve(n);
    out.targets.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        out.inputs.push_back(read_tensor(in));
        out.targets.push_back(read_tensor(in));
    }
    return out;
}

}  // namespace amlab
