#include "amlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "amlab/metrics.hpp"

namespace amlab {

TaskBundle make_separable_task(std::uint64_t seed, std::size_t jbda_seed_size) {
    auto spec = SyntheticTaskSpec::separable_preset(seed);
    auto all = generate_synthetic(spec, Role::defender_train, "separable");
    auto [train_part, test_part] = split(all, 0.75, seed + 11);

    auto outlier_spec = spec;
    outlier_spec.samples_per_class = 100;
    outlier_spec.rng_seed = seed + 21;

    auto surrogate_spec = spec;
    surrogate_spec.samples_per_class = 200;
    surrogate_spec.rng_seed = seed + 31;

    std::vector<std::size_t> seed_idx(std::min(jbda_seed_size, train_part.size()));
    for (std::size_t i = 0; i < seed_idx.size(); ++i) seed_idx[i] = i;

    // Attacker pool: defender clusters shifted by 6x the cluster std and
    // doubled in width, so only a thin sliver overlaps the defender's
    // high-confidence region.
    double shift = 6.0 * spec.cluster_std;
    TaskBundle task{
        train_part.with_role(Role::defender_train, "separable/train"),
        test_part.with_role(Role::defender_test, "separable/test"),
        generate_outliers(outlier_spec, "separable/outliers"),
        generate_surrogate(surrogate_spec, {shift, shift}, 2.0, "separable/surrogate"),
        train_part.select(seed_idx, "separable/seed").with_role(Role::seed, "separable/seed"),
        {LayerSpec::Dense(spec.input_dim, 64), LayerSpec::Relu(),
         LayerSpec::Dense(64, spec.num_classes), LayerSpec::SoftmaxOutput()},
        {LayerSpec::Dense(spec.input_dim, 8), LayerSpec::Relu(),
         LayerSpec::Dense(8, spec.num_classes), LayerSpec::SoftmaxOutput()},
        spec.num_classes,
    };
    return task;
}

TrainConfig default_defender_train(std::uint64_t seed) {
    // The low rate over many epochs keeps the in-distribution confidence
    // tail tight, which is what lets tau sit high during calibration.
    return {0.02, 100, 16, 0.5, seed};
}

TrainConfig default_misinformer_train(std::uint64_t seed) {
    return {0.1, 40, 16, 0.0, seed + 101};
}

TrainConfig default_clone_train(std::uint64_t seed) {
    return {0.1, 50, 16, 0.0, seed + 201};
}

Classifier train_defender_on(const TaskBundle& task, const TrainConfig& cfg) {
    Classifier model(task.arch, task.num_classes, cfg.rng_seed);
    train(model, task.train, &task.outliers, cfg, LossKind::standard_oe);
    return model;
}

namespace {

DefenseConfig knob_config(DefenseKind kind, const std::string& knob_name, double value) {
    DefenseConfig cfg;
    cfg.kind = kind;
    if (knob_name == "tau")
        cfg.tau = value;
    else if (knob_name == "alpha_pp")
        cfg.alpha_pp = value;
    else if (knob_name == "dp_magnitude")
        cfg.dp_magnitude = value;
    else
        throw ConfigError("unknown sweep knob: " + knob_name);
    return cfg;
}

TrainConfig reseed(TrainConfig cfg, std::uint64_t seed) {
    cfg.rng_seed += seed * 1009;
    return cfg;
}

}  // namespace

TradeoffPoint run_tradeoff_point(const SweepRequest& req, double knob_value,
                                 std::uint64_t seed) {
    TaskFactory factory = req.task_factory
                              ? req.task_factory
                              : [&](std::uint64_t s) {
                                    return make_separable_task(s, req.attack.seed_size);
                                };
    TaskBundle task = factory(seed);

    Classifier defender = train_defender_on(task, reseed(req.defender_train, seed));
    Classifier misinformer =
        train_misinformer(task.train, task.arch, reseed(req.misinformer_train, seed));

    DefenseConfig defense_cfg = knob_config(req.defense, req.knob_name, knob_value);
    std::optional<Classifier> mis;
    if (req.defense == DefenseKind::am) mis = misinformer;
    DefendedModel victim(defender, mis, defense_cfg);

    TrainConfig clone_cfg = reseed(req.clone_train, seed);
    Classifier clone = [&] {
        if (req.attack.kind == AttackKind::knockoff) {
            auto harvest = knockoff_harvest(victim, task.surrogate, req.attack.query_budget,
                                            req.attack.rng_seed + seed);
            return train_clone(harvest, task.clone_arch, task.num_classes, clone_cfg,
                               req.attack.label_strategy);
        }
        auto cfg = req.attack;
        cfg.rng_seed += seed;
        return jbda_attack(victim, task.seed, task.clone_arch, cfg, clone_cfg).clone;
    }();

    DefendedModel eval_victim(defender, mis, defense_cfg);
    TradeoffPoint point;
    point.knob_name = req.knob_name;
    point.knob_value = knob_value;
    point.defender_accuracy = accuracy(eval_victim, task.test);
    point.clone_accuracy = accuracy(clone, task.test);
    point.attack = req.attack.kind;
    point.strategy = req.attack.label_strategy;
    point.seed = seed;
    if (req.accuracy_floor && point.defender_accuracy < *req.accuracy_floor)
        point.accuracy_floor_violated = true;
    return point;
}

std::vector<TradeoffPoint> sweep(const SweepRequest& req, std::vector<std::string>* failures) {
    if (req.knob_values.empty()) throw ConfigError("sweep: empty knob grid");
    std::size_t threads = req.threads;
    if (threads == 0) {
        if (const char* env = std::getenv("AMLAB_THREADS")) threads = std::strtoul(env, nullptr, 10);
        if (threads == 0) threads = 1;
    }

    struct Job {
        double value;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double v : req.knob_values)
        for (std::size_t s = 0; s < req.seeds_per_point; ++s)
            jobs.push_back({v, req.base_seed + s});

    std::vector<TradeoffPoint> points(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                points[i] = run_tradeoff_point(req, jobs[i].value, jobs[i].seed);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    std::vector<TradeoffPoint> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (errors[i].empty()) {
            out.push_back(std::move(points[i]));
        } else if (failures) {
            failures->push_back(errors[i]);
        } else {
            throw std::runtime_error("sweep point failed: " + errors[i]);
        }
    }
    return out;
}

std::vector<TradeoffPoint> mean_over_seeds(const std::vector<TradeoffPoint>& points) {
    std::vector<TradeoffPoint> out;
    for (const auto& p : points) {
        bool seen = std::any_of(out.begin(), out.end(), [&](const TradeoffPoint& q) {
            return q.knob_value == p.knob_value && q.knob_name == p.knob_name;
        });
        if (!seen) {
            TradeoffPoint mean = p;
            mean.seed = 0;
            out.push_back(mean);
        }
    }
    for (auto& m : out) {
        double def = 0.0, clone = 0.0;
        std::size_t n = 0;
        for (const auto& p : points)
            if (p.knob_value == m.knob_value && p.knob_name == m.knob_name) {
                def += p.defender_accuracy;
                clone += p.clone_accuracy;
                ++n;
            }
        m.defender_accuracy = def / static_cast<double>(n);
        m.clone_accuracy = clone / static_cast<double>(n);
    }
    return out;
}

double calibrate_tau(const Classifier& defender, const Classifier& misinformer,
                     const LabeledDataset& test, double max_drop, double nu) {
    Classifier probe = defender;
    double baseline = accuracy(probe, test);
    double tau = 0.30;
    for (double candidate = 0.995; candidate >= 0.30 - 1e-9; candidate -= 0.005) {
        DefenseConfig cfg;
        cfg.kind = DefenseKind::am;
        cfg.tau = candidate;
        cfg.nu = nu;
        DefendedModel defended(defender, misinformer, cfg);
        if (accuracy(defended, test) >= baseline - max_drop) {
            tau = candidate;
            break;
        }
    }
    return tau;
}

double calibrate_knob_for_accuracy(DefenseKind kind, const Classifier& defender,
                                   const Classifier& misinformer, const LabeledDataset& test,
                                   double target_accuracy, double tolerance) {
    if (kind != DefenseKind::am && kind != DefenseKind::pp)
        throw ConfigError("accuracy calibration applies to am and pp only");
    auto measure = [&](double knob) {
        DefenseConfig cfg;
        cfg.kind = kind;
        if (kind == DefenseKind::am)
            cfg.tau = knob;
        else
            cfg.alpha_pp = knob;
        std::optional<Classifier> mis;
        if (kind == DefenseKind::am) mis = misinformer;
        DefendedModel defended(defender, mis, cfg);
        return accuracy(defended, test);
    };
    // Defended accuracy is non-increasing in the knob for both defenses.
    double lo = kind == DefenseKind::am ? 1e-6 : 0.0, hi = 1.0;
    double best = lo, best_err = std::abs(measure(lo) - target_accuracy);
    for (int iter = 0; iter < 40; ++iter) {
        double mid = 0.5 * (lo + hi);
        double acc = measure(mid);
        double err = std::abs(acc - target_accuracy);
        if (err < best_err) {
            best = mid;
            best_err = err;
        }
        if (err <= tolerance) return mid;
        if (acc > target_accuracy)
            lo = mid;
        else
            hi = mid;
    }
    return best;
}

}  // namespace amlab
