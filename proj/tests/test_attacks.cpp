#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "amlab/attacks.hpp"
#include "amlab/idx.hpp"
#include "amlab/losses.hpp"
#include "amlab/metrics.hpp"
#include "amlab/sweep.hpp"

using namespace amlab;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    TaskBundle task;
    Classifier defender;
    Fixture(std::uint64_t seed = 9)
        : task(make_separable_task(seed)),
          defender(train_defender_on(task, default_defender_train(seed))) {}
};

// Records every input it is asked about; proves attacks only touch the
// black-box surface.
class CountingVictim : public QueryInterface {
public:
    explicit CountingVictim(Classifier model) : model_(std::move(model)) {}
    Tensor query(const Tensor& x, const std::string&) override {
        ++count_;
        seen_.push_back(x);
        return model_.forward(x);
    }
    std::size_t query_count() const override { return count_; }
    const std::vector<Tensor>& seen() const { return seen_; }

private:
    Classifier model_;
    std::size_t count_ = 0;
    std::vector<Tensor> seen_;
};

}  // namespace

TEST_CASE("name round-trips and config validation") {
    CHECK(attack_kind_from_name(attack_kind_name(AttackKind::jbda)) == AttackKind::jbda);
    CHECK(label_strategy_from_name(label_strategy_name(LabelStrategy::argmax)) ==
          LabelStrategy::argmax);
    CHECK_THROWS_AS(attack_kind_from_name("bogus"), ConfigError);
    CHECK_THROWS_AS(label_strategy_from_name("bogus"), ConfigError);

    AttackConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.query_budget = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AttackConfig{};
    cfg.kind = AttackKind::jbda;
    cfg.seed_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AttackConfig{};
    cfg.kind = AttackKind::jbda;
    cfg.jbda_step = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("knockoff harvest respects the budget and the query interface") {
    Fixture fx;
    CountingVictim victim(fx.defender);
    auto harvest = knockoff_harvest(victim, fx.task.surrogate, 120, 5, "thief");
    CHECK(harvest.size() == 120);
    CHECK(victim.query_count() == 120);
    // Budget below surrogate size: all sampled inputs are distinct members
    // of the surrogate pool (sampling without replacement).
    for (std::size_t i = 0; i < harvest.size(); ++i) {
        for (std::size_t j = i + 1; j < harvest.size(); ++j) {
            bool identical = true;
            for (std::size_t d = 0; d < harvest.inputs[i].size(); ++d)
                if (harvest.inputs[i][d] != harvest.inputs[j][d]) {
                    identical = false;
                    break;
                }
            CHECK_FALSE(identical);
        }
    }
}

TEST_CASE("knockoff harvest exceeding the pool reuses inputs") {
    Fixture fx;
    auto pool = fx.task.surrogate.select({0, 1, 2, 3, 4}, "tiny");
    CountingVictim victim(fx.defender);
    auto harvest = knockoff_harvest(victim, pool, 12, 5);
    CHECK(harvest.size() == 12);
    CHECK(victim.query_count() == 12);
}

TEST_CASE("undefended harvest targets equal the victim's own predictions") {
    Fixture fx;
    DefendedModel victim(fx.defender, std::nullopt, DefenseConfig{});
    auto harvest = knockoff_harvest(victim, fx.task.surrogate, 50, 7);
    for (std::size_t i = 0; i < harvest.size(); ++i) {
        auto ref = fx.defender.forward(harvest.inputs[i]);
        for (std::size_t k = 0; k < ref.size(); ++k) CHECK(harvest.targets[i][k] == ref[k]);
        check_probability_vector(harvest.targets[i]);
    }
}

TEST_CASE("harvest persistence round-trips bit-identically") {
    Fixture fx;
    DefendedModel victim(fx.defender, std::nullopt, DefenseConfig{});
    auto harvest = knockoff_harvest(victim, fx.task.surrogate, 30, 3);
    auto path = fs::temp_directory_path() / ("harvest_" + std::to_string(::getpid()) + ".bin");
    harvest.save_file(path.string());
    auto loaded = HarvestedDataset::load_file(path.string());
    REQUIRE(loaded.size() == harvest.size());
    for (std::size_t i = 0; i < harvest.size(); ++i) {
        for (std::size_t d = 0; d < harvest.inputs[i].size(); ++d)
            CHECK(loaded.inputs[i][d] == harvest.inputs[i][d]);
        for (std::size_t k = 0; k < harvest.targets[i].size(); ++k)
            CHECK(loaded.targets[i][k] == harvest.targets[i][k]);
    }
    CHECK(loaded.source_attack.kind == harvest.source_attack.kind);
    CHECK(loaded.source_attack.query_budget == harvest.source_attack.query_budget);

    // Corrupt magic is rejected.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.put('X');
    }
    CHECK_THROWS_AS(HarvestedDataset::load_file(path.string()), FormatError);
    fs::remove(path);
}

TEST_CASE("jbda perturbation moves every coordinate by 0 or step") {
    Fixture fx;
    Classifier clone(fx.task.arch, fx.task.num_classes, 123);
    const double step = 0.25;
    for (std::size_t i = 0; i < 20; ++i) {
        const auto& x = fx.task.seed.input(i);
        auto xp = jbda_synthesize(clone, x, i % fx.task.num_classes, step);
        REQUIRE(xp.size() == x.size());
        for (std::size_t d = 0; d < x.size(); ++d) {
            double delta = std::abs(xp[d] - x[d]);
            CHECK((delta == 0.0 || delta == doctest::Approx(step).epsilon(1e-12)));
        }
    }
}

TEST_CASE("jbda perturbation ascends the clone's loss") {
    Fixture fx;
    // A partially trained clone so gradients are informative.
    DefendedModel victim(fx.defender, std::nullopt, DefenseConfig{});
    auto harvest = knockoff_harvest(victim, fx.task.surrogate, 60, 2);
    TrainConfig tc{0.1, 5, 16, 0.0, 11};
    auto clone = train_clone(harvest, fx.task.arch, fx.task.num_classes, tc, LabelStrategy::soft);

    std::size_t ascended = 0, total = 0;
    for (std::size_t i = 0; i < 30; ++i) {
        const auto& x = fx.task.seed.input(i % fx.task.seed.size());
        auto p0 = clone.forward(x);
        std::size_t label = 0;
        for (std::size_t k = 1; k < p0.size(); ++k)
            if (p0[k] > p0[label]) label = k;
        double before = cross_entropy(p0, label);
        auto xp = jbda_synthesize(clone, x, label, 0.05);
        double after = cross_entropy(clone.forward(xp), label);
        ++total;
        if (after >= before - 1e-12) ++ascended;
    }
    // First-order ascent holds for a small step on the large majority.
    CHECK(ascended >= total * 8 / 10);
}

TEST_CASE("jbda doubles the dataset each round and counts queries") {
    Fixture fx;
    CountingVictim victim(fx.defender);
    AttackConfig cfg;
    cfg.kind = AttackKind::jbda;
    cfg.seed_size = 20;
    cfg.rounds = 4;
    TrainConfig tc{0.1, 10, 16, 0.0, 21};
    auto result = jbda_attack(victim, fx.task.seed, fx.task.arch, cfg, tc);
    // 20 * 2^4 = 320 labelled examples; every one required a victim query.
    CHECK(result.harvest.size() == 320);
    CHECK(victim.query_count() == 320);
    // Augmented points differ from seeds only by +-step per coordinate.
    const double step = cfg.jbda_step;
    for (std::size_t i = 20; i < 40; ++i) {  // first augmentation wave
        bool matched = false;
        for (std::size_t s = 0; s < 20 && !matched; ++s) {
            bool ok = true;
            for (std::size_t d = 0; d < result.harvest.inputs[i].size(); ++d) {
                double delta = std::abs(result.harvest.inputs[i][d] - fx.task.seed.input(s)[d]);
                if (!(delta < 1e-9 || std::abs(delta - step) < 1e-9)) {
                    ok = false;
                    break;
                }
            }
            matched = ok;
        }
        CHECK(matched);
    }
}

TEST_CASE("jbda against the undefended victim extracts the decision surface") {
    Fixture fx;
    DefendedModel victim(fx.defender, std::nullopt, DefenseConfig{});
    AttackConfig cfg;
    cfg.kind = AttackKind::jbda;
    cfg.seed_size = 20;
    cfg.rounds = 4;
    TrainConfig tc{0.1, 30, 16, 0.0, 31};
    auto result = jbda_attack(victim, fx.task.seed, fx.task.arch, cfg, tc);
    double defender_acc = accuracy(fx.defender, fx.task.test);
    double clone_acc = accuracy(result.clone, fx.task.test);
    CHECK(clone_acc >= defender_acc - 0.10);
}

TEST_CASE("soft and argmax clones coincide on one-hot targets") {
    Fixture fx;
    HarvestedDataset h;
    h.source_attack = AttackConfig{};
    Rng rng(99);
    for (int i = 0; i < 64; ++i) {
        Tensor x({2});
        x[0] = rng.uniform(-4, 4);
        x[1] = rng.uniform(-4, 4);
        Tensor t({4});
        t[std::size_t(i) % 4] = 1.0;
        h.inputs.push_back(x);
        h.targets.push_back(t);
    }
    TrainConfig tc{0.05, 8, 8, 0.0, 41};
    auto soft = train_clone(h, fx.task.arch, 4, tc, LabelStrategy::soft);
    auto hard = train_clone(h, fx.task.arch, 4, tc, LabelStrategy::argmax);
    auto ps = soft.flat_params();
    auto ph = hard.flat_params();
    REQUIRE(ps.size() == ph.size());
    for (std::size_t i = 0; i < ps.size(); ++i)
        CHECK(ps[i] == doctest::Approx(ph[i]).epsilon(1e-9));
}

TEST_CASE("knockoff clone against the undefended victim matches it closely") {
    Fixture fx;
    DefendedModel victim(fx.defender, std::nullopt, DefenseConfig{});
    auto harvest = knockoff_harvest(victim, fx.task.surrogate, 500, 13);
    auto clone = train_clone(harvest, fx.task.arch, fx.task.num_classes,
                             default_clone_train(13), LabelStrategy::soft);
    double defender_acc = accuracy(fx.defender, fx.task.test);
    double clone_acc = accuracy(clone, fx.task.test);
    CHECK(clone_acc >= defender_acc - 0.03);
}
