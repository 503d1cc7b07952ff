#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "amlab/experiment.hpp"

using namespace amlab;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("defaults parse to a valid config") {
    auto cfg = ExperimentConfig::from_json(ExperimentConfig::defaults_json());
    CHECK(cfg.seed == 1);
    CHECK(cfg.out_dir == "runs");
    CHECK(cfg.task_preset == "separable");
    CHECK(cfg.defense.kind == DefenseKind::none);
    CHECK(cfg.attack.kind == AttackKind::knockoff);
    CHECK(cfg.sweep_knob == "tau");
    CHECK(cfg.sweep_seeds_per_point == 3);
    CHECK_FALSE(cfg.sweep_values.empty());
    // to_json round-trips through from_json unchanged.
    auto again = ExperimentConfig::from_json(cfg.to_json());
    CHECK(again.to_json() == cfg.to_json());
}

TEST_CASE("partial configs overlay the defaults") {
    json j = {{"seed", 42}, {"defense", {{"kind", "am"}, {"tau", 0.8}}}};
    auto cfg = ExperimentConfig::from_json(j);
    CHECK(cfg.seed == 42);
    CHECK(cfg.defense.kind == DefenseKind::am);
    CHECK(cfg.defense.tau == 0.8);
    // untouched fields keep their defaults
    CHECK(cfg.defender_train.epochs == 100);
    CHECK(cfg.attack.query_budget == 500);
}

TEST_CASE("unknown keys are rejected at every nesting level") {
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"sneaky", 1}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"defense", {{"taus", 0.9}}}}), ConfigError);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json({{"task", {{"idx", {{"bogus_path", "x"}}}}}}),
        ConfigError);
}

TEST_CASE("invalid values surface as config errors") {
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"defense", {{"kind", "umbrella"}}}}),
                    ConfigError);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json({{"defense", {{"kind", "am"}, {"tau", 1.5}}}}),
        ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"attack", {{"kind", "frontal"}}}}),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"defender", {{"learning_rate", -1.0}}}}),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"task", {{"preset", "cubist"}}}}),
                    ConfigError);
}

TEST_CASE("hash is stable under key reordering and sensitive to values") {
    json a = {{"seed", 9}, {"out_dir", "x"}, {"defense", {{"kind", "am"}, {"tau", 0.7}}}};
    json b = {{"defense", {{"tau", 0.7}, {"kind", "am"}}}, {"out_dir", "x"}, {"seed", 9}};
    auto ca = ExperimentConfig::from_json(a);
    auto cb = ExperimentConfig::from_json(b);
    CHECK(ca.config_hash() == cb.config_hash());

    json c = a;
    c["seed"] = 10;
    CHECK(ExperimentConfig::from_json(c).config_hash() != ca.config_hash());
}

TEST_CASE("run dir is out_dir plus twelve hex characters of the hash") {
    auto cfg = ExperimentConfig::from_json({{"out_dir", "results"}});
    auto dir = cfg.run_dir();
    auto rel = fs::path(dir);
    CHECK(rel.parent_path() == "results");
    auto leaf = rel.filename().string();
    CHECK(leaf.size() == 12);
    for (char ch : leaf) CHECK(std::isxdigit(static_cast<unsigned char>(ch)));
    // Same config, same directory.
    CHECK(ExperimentConfig::from_json({{"out_dir", "results"}}).run_dir() == dir);
}

TEST_CASE("from_file reads json and reports parse failures as config errors") {
    auto path = fs::temp_directory_path() / ("cfg_" + std::to_string(::getpid()) + ".json");
    {
        std::ofstream out(path);
        out << R"({"seed": 5})";
    }
    auto cfg = ExperimentConfig::from_file(path.string());
    CHECK(cfg.seed == 5);
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(ExperimentConfig::from_file(path.string()), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_file("/no/such/file.json"), ConfigError);
    fs::remove(path);
}

TEST_CASE("build_task honors the preset and jbda seed size") {
    auto cfg = ExperimentConfig::from_json({{"task", {{"jbda_seed_size", 8}}}});
    auto task = cfg.build_task(3);
    CHECK(task.num_classes == 4);
    CHECK(task.seed.size() == 8);
    CHECK(task.train.size() + task.test.size() == 600);
    CHECK_FALSE(task.outliers.empty());
    CHECK_FALSE(task.surrogate.empty());
    // idx preset without paths is a config error
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"task", {{"preset", "idx"}}}}), ConfigError);
}

TEST_CASE("build_sweep_request mirrors the sweep block") {
    json j = {{"sweep",
               {{"knob", "alpha_pp"},
                {"values", {0.1, 0.2}},
                {"seeds_per_point", 2},
                {"accuracy_floor", 0.9}}},
              {"defense", {{"kind", "pp"}}}};
    auto cfg = ExperimentConfig::from_json(j);
    auto req = cfg.build_sweep_request();
    CHECK(req.defense == DefenseKind::pp);
    CHECK(req.knob_name == "alpha_pp");
    CHECK(req.knob_values == std::vector<double>{0.1, 0.2});
    CHECK(req.seeds_per_point == 2);
    REQUIRE(req.accuracy_floor.has_value());
    CHECK(*req.accuracy_floor == 0.9);
}
