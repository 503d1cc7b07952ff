#include "amlab/experiment.hpp"

#include <filesystem>
#include <fstream>

#include "amlab/idx.hpp"
#include "amlab/metrics.hpp"
#include "amlab/report.hpp"

namespace amlab {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json ExperimentConfig::defaults_json() {
    return json{
        {"seed", 1},
        {"out_dir", "runs"},
        {"task",
         {{"preset", "separable"},
          {"jbda_seed_size", 20},
          {"idx",
           {{"train_images", ""},
            {"train_labels", ""},
            {"test_images", ""},
            {"test_labels", ""},
            {"outlier_images", ""},
            {"outlier_labels", ""},
            {"surrogate_images", ""},
            {"surrogate_labels", ""}}}}},
        {"defender",
         {{"learning_rate", 0.02}, {"epochs", 100}, {"batch_size", 16}, {"oe_weight", 0.5},
          {"rng_seed", 1}}},
        {"misinformer",
         {{"learning_rate", 0.1}, {"epochs", 40}, {"batch_size", 16}, {"oe_weight", 0.0},
          {"rng_seed", 102}}},
        {"clone",
         {{"learning_rate", 0.1}, {"epochs", 50}, {"batch_size", 16}, {"oe_weight", 0.0},
          {"rng_seed", 203}}},
        {"defense",
         {{"kind", "none"}, {"tau", 0.9}, {"nu", 1000.0}, {"alpha_pp", 0.5},
          {"dp_magnitude", 0.5}, {"match_msp", false}}},
        {"attack",
         {{"kind", "knockoff"}, {"query_budget", 500}, {"surrogate", "surrogate"},
          {"seed_size", 20}, {"rounds", 4}, {"jbda_step", 0.8},
          {"clone_epochs_per_round", 10}, {"label_strategy", "soft"},
          {"restart_clone_each_round", true}, {"rng_seed", 1}}},
        {"sweep",
         {{"knob", "tau"},
          {"values", json::array({0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95})},
          {"seeds_per_point", 3},
          {"accuracy_floor", -1.0}}},
    };
}

namespace {

void reject_unknown_keys(const json& user, const json& schema, const std::string& path) {
    if (!user.is_object()) return;
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (!schema.contains(it.key()))
            throw ConfigError("unknown config key: " + path + it.key());
        if (it.value().is_object()) reject_unknown_keys(it.value(), schema[it.key()], path + it.key() + ".");
    }
}

TrainConfig train_config_from(const json& j) {
    TrainConfig cfg;
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.oe_weight = j.at("oe_weight").get<double>();
    cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

json train_config_to(const TrainConfig& cfg) {
    return json{{"learning_rate", cfg.learning_rate},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"oe_weight", cfg.oe_weight},
                {"rng_seed", cfg.rng_seed}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& user) {
    json schema = defaults_json();
    reject_unknown_keys(user, schema, "");
    json j = schema;
    j.merge_patch(user);

    ExperimentConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.out_dir = j.at("out_dir").get<std::string>();
    cfg.task_preset = j.at("task").at("preset").get<std::string>();
    if (cfg.task_preset != "separable" && cfg.task_preset != "idx")
        throw ConfigError("unknown task preset: " + cfg.task_preset);
    cfg.jbda_seed_size = j.at("task").at("jbda_seed_size").get<std::size_t>();
    const json& idx = j.at("task").at("idx");
    cfg.idx.train_images = idx.at("train_images").get<std::string>();
    cfg.idx.train_labels = idx.at("train_labels").get<std::string>();
    cfg.idx.test_images = idx.at("test_images").get<std::string>();
    cfg.idx.test_labels = idx.at("test_labels").get<std::string>();
    cfg.idx.outlier_images = idx.at("outlier_images").get<std::string>();
    cfg.idx.outlier_labels = idx.at("outlier_labels").get<std::string>();
    cfg.idx.surrogate_images = idx.at("surrogate_images").get<std::string>();
    cfg.idx.surrogate_labels = idx.at("surrogate_labels").get<std::string>();
    if (cfg.task_preset == "idx" && !cfg.idx.configured())
        throw ConfigError("task.preset=idx requires task.idx paths");

    cfg.defender_train = train_config_from(j.at("defender"));
    cfg.misinformer_train = train_config_from(j.at("misinformer"));
    cfg.clone_train = train_config_from(j.at("clone"));

    const json& d = j.at("defense");
    cfg.defense.kind = defense_kind_from_name(d.at("kind").get<std::string>());
    cfg.defense.tau = d.at("tau").get<double>();
    cfg.defense.nu = d.at("nu").get<double>();
    cfg.defense.alpha_pp = d.at("alpha_pp").get<double>();
    cfg.defense.dp_magnitude = d.at("dp_magnitude").get<double>();
    cfg.defense.match_msp_distributions = d.at("match_msp").get<bool>();
    cfg.defense.validate();

    const json& a = j.at("attack");
    cfg.attack.kind = attack_kind_from_name(a.at("kind").get<std::string>());
    cfg.attack.query_budget = a.at("query_budget").get<std::size_t>();
    cfg.attack.surrogate = a.at("surrogate").get<std::string>();
    cfg.attack.seed_size = a.at("seed_size").get<std::size_t>();
    cfg.attack.rounds = a.at("rounds").get<std::size_t>();
    cfg.attack.jbda_step = a.at("jbda_step").get<double>();
    cfg.attack.clone_epochs_per_round = a.at("clone_epochs_per_round").get<std::size_t>();
    cfg.attack.restart_clone_each_round = a.at("restart_clone_each_round").get<bool>();
    cfg.attack.label_strategy =
        label_strategy_from_name(a.at("label_strategy").get<std::string>());
    cfg.attack.rng_seed = a.at("rng_seed").get<std::uint64_t>();
    cfg.attack.validate();

    const json& s = j.at("sweep");
    cfg.sweep_knob = s.at("knob").get<std::string>();
    cfg.sweep_values = s.at("values").get<std::vector<double>>();
    cfg.sweep_seeds_per_point = s.at("seeds_per_point").get<std::size_t>();
    cfg.accuracy_floor = s.at("accuracy_floor").get<double>();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    json j = defaults_json();
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["task"]["preset"] = task_preset;
    j["task"]["jbda_seed_size"] = jbda_seed_size;
    j["task"]["idx"] = {{"train_images", idx.train_images},
                        {"train_labels", idx.train_labels},
                        {"test_images", idx.test_images},
                        {"test_labels", idx.test_labels},
                        {"outlier_images", idx.outlier_images},
                        {"outlier_labels", idx.outlier_labels},
                        {"surrogate_images", idx.surrogate_images},
                        {"surrogate_labels", idx.surrogate_labels}};
    j["defender"] = train_config_to(defender_train);
    j["misinformer"] = train_config_to(misinformer_train);
    j["clone"] = train_config_to(clone_train);
    j["defense"] = {{"kind", defense_kind_name(defense.kind)}, {"tau", defense.tau},
                    {"nu", defense.nu}, {"alpha_pp", defense.alpha_pp},
                    {"dp_magnitude", defense.dp_magnitude},
                    {"match_msp", defense.match_msp_distributions}};
    j["attack"] = {{"kind", attack_kind_name(attack.kind)},
                   {"query_budget", attack.query_budget},
                   {"surrogate", attack.surrogate},
                   {"seed_size", attack.seed_size},
                   {"rounds", attack.rounds},
                   {"jbda_step", attack.jbda_step},
                   {"clone_epochs_per_round", attack.clone_epochs_per_round},
                   {"restart_clone_each_round", attack.restart_clone_each_round},
                   {"label_strategy", label_strategy_name(attack.label_strategy)},
                   {"rng_seed", attack.rng_seed}};
    j["sweep"] = {{"knob", sweep_knob}, {"values", sweep_values},
                  {"seeds_per_point", sweep_seeds_per_point},
                  {"accuracy_floor", accuracy_floor}};
    return j;
}

std::uint64_t ExperimentConfig::config_hash() const {
    // FNV-1a over the canonical dump; nlohmann keeps object keys sorted,
    // so the hash is stable under key reordering in the source file.
    std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string ExperimentConfig::run_dir() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash()));
    return out_dir + "/" + std::string(buf).substr(0, 12);
}

TaskBundle ExperimentConfig::build_task(std::uint64_t task_seed) const {
    if (task_preset == "separable") return make_separable_task(task_seed, jbda_seed_size);
    auto train = load_idx_images(idx.train_images, idx.train_labels, Role::defender_train,
                                 "idx/train");
    auto test =
        load_idx_images(idx.test_images, idx.test_labels, Role::defender_test, "idx/test");
    auto outliers =
        load_idx_images(idx.outlier_images, idx.outlier_labels, Role::outlier, "idx/outliers");
    auto surrogate = load_idx_images(idx.surrogate_images, idx.surrogate_labels,
                                     Role::surrogate, "idx/surrogate");
    std::size_t h = train.input(0).shape()[0], w = train.input(0).shape()[1];
    std::size_t classes = std::max(train.num_classes(), test.num_classes());
    std::vector<std::size_t> seed_idx(std::min(jbda_seed_size, train.size()));
    for (std::size_t i = 0; i < seed_idx.size(); ++i) seed_idx[i] = i;
    constexpr std::size_t kChannels = 4, kKernel = 5;
    std::vector<LayerSpec> arch = {
        LayerSpec::Conv2dSmall(h, w, kChannels, kKernel), LayerSpec::Relu(),
        LayerSpec::Flatten(),
        LayerSpec::Dense(kChannels * (h - kKernel + 1) * (w - kKernel + 1), classes),
        LayerSpec::SoftmaxOutput()};
    // Image-task attacker student: same layout but half the channels;
    // deliberately weaker than the victim's net.
    std::vector<LayerSpec> clone_arch = {
        LayerSpec::Conv2dSmall(h, w, kChannels / 2, kKernel), LayerSpec::Relu(),
        LayerSpec::Flatten(),
        LayerSpec::Dense(kChannels / 2 * (h - kKernel + 1) * (w - kKernel + 1), classes),
        LayerSpec::SoftmaxOutput()};
    auto seed_set = train.select(seed_idx, "idx/seed").with_role(Role::seed, "idx/seed");
    return TaskBundle{std::move(train),     std::move(test),       std::move(outliers),
                      std::move(surrogate), std::move(seed_set),   std::move(arch),
                      std::move(clone_arch), classes};
}

SweepRequest ExperimentConfig::build_sweep_request() const {
    SweepRequest req;
    req.defense = defense.kind == DefenseKind::none ? DefenseKind::am : defense.kind;
    req.knob_name = sweep_knob;
    req.knob_values = sweep_values;
    req.attack = attack;
    req.defender_train = defender_train;
    req.misinformer_train = misinformer_train;
    req.clone_train = clone_train;
    req.base_seed = seed;
    req.seeds_per_point = sweep_seeds_per_point;
    if (accuracy_floor >= 0.0) req.accuracy_floor = accuracy_floor;
    auto cfg = *this;
    req.task_factory = [cfg](std::uint64_t s) { return cfg.build_task(s); };
    return req;
}

namespace {

TrainConfig reseed(TrainConfig cfg, std::uint64_t seed) {
    cfg.rng_seed += seed * 1009;
    return cfg;
}

double mean_msp(Classifier& model, const LabeledDataset& data) {
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) acc += msp(model.forward(data.input(i)));
    return acc / static_cast<double>(data.size());
}

void write_manifest(const ExperimentConfig& cfg, const TaskBundle& task,
                    const std::string& dir) {
    json m;
    auto entry = [&](const LabeledDataset& d) {
        return json{{"name", d.name()},
                    {"role", role_name(d.role())},
                    {"size", d.size()},
                    {"source", cfg.task_preset},
                    {"seed", cfg.seed}};
    };
    m["datasets"] = {entry(task.train), entry(task.test), entry(task.outliers),
                     entry(task.surrogate), entry(task.seed)};
    std::ofstream out(dir + "/manifest.json", std::ios::trunc);
    out << m.dump(2) << "\n";
}

std::string ensure_run_dir(const ExperimentConfig& cfg) {
    std::string dir = cfg.run_dir();
    fs::create_directories(dir);
    return dir;
}

Classifier load_artifact(const std::string& path, const std::string& what) {
    if (!fs::exists(path))
        throw MissingArtifactError("missing " + what + ": " + path +
                                   " (run the producing stage first)");
    return Classifier::load_file(path);
}

}  // namespace

StageMetrics run_train_defender(const ExperimentConfig& cfg) {
    auto task = cfg.build_task(cfg.seed);
    auto dir = ensure_run_dir(cfg);
    write_manifest(cfg, task, dir);
    Classifier defender = train_defender_on(task, reseed(cfg.defender_train, cfg.seed));
    defender.save_file(dir + "/defender.bin");
    StageMetrics m;
    m.test_accuracy = accuracy(defender, task.test);
    m.mean_msp_id = mean_msp(defender, task.test);
    m.mean_msp_outlier = mean_msp(defender, task.outliers);
    return m;
}

StageMetrics run_train_misinformer(const ExperimentConfig& cfg) {
    auto task = cfg.build_task(cfg.seed);
    auto dir = ensure_run_dir(cfg);
    Classifier mis =
        train_misinformer(task.train, task.arch, reseed(cfg.misinformer_train, cfg.seed));
    mis.save_file(dir + "/misinformer.bin");
    StageMetrics m;
    m.test_accuracy = accuracy(mis, task.test);
    m.mean_msp_id = mean_msp(mis, task.test);
    m.mean_msp_outlier = mean_msp(mis, task.outliers);
    return m;
}

AttackMetrics run_attack(const ExperimentConfig& cfg) {
    auto task = cfg.build_task(cfg.seed);
    auto dir = ensure_run_dir(cfg);
    Classifier defender = load_artifact(dir + "/defender.bin", "defender model");
    std::optional<Classifier> mis;
    if (cfg.defense.kind == DefenseKind::am)
        mis = load_artifact(dir + "/misinformer.bin", "misinformation model");
    DefendedModel victim(defender, mis, cfg.defense);
    if (cfg.defense.match_msp_distributions && mis) victim.fit_msp_match(task.train);

    TrainConfig clone_cfg = reseed(cfg.clone_train, cfg.seed);
    HarvestedDataset harvest;
    Classifier clone = [&] {
        if (cfg.attack.kind == AttackKind::knockoff) {
            harvest = knockoff_harvest(victim, task.surrogate, cfg.attack.query_budget,
                                       cfg.attack.rng_seed);
            return train_clone(harvest, task.clone_arch, task.num_classes, clone_cfg,
                               cfg.attack.label_strategy);
        }
        auto res = jbda_attack(victim, task.seed, task.clone_arch, cfg.attack, clone_cfg);
        harvest = std::move(res.harvest);
        return std::move(res.clone);
    }();

    clone.save_file(dir + "/clone.bin");
    harvest.save_file(dir + "/harvest.bin");
    victim.write_audit_csv(dir + "/audit.csv");
    AttackMetrics m;
    m.clone_accuracy = accuracy(clone, task.test);
    m.queries_used = victim.query_count();
    return m;
}

std::string run_sweep(const ExperimentConfig& cfg) {
    auto dir = ensure_run_dir(cfg);
    auto req = cfg.build_sweep_request();
    std::vector<std::string> failures;
    auto points = sweep(req, &failures);
    if (!points.empty()) {
        write_tradeoff_csv(points, dir + "/tradeoff.csv");
        write_tradeoff_csv(mean_over_seeds(points), dir + "/tradeoff_mean.csv");
        write_tradeoff_svg(mean_over_seeds(points), dir + "/tradeoff.svg");
    }
    if (!failures.empty())
        throw std::runtime_error("sweep finished with " + std::to_string(failures.size()) +
                                 " failed points; first: " + failures.front());
    return dir;
}

void run_report(const ExperimentConfig& cfg) {
    auto dir = cfg.run_dir();
    std::string csv = dir + "/tradeoff.csv";
    if (!fs::exists(csv)) throw MissingArtifactError("missing sweep output: " + csv);
    auto points = read_tradeoff_csv(csv);
    write_tradeoff_svg(mean_over_seeds(points), dir + "/tradeoff.svg");
}

}  // namespace amlab
