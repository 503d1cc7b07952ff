// Experiment orchestration CLI.
//
// Subcommands: train-defender, train-misinformer, attack, sweep, report,
// print-config. Exit codes: 0 success, 2 configuration error, 3 missing
// artifact, 4 runtime failure.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "amlab/experiment.hpp"
#include "amlab/idx.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitRuntime = 4;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

amlab::ExperimentConfig load_config(const CommonOpts& opts) {
    auto cfg = opts.config_path.empty()
                   ? amlab::ExperimentConfig::from_json(amlab::ExperimentConfig::defaults_json())
                   : amlab::ExperimentConfig::from_file(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out) cfg.out_dir = *opts.out;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Experiment config file (JSON)");
    cmd->add_option("--seed", opts.seed, "Override the global seed");
    cmd->add_option("--out", opts.out, "Override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-stealing attack/defense laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string command;
    for (const char* name : {"train-defender", "train-misinformer", "attack", "sweep",
                             "report", "print-config"}) {
        auto* sub = app.add_subcommand(name);
        add_common(sub, opts);
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        auto cfg = load_config(opts);
        if (command == "print-config") {
            std::cout << cfg.to_json().dump(2) << "\n";
        } else if (command == "train-defender") {
            auto m = amlab::run_train_defender(cfg);
            std::printf("run_dir %s\n", cfg.run_dir().c_str());
            std::printf("defender test_accuracy %.4f\n", m.test_accuracy);
            std::printf("defender mean_msp_id %.4f\n", m.mean_msp_id);
            std::printf("defender mean_msp_outlier %.4f\n", m.mean_msp_outlier);
        } else if (command == "train-misinformer") {
            auto m = amlab::run_train_misinformer(cfg);
            std::printf("run_dir %s\n", cfg.run_dir().c_str());
            std::printf("misinformer test_accuracy %.4f\n", m.test_accuracy);
        } else if (command == "attack") {
            auto m = amlab::run_attack(cfg);
            std::printf("run_dir %s\n", cfg.run_dir().c_str());
            std::printf("clone test_accuracy %.4f\n", m.clone_accuracy);
            std::printf("victim queries %zu\n", m.queries_used);
        } else if (command == "sweep") {
            auto dir = amlab::run_sweep(cfg);
            std::printf("report_dir %s\n", dir.c_str());
        } else if (command == "report") {
            amlab::run_report(cfg);
            std::printf("report_dir %s\n", cfg.run_dir().c_str());
        }
    } catch (const amlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const amlab::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const amlab::MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kExitMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
