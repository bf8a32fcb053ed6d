#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dckd/config.hpp"
#include "dckd/errors.hpp"
#include "dckd/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Collective knowledge distillation lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed = 0;
    int epochs = 0;

    const char* const kSubcommands[][2] = {
        {"train-teacher", "Train and checkpoint the teacher network per seed"},
        {"train-dckd", "Train the student group arms (baseline-ce, kd-only, dckd)"},
        {"train-edckd", "Distill a new group from the frozen dckd student ensemble"},
        {"train-ensembled", "Distill a single student from the frozen dckd ensemble"},
        {"eval", "Recompute validation top-1/top-5 for every checkpoint"},
        {"metrics", "Mean correlation numbers and class accumulation profiles"},
        {"gradcheck", "Finite-difference audit of the training objective"},
        {"ablate", "Sweep direction x method x group size over the seed list"},
    };
    for (const auto& [name, description] : kSubcommands) {
        CLI::App* sub = app.add_subcommand(name, description);
        sub->add_option("--config", config_path, "Key=value config file");
        sub->add_option("--out", out_dir, "Output directory override");
        sub->add_option("--seed", seed, "Single-seed override of the config seed list");
        sub->add_option("--epochs", epochs, "Epoch count override");
    }

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    try {
        dckd::ExperimentConfig cfg =
            config_path.empty() ? dckd::ExperimentConfig{} : dckd::parse_config(config_path);
        if (sub->count("--out") > 0) {
            if (out_dir.empty()) throw dckd::ConfigError("out directory must not be empty");
            cfg.out_dir = out_dir;
        }
        if (sub->count("--seed") > 0) {
            cfg.seeds = {seed};
            cfg.distill.seed = seed;
        }
        if (sub->count("--epochs") > 0) {
            if (epochs < 1) throw dckd::ConfigError("epochs override must be >= 1");
            cfg.distill.epochs = epochs;
        }
        return dckd::run_subcommand(sub->get_name(), cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
