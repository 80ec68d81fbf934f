#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gbsde/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear evaluations and BSDEs on a binomial lattice"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<long long> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;

    for (const char* name : {"solve", "properties", "dm", "fixedpoint", "recover", "convergence"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--out", out_dir, "Override the output directory");
        sub->add_option("--threads", threads, "Worker threads");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : gbsde::exit_config_invalid;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    gbsde::ExperimentConfig config;
    try {
        config = gbsde::load_config(config_path);
        if (seed) {
            if (*seed < 0) throw gbsde::ConfigError("--seed must be >= 0");
            config.seed = static_cast<std::uint64_t>(*seed);
            config.raw["seed"] = *seed;
        }
        if (out_dir) config.output_dir = *out_dir;
        if (threads) {
            if (*threads < 1) throw gbsde::ConfigError("--threads must be >= 1");
            config.threads = *threads;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return gbsde::exit_config_invalid;
    }
    return gbsde::run_command(command, config, std::cerr);
}
