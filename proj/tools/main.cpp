#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "app/commands.hpp"

int main(int argc, char** argv) {
    using namespace perisolve::app;

    CLI::App cli{"Time-periodic solutions of degenerate implicit evolution inclusions"};
    cli.require_subcommand(1);

    std::string output_dir;
    std::uint64_t seed = 0;
    bool quiet = false;
    cli.add_option("--output-dir", output_dir, "Directory for artifacts (default: $PERISOLVE_OUTPUT_DIR)");
    auto* seed_opt = cli.add_option("--seed", seed, "Seed for probe-based checks");
    cli.add_flag("--quiet", quiet, "Only print errors");

    std::string config;
    auto* run = cli.add_subcommand("run", "Solve an instance and write trajectories, report and convergence table");
    run->add_option("config", config, "Instance file")->required();
    auto* check = cli.add_subcommand("check", "Run the hypothesis checks on an instance");
    check->add_option("config", config, "Instance file")->required();
    auto* sweep = cli.add_subcommand("sweep", "Run an instance once per value of one config key");
    std::string param;
    std::vector<std::string> values;
    sweep->add_option("config", config, "Instance file")->required();
    sweep->add_option("--param", param, "Config key to vary")->required();
    sweep->add_option("--values", values, "Comma-separated values")->delimiter(',')->expected(0, -1);

    // Global flags are accepted after the subcommand as well.
    for (auto* sub : {run, check, sweep}) sub->fallthrough();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    CommandOptions options;
    if (!output_dir.empty()) options.output_dir = output_dir;
    if (seed_opt->count() > 0) options.seed = seed;
    options.quiet = quiet;

    try {
        if (*run) return run_command(config, options, std::cout, std::cerr);
        if (*check) return check_command(config, options, std::cout, std::cerr);
        return sweep_command(config, param, values, options, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_nonconvergence;
    }
}
