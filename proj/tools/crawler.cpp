// crawler: simulate, sweep and inspect the excitable crawler closed loop.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crawler/harness/commands.hpp"

namespace h = crawler::harness;

int main(int argc, char** argv) {
    CLI::App app{"Excitable soft-crawler simulation and analysis"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    bool quiet = false;
    app.add_option("--config", config, "TOML configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides [output].dir)");
    app.add_flag("--quiet", quiet, "suppress the printed summary");

    auto* simulate = app.add_subcommand("simulate", "integrate one configuration and analyze it");
    auto* sweep = app.add_subcommand("sweep", "run a grid of group values");
    auto* scales = app.add_subcommand("scales", "print scales and groups for dimensional params");
    app.add_subcommand("selfcheck", "run the built-in oracle checks");
    for (auto* sub : {simulate, sweep, scales}) {
        sub->add_option("file", config, "TOML configuration file")->check(CLI::ExistingFile);
        sub->add_option("--config", config, "TOML configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--quiet", quiet, "suppress the printed summary");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : h::kExitConfigError;
    }

    try {
        if (app.got_subcommand("selfcheck")) return h::cmd_selfcheck(std::cout, quiet);

        if (app.got_subcommand("sweep")) {
            if (config.empty()) throw h::ConfigError("sweep needs a sweep file");
            h::SweepSpec spec = h::load_sweep_spec(config);
            if (!out_dir.empty()) spec.base.out_dir = out_dir;
            return h::cmd_sweep(spec, std::cout, quiet);
        }

        h::RunConfig cfg;
        if (!config.empty()) cfg = h::load_run_config(config);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (app.got_subcommand("scales")) return h::cmd_scales(cfg, std::cout);
        return h::cmd_simulate(cfg, std::cout, quiet);
    } catch (const h::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return h::kExitConfigError;
    } catch (const crawler::IntegrationError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return h::kExitNumericalFailure;
    }
}
