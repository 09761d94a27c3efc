// Command-line entry point: simulate, optimize, verify.

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "seirdiff/driver.hpp"
#include "seirdiff/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"SEIR reaction-diffusion simulation and optimal control of the "
                 "per-region diffusion coefficients"};
    app.set_version_flag("--version", std::string(seirdiff::version));
    app.require_subcommand(1);

    std::string config_path;
    std::string check;
    seirdiff::CommandOptions opts;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "scenario configuration (JSON)")->required();
        cmd->add_option("--output-dir", opts.output_dir, "override the output directory");
        cmd->add_option("--seed", seed, "override the random seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_flag("--quiet", opts.quiet, "suppress progress and warning messages");
    };

    CLI::App* sim = app.add_subcommand("simulate", "integrate the state system");
    add_common(sim);
    CLI::App* opt = app.add_subcommand("optimize", "projected-gradient control optimization");
    add_common(opt);
    CLI::App* ver = app.add_subcommand("verify", "run a verification check");
    add_common(ver);
    ver->add_option("--check", check, "gradient | duality | conservation | ode | contdep")
        ->required();

    CLI11_PARSE(app, argc, argv);
    if (seed_set) opts.seed = seed;

    if (sim->parsed()) return seirdiff::cmd_simulate(config_path, opts);
    if (opt->parsed()) return seirdiff::cmd_optimize(config_path, opts);
    return seirdiff::cmd_verify(config_path, check, opts);
}
