// ccm — conditional correlation modeling toolkit.
//
// Subcommands: estimate, test, forecast, simulate. All runs are driven by
// a declarative JSON config; --out/--seed/--threads override single fields.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ccm/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"conditional correlation models: estimation, testing, forecasting"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    bool out_set = false, seed_set = false, threads_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "path to the JSON run config")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)")
            ->each([&](const std::string&) { out_set = true; });
        cmd->add_option("--seed", seed, "random seed (overrides config)")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "worker threads (overrides config)")
            ->each([&](const std::string&) { threads_set = true; });
    };

    CLI::App* cmd_estimate =
        app.add_subcommand("estimate", "fit all requested correlation models");
    add_common(cmd_estimate);
    CLI::App* cmd_test =
        app.add_subcommand("test", "information criteria and specification tests");
    add_common(cmd_test);
    CLI::App* cmd_forecast =
        app.add_subcommand("forecast", "rolling forecasts, losses and the MCS");
    add_common(cmd_forecast);

    ccm::SimulateCli sim;
    CLI::App* cmd_simulate =
        app.add_subcommand("simulate", "write a synthetic dataset from a known DGP");
    cmd_simulate->add_option("--model", sim.model, "data-generating model name");
    cmd_simulate->add_option("--T", sim.t_obs, "number of trading days");
    cmd_simulate->add_option("--N", sim.n_assets, "number of assets");
    cmd_simulate->add_option("--seed", sim.seed, "random seed");
    cmd_simulate->add_option("--out", sim.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    if (cmd_simulate->parsed()) return ccm::run_simulate(sim);

    ccm::RunConfig config;
    try {
        config = ccm::load_config(config_path);
        ccm::CliOverrides overrides;
        if (out_set) overrides.out_dir = out_dir;
        if (seed_set) overrides.seed = seed;
        if (threads_set) overrides.threads = threads;
        ccm::apply_overrides(config, overrides);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    }

    if (cmd_estimate->parsed()) return ccm::run_estimate(config);
    if (cmd_test->parsed()) return ccm::run_test(config);
    if (cmd_forecast->parsed()) return ccm::run_forecast(config);
    return 2;
}
