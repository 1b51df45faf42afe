#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccm/corrmodels.hpp"
#include "ccm/forecast.hpp"
#include "ccm/types.hpp"

namespace ccm {

/// Declarative run configuration; command-line flags override single fields.
struct RunConfig {
    std::string returns_path;
    std::string exogenous_path;
    std::string calendar_path;
    char delimiter = ',';
    bool prices_are_levels = false;  // apply log_returns to the input panel
    std::string date_column;

    std::vector<ModelSpec> models;  // defaults to all nine
    std::string estimation_start;   // optional ISO dates bounding estimation
    std::string estimation_end;

    RollingScheme scheme{2049, 60, 10};
    double mcs_alpha = 0.05;
    int mcs_n_boot = 5000;
    Index mcs_block_len = 12;
    std::vector<McsStatistic> mcs_statistics{McsStatistic::T_R, McsStatistic::T_SQ};

    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = "out";
    Index rolling_corr_window = 22;
    std::vector<std::string> plot_pair;  // two asset names; default first/last
};

RunConfig load_config(const std::string& path);

struct CliOverrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};
void apply_overrides(RunConfig& config, const CliOverrides& overrides);

// Exit codes: 0 success, 1 numerical failure, 2 usage/config error.
int run_estimate(const RunConfig& config);
int run_test(const RunConfig& config);
int run_forecast(const RunConfig& config);

struct SimulateCli {
    std::string model = "DCC-TUPE";
    Index t_obs = 2650;
    Index n_assets = 5;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
};
int run_simulate(const SimulateCli& cli);

/// Default data-generating parameters per family, used by the simulate
/// command and handy for demos.
SimConfig default_sim_config(const ModelSpec& spec, Index n_assets);

}  // namespace ccm
