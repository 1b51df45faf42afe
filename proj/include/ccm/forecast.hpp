#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ccm/corrmodels.hpp"
#include "ccm/data.hpp"
#include "ccm/types.hpp"

namespace ccm {

struct RollingScheme {
    Index window_length = 0;  // fixed estimation sample size
    Index block_length = 0;   // forecasts per iteration
    Index n_blocks = 0;

    Index total_forecasts() const { return block_length * n_blocks; }
    /// Throws std::invalid_argument when the scheme is malformed or does
    /// not fit into t_obs observations.
    void validate(Index t_obs) const;
};

struct ForecastRun {
    ModelSpec model;
    std::vector<std::string> dates;  // forecast target dates
    std::vector<Matrix> forecasts;   // H_hat_tau, symmetric PD
    std::vector<Matrix> realized;    // C_tau = r_tau r_tau'
};

struct ForecastOptions {
    std::uint64_t seed = 0;
    bool garch_must_converge = false;  // propagate first-step failures
};

/// Rolling one-step-ahead covariance forecasts: per block, both estimation
/// steps are refitted on the window, then the variance and correlation
/// recursions advance on realized data with frozen parameters. Exogenous
/// values and the regime dummy enter forecast steps at tau - 1.
ForecastRun rolling_forecast(const ModelSpec& spec, const AlignedData& data,
                             const RollingScheme& scheme,
                             const ForecastOptions& options = {});

/// QLike: (1/T_h) sum_tau [ ln|H_tau| + trace(H_tau^{-1} C_tau) ].
double qlike_loss(const ForecastRun& run);
Vector qlike_losses(const ForecastRun& run);

/// Realized variance of the global-minimum-variance portfolio built from
/// forecasts, with weights sqrt(n) H^{-1} j / (j' H^{-1} j) and per-step
/// loss v' H v, as the formulation prints it.
double gmv_loss(const ForecastRun& run);
Vector gmv_losses(const ForecastRun& run);

enum class McsStatistic { T_R, T_SQ };

struct McsOptions {
    McsStatistic statistic = McsStatistic::T_R;
    double alpha = 0.05;
    int n_boot = 5000;
    Index block_len = 12;  // circular bootstrap block length
    std::uint64_t seed = 0;
};

struct MCSResult {
    // Full elimination ladder, first-removed first; p-values are the
    // running maxima of the equal-predictive-ability p-values, so the
    // survivor set is { model : p >= alpha } at any alpha.
    std::vector<std::pair<std::string, double>> ladder;
    std::vector<std::string> survivors;
    McsStatistic statistic_kind = McsStatistic::T_R;
    double alpha = 0.05;
};

/// Model confidence set by sequential elimination with a circular block
/// bootstrap. losses[i] is the per-forecast loss sequence of names[i].
MCSResult mcs(const std::vector<std::string>& names, const std::vector<Vector>& losses,
              const McsOptions& options);

}  // namespace ccm
