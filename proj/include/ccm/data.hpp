#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ccm/types.hpp"

namespace ccm {

/// Date-indexed T x N matrix of daily returns (percent log-returns).
struct ReturnPanel {
    std::vector<std::string> dates;
    Matrix returns;  // T x N
    std::vector<std::string> asset_names;

    Index rows() const { return returns.rows(); }
    Index cols() const { return returns.cols(); }

    /// Throws std::invalid_argument when an invariant is broken:
    /// strictly increasing dates, all entries finite, T >= 2, N >= 2.
    void validate() const;

    /// Index of the first date >= d, panel.rows() when none.
    Index lower_bound(const std::string& d) const;
    /// Index one past the last date <= d.
    Index upper_bound(const std::string& d) const;
};

/// Non-negative exogenous driver aligned to a panel, with its sample mean
/// over the estimation window cached for targeting arithmetic.
struct ExogenousSeries {
    std::vector<std::string> dates;
    Vector values;
    double sample_mean = 0.0;

    void validate() const;
    ExogenousSeries slice(Index begin, Index len) const;
};

/// Binary policy-regime calendar aligned to a panel.
struct RegimeCalendar {
    std::vector<std::string> dates;
    std::vector<int> dummy;                // 0/1 per trading day
    std::vector<std::string> switch_dates; // trading days where dummy changes

    void validate() const;
    RegimeCalendar slice(Index begin, Index len) const;
};

/// Unaligned dated series as read from disk.
struct DatedSeries {
    std::vector<std::string> dates;
    Vector values;
};

/// Regime calendar input: value in force at the start of the sample plus
/// dated switches (each switch names the regime that starts on that date).
struct CalendarSpec {
    int initial_regime = 0;
    std::vector<std::pair<std::string, int>> switches;
};

struct LoadOptions {
    char delimiter = ',';
    std::string date_column;                 // empty: first column
    std::vector<std::string> value_columns;  // empty: all non-date columns
};

struct LoadedPanel {
    ReturnPanel panel;
    std::size_t dropped_rows = 0;  // rows discarded for missing/bad values
};

/// Reads a delimited file into a panel. Rows are sorted by date; rows with
/// any missing or unparseable value are dropped and counted.
LoadedPanel load_panel(const std::string& path, const LoadOptions& options = {});

/// Percent log-returns: r_t = 100 * (ln p_t - ln p_{t-1}). Output has T-1 rows.
ReturnPanel log_returns(const ReturnPanel& prices);

struct AlignedData {
    ReturnPanel panel;
    ExogenousSeries exog;
    RegimeCalendar calendar;
};

/// Aligns the exogenous series and regime calendar onto the panel's dates.
/// Exogenous gaps are filled by the last observation carried forward; the
/// dummy switches on the first trading day >= each switch date.
AlignedData align(const ReturnPanel& panel, const DatedSeries& exog,
                  const CalendarSpec& calendar);

struct RollingCorrelation {
    std::vector<std::string> dates;  // window end dates
    Vector values;                   // NaN where a window is degenerate
};

/// Pearson correlation of columns (i, j) over a trailing window.
/// Entry t covers rows [t - window + 1, t]; output length is T - window + 1.
RollingCorrelation rolling_correlation(const ReturnPanel& panel, Index i, Index j,
                                       Index window);

struct SubsampleCorr {
    Matrix correlation;
    double exog_mean = 0.0;  // NaN when no exogenous series was supplied
    Index n_obs = 0;
};

/// Sample correlation matrix over an inclusive date range, with the mean of
/// the exogenous series over the same rows when one is supplied.
SubsampleCorr subsample_correlations(const ReturnPanel& panel, const std::string& from,
                                     const std::string& to,
                                     const ExogenousSeries* exog = nullptr);

}  // namespace ccm
