#include "ccm/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ccm/csv.hpp"
#include "ccm/stats.hpp"

namespace ccm {

namespace {

void check_dates_increasing(const std::vector<std::string>& dates, const char* what) {
    for (std::size_t t = 1; t < dates.size(); ++t)
        if (!(dates[t - 1] < dates[t]))
            throw std::invalid_argument(std::string(what) +
                                        ": dates must be strictly increasing (" +
                                        dates[t - 1] + " vs " + dates[t] + ")");
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        if (used != s.size()) return false;
    } catch (const std::exception&) {
        return false;
    }
    return std::isfinite(out);
}

}  // namespace

void ReturnPanel::validate() const {
    if (rows() < 2 || cols() < 2)
        throw std::invalid_argument("ReturnPanel: need T >= 2 and N >= 2");
    if (static_cast<Index>(dates.size()) != rows())
        throw std::invalid_argument("ReturnPanel: date/row count mismatch");
    if (static_cast<Index>(asset_names.size()) != cols())
        throw std::invalid_argument("ReturnPanel: asset name count mismatch");
    check_dates_increasing(dates, "ReturnPanel");
    if (!returns.allFinite())
        throw std::invalid_argument("ReturnPanel: non-finite return value");
}

Index ReturnPanel::lower_bound(const std::string& d) const {
    return std::lower_bound(dates.begin(), dates.end(), d) - dates.begin();
}

Index ReturnPanel::upper_bound(const std::string& d) const {
    return std::upper_bound(dates.begin(), dates.end(), d) - dates.begin();
}

void ExogenousSeries::validate() const {
    if (static_cast<Index>(dates.size()) != values.size())
        throw std::invalid_argument("ExogenousSeries: date/value count mismatch");
    check_dates_increasing(dates, "ExogenousSeries");
    if ((values.array() < 0.0).any() || !values.allFinite())
        throw std::invalid_argument("ExogenousSeries: values must be finite and >= 0");
}

ExogenousSeries ExogenousSeries::slice(Index begin, Index len) const {
    ExogenousSeries out;
    out.dates.assign(dates.begin() + begin, dates.begin() + begin + len);
    out.values = values.segment(begin, len);
    out.sample_mean = out.values.mean();
    return out;
}

void RegimeCalendar::validate() const {
    if (dates.size() != dummy.size())
        throw std::invalid_argument("RegimeCalendar: date/dummy count mismatch");
    check_dates_increasing(dates, "RegimeCalendar");
    for (int d : dummy)
        if (d != 0 && d != 1)
            throw std::invalid_argument("RegimeCalendar: dummy values must be 0 or 1");
}

RegimeCalendar RegimeCalendar::slice(Index begin, Index len) const {
    RegimeCalendar out;
    out.dates.assign(dates.begin() + begin, dates.begin() + begin + len);
    out.dummy.assign(dummy.begin() + begin, dummy.begin() + begin + len);
    for (Index t = 1; t < len; ++t)
        if (out.dummy[t] != out.dummy[t - 1]) out.switch_dates.push_back(out.dates[t]);
    return out;
}

LoadedPanel load_panel(const std::string& path, const LoadOptions& options) {
    const Table table = read_table(path, options.delimiter);
    if (table.header.size() < 3)
        throw std::invalid_argument("load_panel: need a date column and >= 2 value columns");

    int date_col = options.date_column.empty() ? 0 : table.column(options.date_column);
    if (date_col < 0)
        throw std::invalid_argument("load_panel: date column '" + options.date_column +
                                    "' not found");

    std::vector<int> value_cols;
    std::vector<std::string> names;
    if (options.value_columns.empty()) {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (static_cast<int>(c) == date_col) continue;
            value_cols.push_back(static_cast<int>(c));
            names.push_back(table.header[c]);
        }
    } else {
        for (const auto& name : options.value_columns) {
            const int c = table.column(name);
            if (c < 0)
                throw std::invalid_argument("load_panel: column '" + name + "' not found");
            value_cols.push_back(c);
            names.push_back(name);
        }
    }
    if (value_cols.size() < 2)
        throw std::invalid_argument("load_panel: fewer than 2 asset columns");

    struct Row {
        std::string date;
        std::vector<double> values;
    };
    std::vector<Row> rows;
    std::size_t dropped = 0;
    for (const auto& fields : table.rows) {
        if (fields.size() <= static_cast<std::size_t>(date_col)) {
            ++dropped;
            continue;
        }
        const std::string& date = fields[date_col];
        if (!is_iso_date(date))
            throw std::invalid_argument("load_panel: unparseable date '" + date + "'");
        Row row;
        row.date = date;
        bool ok = true;
        for (int c : value_cols) {
            double v = 0.0;
            if (fields.size() <= static_cast<std::size_t>(c) ||
                !parse_double(fields[c], v)) {
                ok = false;
                break;
            }
            row.values.push_back(v);
        }
        if (!ok) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw std::invalid_argument("load_panel: no complete rows after cleaning");

    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t t = 1; t < rows.size(); ++t)
        if (rows[t].date == rows[t - 1].date)
            throw std::invalid_argument("load_panel: duplicate date " + rows[t].date);

    LoadedPanel out;
    out.dropped_rows = dropped;
    out.panel.asset_names = std::move(names);
    out.panel.dates.reserve(rows.size());
    out.panel.returns.resize(static_cast<Index>(rows.size()),
                             static_cast<Index>(value_cols.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        out.panel.dates.push_back(rows[t].date);
        for (std::size_t c = 0; c < rows[t].values.size(); ++c)
            out.panel.returns(static_cast<Index>(t), static_cast<Index>(c)) =
                rows[t].values[c];
    }
    out.panel.validate();
    return out;
}

ReturnPanel log_returns(const ReturnPanel& prices) {
    prices.validate();
    if ((prices.returns.array() <= 0.0).any())
        throw std::invalid_argument("log_returns: non-positive price");
    ReturnPanel out;
    out.asset_names = prices.asset_names;
    out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
    const Matrix logp = prices.returns.array().log().matrix();
    out.returns = 100.0 * (logp.bottomRows(prices.rows() - 1) -
                           logp.topRows(prices.rows() - 1));
    out.validate();
    return out;
}

AlignedData align(const ReturnPanel& panel, const DatedSeries& exog,
                  const CalendarSpec& calendar) {
    panel.validate();
    if (exog.dates.size() != static_cast<std::size_t>(exog.values.size()))
        throw std::invalid_argument("align: exogenous date/value mismatch");
    check_dates_increasing(exog.dates, "align: exogenous series");

    AlignedData out;
    out.panel = panel;

    // Last observation carried forward onto trading days.
    out.exog.dates = panel.dates;
    out.exog.values.resize(panel.rows());
    std::size_t k = 0;
    double last = std::numeric_limits<double>::quiet_NaN();
    for (Index t = 0; t < panel.rows(); ++t) {
        while (k < exog.dates.size() && exog.dates[k] <= panel.dates[t]) {
            last = exog.values(static_cast<Index>(k));
            ++k;
        }
        if (std::isnan(last))
            throw std::invalid_argument(
                "align: exogenous series starts after the panel (nothing to carry "
                "forward at " +
                panel.dates[t] + ")");
        out.exog.values(t) = last;
    }
    out.exog.sample_mean = out.exog.values.mean();
    out.exog.validate();

    auto switches = calendar.switches;
    std::sort(switches.begin(), switches.end());
    out.calendar.dates = panel.dates;
    out.calendar.dummy.resize(panel.dates.size());
    int regime = calendar.initial_regime;
    std::size_t s = 0;
    int prev = -1;
    for (Index t = 0; t < panel.rows(); ++t) {
        while (s < switches.size() && switches[s].first <= panel.dates[t]) {
            regime = switches[s].second;
            ++s;
        }
        out.calendar.dummy[t] = regime;
        if (prev >= 0 && regime != prev) out.calendar.switch_dates.push_back(panel.dates[t]);
        prev = regime;
    }
    out.calendar.validate();
    return out;
}

RollingCorrelation rolling_correlation(const ReturnPanel& panel, Index i, Index j,
                                       Index window) {
    panel.validate();
    if (i < 0 || j < 0 || i >= panel.cols() || j >= panel.cols())
        throw std::invalid_argument("rolling_correlation: asset index out of range");
    if (window < 2 || window > panel.rows())
        throw std::invalid_argument("rolling_correlation: window must be in [2, T]");

    const Index n_out = panel.rows() - window + 1;
    RollingCorrelation out;
    out.values.resize(n_out);
    out.dates.assign(panel.dates.begin() + (window - 1), panel.dates.end());
    for (Index t = 0; t < n_out; ++t) {
        out.values(t) = pearson_correlation(panel.returns.col(i).segment(t, window),
                                            panel.returns.col(j).segment(t, window));
    }
    return out;
}

SubsampleCorr subsample_correlations(const ReturnPanel& panel, const std::string& from,
                                     const std::string& to, const ExogenousSeries* exog) {
    panel.validate();
    const Index begin = panel.lower_bound(from);
    const Index end = panel.upper_bound(to);
    if (end <= begin) throw std::invalid_argument("subsample_correlations: empty range");
    const Index len = end - begin;
    if (len < 3)
        throw std::invalid_argument("subsample_correlations: range shorter than 3 rows");

    SubsampleCorr out;
    out.n_obs = len;
    out.correlation = sample_correlation(panel.returns.middleRows(begin, len));
    if (exog) {
        if (exog->values.size() != panel.rows())
            throw std::invalid_argument("subsample_correlations: exogenous series not aligned");
        out.exog_mean = exog->values.segment(begin, len).mean();
    } else {
        out.exog_mean = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

}  // namespace ccm
