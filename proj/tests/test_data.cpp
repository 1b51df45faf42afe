#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ccm/data.hpp"
#include "ccm/stats.hpp"

using namespace ccm;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream file(path);
    file << content;
    return path.string();
}

ReturnPanel make_panel(const std::vector<std::string>& dates, const Matrix& returns) {
    ReturnPanel panel;
    panel.dates = dates;
    panel.returns = returns;
    for (Index i = 0; i < returns.cols(); ++i)
        panel.asset_names.push_back("A" + std::to_string(i + 1));
    return panel;
}

}  // namespace

TEST_CASE("load_panel drops incomplete rows and counts them") {
    const std::string path = write_temp(
        "ccm_panel.csv",
        "date,X,Y\n"
        "2020-01-06,0.1,0.2\n"
        "2020-01-07,,0.3\n"
        "2020-01-08,0.2,0.1\n"
        "2020-01-09,-0.4,0.0\n"
        "2020-01-10,0.5,-0.2\n");
    const LoadedPanel loaded = load_panel(path);
    CHECK(loaded.panel.rows() == 4);
    CHECK(loaded.dropped_rows == 1);
    CHECK(loaded.panel.asset_names == std::vector<std::string>{"X", "Y"});
}

TEST_CASE("load_panel sorts rows by date") {
    const std::string shuffled = write_temp("ccm_shuffled.csv",
                                            "date,X,Y\n"
                                            "2020-01-08,3,30\n"
                                            "2020-01-06,1,10\n"
                                            "2020-01-07,2,20\n");
    const std::string sorted = write_temp("ccm_sorted.csv",
                                          "date,X,Y\n"
                                          "2020-01-06,1,10\n"
                                          "2020-01-07,2,20\n"
                                          "2020-01-08,3,30\n");
    const LoadedPanel a = load_panel(shuffled);
    const LoadedPanel b = load_panel(sorted);
    CHECK(a.panel.dates == b.panel.dates);
    CHECK((a.panel.returns - b.panel.returns).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical columns have sample correlation one") {
    const std::string path = write_temp("ccm_ident.csv",
                                        "date,X,Y\n"
                                        "2020-01-06,1,1\n"
                                        "2020-01-07,-2,-2\n"
                                        "2020-01-08,0.5,0.5\n"
                                        "2020-01-09,3,3\n");
    const LoadedPanel loaded = load_panel(path);
    const SubsampleCorr corr =
        subsample_correlations(loaded.panel, "2020-01-06", "2020-01-09");
    CHECK(corr.correlation(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("load_panel error paths") {
    const std::string bad_date = write_temp("ccm_baddate.csv",
                                            "date,X,Y\n"
                                            "06/01/2020,1,2\n"
                                            "2020-01-07,1,2\n");
    CHECK_THROWS_AS(load_panel(bad_date), std::invalid_argument);
    const std::string one_asset = write_temp("ccm_oneasset.csv",
                                             "date,X\n"
                                             "2020-01-06,1\n");
    CHECK_THROWS_AS(load_panel(one_asset), std::invalid_argument);
    const std::string all_bad = write_temp("ccm_allbad.csv",
                                           "date,X,Y\n"
                                           "2020-01-06,,2\n"
                                           "2020-01-07,1,\n");
    CHECK_THROWS_AS(load_panel(all_bad), std::invalid_argument);
}

TEST_CASE("log returns formula and domain") {
    Matrix prices(3, 2);
    prices << 100.0, 100.0, 100.0, 105.0, 100.0, 103.0;
    const ReturnPanel panel =
        make_panel({"2020-01-06", "2020-01-07", "2020-01-08"}, prices);
    const ReturnPanel returns = log_returns(panel);
    CHECK(returns.rows() == 2);
    CHECK(returns.returns(0, 0) == doctest::Approx(0.0));
    CHECK(returns.returns(0, 1) == doctest::Approx(100.0 * std::log(1.05)));

    Matrix bad = prices;
    bad(2, 0) = 0.0;
    CHECK_THROWS_AS(log_returns(make_panel(panel.dates, bad)), std::invalid_argument);
}

TEST_CASE("align carries exogenous values forward and switches on trading days") {
    Matrix returns = Matrix::Zero(5, 2);
    returns.col(0) << 0.1, -0.2, 0.3, 0.0, 0.2;
    returns.col(1) << 0.0, 0.1, -0.1, 0.2, -0.3;
    // Mon 2020-01-06 .. Fri 2020-01-10.
    const ReturnPanel panel = make_panel(
        {"2020-01-06", "2020-01-07", "2020-01-08", "2020-01-09", "2020-01-10"}, returns);

    DatedSeries exog;  // Wednesday missing
    exog.dates = {"2020-01-06", "2020-01-07", "2020-01-09", "2020-01-10"};
    exog.values. resize(4);
    exog.values << 0.10, 0.25, 0.40, 0.15;

    CalendarSpec calendar;
    calendar.initial_regime = 0;
    calendar.switches = {{"2020-01-04", 1}};  // Saturday

    const AlignedData aligned = align(panel, exog, calendar);
    CHECK(aligned.panel.dates == aligned.exog.dates);
    CHECK(aligned.panel.dates == aligned.calendar.dates);
    CHECK(aligned.exog.values(2) == doctest::Approx(0.25));  // Wed = Tue value
    for (int d : aligned.calendar.dummy) CHECK(d == 1);      // switched before sample

    CalendarSpec weekend_switch;
    weekend_switch.initial_regime = 0;
    weekend_switch.switches = {{"2020-01-08", 1}};
    const AlignedData mid = align(panel, exog, weekend_switch);
    CHECK(mid.calendar.dummy == std::vector<int>{0, 0, 1, 1, 1});
    CHECK(mid.calendar.switch_dates == std::vector<std::string>{"2020-01-08"});

    CalendarSpec none;
    const AlignedData flat = align(panel, exog, none);
    for (int d : flat.calendar.dummy) CHECK(d == 0);

    DatedSeries late;
    late.dates = {"2020-01-08"};
    late.values.resize(1);
    late.values << 1.0;
    CHECK_THROWS_AS(align(panel, late, none), std::invalid_argument);
}

TEST_CASE("rolling correlation matches a brute-force Pearson oracle") {
    std::mt19937 rng(101);
    std::normal_distribution<double> gauss;
    const Index t_obs = 100;
    Matrix returns(t_obs, 2);
    for (Index t = 0; t < t_obs; ++t) {
        returns(t, 0) = gauss(rng);
        returns(t, 1) = 0.4 * returns(t, 0) + gauss(rng);
    }
    std::vector<std::string> dates;
    for (Index t = 0; t < t_obs; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "2020-%02d-%02d", 1 + static_cast<int>(t / 28),
                      1 + static_cast<int>(t % 28));
        dates.push_back(buf);
    }
    const ReturnPanel panel = make_panel(dates, returns);
    const Index window = 22;
    const RollingCorrelation rolling = rolling_correlation(panel, 0, 1, window);
    CHECK(rolling.values.size() == t_obs - window + 1);
    for (Index t = 0; t < rolling.values.size(); ++t) {
        const double oracle = pearson_correlation(
            returns.col(0).segment(t, window), returns.col(1).segment(t, window));
        CHECK(rolling.values(t) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(rolling.values(t) >= -1.0);
        CHECK(rolling.values(t) <= 1.0);
    }
}

TEST_CASE("rolling correlation trivial and degenerate windows") {
    Matrix returns(30, 2);
    for (Index t = 0; t < 30; ++t) {
        returns(t, 0) = std::sin(0.7 * t) + 0.01 * t;
        returns(t, 1) = returns(t, 0);
    }
    std::vector<std::string> dates;
    for (Index t = 0; t < 30; ++t)
        dates.push_back("2021-01-" + std::string(t + 1 < 10 ? "0" : "") +
                        std::to_string(t + 1));
    ReturnPanel panel = make_panel(dates, returns);
    RollingCorrelation rolling = rolling_correlation(panel, 0, 1, 22);
    for (Index t = 0; t < rolling.values.size(); ++t)
        CHECK(rolling.values(t) == doctest::Approx(1.0));

    panel.returns.col(1) = -panel.returns.col(0);
    rolling = rolling_correlation(panel, 0, 1, 22);
    for (Index t = 0; t < rolling.values.size(); ++t)
        CHECK(rolling.values(t) == doctest::Approx(-1.0));

    panel.returns.col(0).segment(0, 22).setConstant(2.0);
    rolling = rolling_correlation(panel, 0, 1, 22);
    CHECK(std::isnan(rolling.values(0)));

    CHECK_THROWS_AS(rolling_correlation(panel, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(rolling_correlation(panel, 0, 1, 31), std::invalid_argument);
}

TEST_CASE("subsample correlations differ across simulated regimes") {
    std::mt19937 rng(5);
    std::normal_distribution<double> gauss;
    const Index t_obs = 600;
    Matrix returns(t_obs, 2);
    for (Index t = 0; t < t_obs; ++t) {
        const double rho = t < t_obs / 2 ? 0.8 : -0.3;
        const double z1 = gauss(rng);
        const double z2 = rho * z1 + std::sqrt(1 - rho * rho) * gauss(rng);
        returns(t, 0) = z1;
        returns(t, 1) = z2;
    }
    std::vector<std::string> dates;
    for (Index t = 0; t < t_obs; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", 2015 + static_cast<int>(t / 336),
                      1 + static_cast<int>((t / 28) % 12), 1 + static_cast<int>(t % 28));
        dates.push_back(buf);
    }
    const ReturnPanel panel = make_panel(dates, returns);
    const std::string split = panel.dates[t_obs / 2];
    const SubsampleCorr full =
        subsample_correlations(panel, panel.dates.front(), panel.dates.back());
    const SubsampleCorr first = subsample_correlations(panel, panel.dates.front(), split);
    const SubsampleCorr second = subsample_correlations(panel, split, panel.dates.back());
    CHECK(full.correlation(0, 0) == 1.0);
    CHECK(full.correlation(1, 1) == 1.0);
    CHECK(std::abs(first.correlation(1, 0) - full.correlation(1, 0)) > 0.1);
    CHECK(std::abs(second.correlation(1, 0) - full.correlation(1, 0)) > 0.1);
    CHECK_THROWS_AS(
        subsample_correlations(panel, panel.dates[0], panel.dates[1]),
        std::invalid_argument);
    CHECK(std::isnan(full.exog_mean));
}
