#include "ccm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include "json.hpp"

#include "ccm/csv.hpp"
#include "ccm/garch.hpp"
#include "ccm/inference.hpp"
#include "ccm/stats.hpp"

namespace ccm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (threads == 1) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (Index i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

void require_file(const std::string& path, const char* what) {
    if (path.empty())
        throw std::invalid_argument(std::string("config: missing ") + what + " path");
    if (!fs::exists(path))
        throw std::invalid_argument(std::string("config: ") + what + " file not found: " +
                                    path);
}

CalendarSpec load_calendar_spec(const std::string& path) {
    std::ifstream file(path);
    if (!file.is_open()) throw std::invalid_argument("cannot open calendar file: " + path);
    json doc;
    try {
        file >> doc;
    } catch (const json::exception& err) {
        throw std::invalid_argument("calendar file is not valid JSON: " +
                                    std::string(err.what()));
    }
    CalendarSpec spec;
    spec.initial_regime = doc.value("initial_regime", 0);
    for (const auto& sw : doc.value("switches", json::array())) {
        const std::string date = sw.at("date").get<std::string>();
        if (!is_iso_date(date))
            throw std::invalid_argument("calendar switch date not ISO-8601: " + date);
        spec.switches.emplace_back(date, sw.at("regime").get<int>());
    }
    return spec;
}

DatedSeries load_dated_series(const std::string& path, char delimiter) {
    const Table table = read_table(path, delimiter);
    if (table.header.size() < 2)
        throw std::invalid_argument("exogenous file needs date and value columns: " + path);
    DatedSeries series;
    series.values.resize(static_cast<Index>(table.rows.size()));
    Index k = 0;
    for (const auto& row : table.rows) {
        if (row.size() < 2) continue;
        if (!is_iso_date(row[0]))
            throw std::invalid_argument("exogenous date not ISO-8601: " + row[0]);
        series.dates.push_back(row[0]);
        series.values(k++) = std::stod(row[1]);
    }
    series.values.conservativeResize(k);
    return series;
}

struct LoadedData {
    AlignedData aligned;
    std::size_t dropped_rows = 0;
};

LoadedData load_aligned(const RunConfig& config) {
    require_file(config.returns_path, "returns");
    require_file(config.exogenous_path, "exogenous");
    require_file(config.calendar_path, "calendar");

    LoadOptions load_options;
    load_options.delimiter = config.delimiter;
    load_options.date_column = config.date_column;
    LoadedPanel loaded = load_panel(config.returns_path, load_options);
    ReturnPanel panel =
        config.prices_are_levels ? log_returns(loaded.panel) : loaded.panel;

    const DatedSeries exog = load_dated_series(config.exogenous_path, config.delimiter);
    const CalendarSpec calendar = load_calendar_spec(config.calendar_path);
    LoadedData out;
    out.aligned = align(panel, exog, calendar);
    out.dropped_rows = loaded.dropped_rows;
    return out;
}

AlignedData restrict_range(const AlignedData& full, const std::string& start,
                           const std::string& end) {
    Index begin = start.empty() ? 0 : full.panel.lower_bound(start);
    Index stop = end.empty() ? full.panel.rows() : full.panel.upper_bound(end);
    if (stop - begin < 2)
        throw std::invalid_argument("estimation date range selects fewer than 2 rows");
    AlignedData out;
    out.panel.dates.assign(full.panel.dates.begin() + begin,
                           full.panel.dates.begin() + stop);
    out.panel.returns = full.panel.returns.middleRows(begin, stop - begin);
    out.panel.asset_names = full.panel.asset_names;
    out.exog = full.exog.slice(begin, stop - begin);
    out.calendar = full.calendar.slice(begin, stop - begin);
    return out;
}

struct TwoStepFit {
    std::vector<GarchFit> garch;
    Matrix residuals;
};

TwoStepFit first_step(const AlignedData& data, std::uint64_t seed) {
    TwoStepFit out;
    const Index n = data.panel.cols();
    out.garch.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        out.garch.push_back(
            fit_gjr(data.panel.returns.col(i), seed + static_cast<std::uint64_t>(i)));
    out.residuals = degarch(data.panel, out.garch);
    return out;
}

CorrData make_corr_data(const ModelSpec& spec, const Matrix& residuals,
                        const AlignedData& data) {
    CorrData corr;
    corr.residuals = residuals;
    corr.exog = spec.uses_exogenous() ? &data.exog : nullptr;
    corr.regimes = spec.uses_regime() ? &data.calendar : nullptr;
    return corr;
}

// Valid likelihood-ratio pairings (no nuisance parameter under the null).
const std::vector<std::pair<Family, Family>>& lr_pairs() {
    static const std::vector<std::pair<Family, Family>> pairs = {
        {Family::STCC_TUE, Family::STCC_TUPE}, {Family::DCC, Family::DCC_TUPE},
        {Family::DCC_TUE, Family::DCC_TUPE},   {Family::DCC_TUPE_PSI, Family::DCC_TUPE},
        {Family::DCC_PE, Family::DCC_TUPE},    {Family::DCC_TUE, Family::DCC_TUPE_PSI},
        {Family::DCC, Family::DCC_TUE},        {Family::DCC, Family::DCC_PE},
        {Family::DCC, Family::DCC_TUPE_PSI},
    };
    return pairs;
}

std::vector<CorrFitResult> fit_models(const std::vector<ModelSpec>& models,
                                      const AlignedData& data, const Matrix& residuals,
                                      std::uint64_t seed, int threads, bool compute_se) {
    std::vector<CorrFitResult> fits(models.size());
    parallel_for(static_cast<Index>(models.size()), threads, [&](Index m) {
        const ModelSpec& spec = models[static_cast<std::size_t>(m)];
        const CorrData corr = make_corr_data(spec, residuals, data);
        EstimateOptions options;
        options.seed = seed + 1000003ULL * static_cast<std::uint64_t>(m);
        options.compute_se = compute_se;
        fits[static_cast<std::size_t>(m)] = estimate(spec, corr, options);
    });

    // Re-polish any nested pair the independent fits left inverted.
    for (std::size_t u = 0; u < models.size(); ++u) {
        for (std::size_t r = 0; r < models.size(); ++r) {
            if (!is_nested_in(models[r].family, models[u].family)) continue;
            if (fits[u].loglik >= fits[r].loglik - 1e-6) continue;
            const CorrData corr = make_corr_data(models[u], residuals, data);
            EstimateOptions options;
            options.seed = seed + 7777ULL * static_cast<std::uint64_t>(u);
            options.compute_se = compute_se;
            options.extra_starts.push_back(pack_natural(
                lift_params(fits[r].params, models[u].family), residuals.cols()));
            CorrFitResult refit = estimate(models[u], corr, options);
            if (refit.loglik > fits[u].loglik) fits[u] = refit;
        }
    }
    return fits;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json garch_to_json(const GarchFit& fit, const std::string& asset) {
    json j;
    j["asset"] = asset;
    j["omega"] = fit.params.omega;
    j["alpha"] = fit.params.alpha;
    j["beta"] = fit.params.beta;
    j["gamma"] = fit.params.gamma;
    j["h0"] = fit.h0;
    j["loglik"] = fit.loglik;
    j["converged"] = fit.converged;
    json se = json::array();
    for (Index i = 0; i < fit.robust_se.size(); ++i)
        se.push_back(std::isfinite(fit.robust_se(i)) ? json(fit.robust_se(i))
                                                     : json(nullptr));
    j["robust_se"] = std::move(se);
    return j;
}

json fit_to_json(const CorrFitResult& fit, const std::vector<std::string>& asset_names,
                 Index t_obs) {
    json j;
    j["model"] = fit.spec.name();
    j["n_obs"] = t_obs;
    j["n_assets"] = static_cast<Index>(asset_names.size());
    j["asset_names"] = asset_names;
    j["loglik"] = fit.loglik;
    j["converged"] = fit.converged;
    json params = json::array();
    for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
        json p;
        p["name"] = fit.param_names[i];
        p["value"] = fit.param_values(static_cast<Index>(i));
        const double se = fit.robust_se(static_cast<Index>(i));
        p["robust_se"] = std::isfinite(se) ? json(se) : json(nullptr);
        params.push_back(std::move(p));
    }
    j["parameters"] = std::move(params);
    if (fit.spec.is_dcc()) {
        j["targeting_matrix"] = matrix_to_json(fit.params.rbar);
        j["targeting_converged"] = fit.targeting_converged;
    }
    if (fit.converged) {
        const InformationCriteria ic = information_criteria(fit, t_obs);
        j["aic"] = ic.aic;
        j["bic"] = ic.bic;
        j["aic_raw"] = ic.aic_raw;
        j["bic_raw"] = ic.bic_raw;
    }
    return j;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream file(path);
    if (!file.is_open())
        throw std::runtime_error("cannot write " + path.string());
    file << j.dump(2) << '\n';
}

void write_path_csv(const fs::path& path, const CorrelationPath& corr_path,
                    const std::vector<std::string>& dates,
                    const std::vector<std::string>& asset_names) {
    Table table;
    table.header = {"date", "asset_i", "asset_j", "rho"};
    const Index n = corr_path.matrices.empty() ? 0 : corr_path.matrices[0].rows();
    table.rows.reserve(corr_path.matrices.size() *
                       static_cast<std::size_t>(n * (n - 1) / 2));
    for (std::size_t t = 0; t < corr_path.matrices.size(); ++t)
        for (Index i = 1; i < n; ++i)
            for (Index j = 0; j < i; ++j)
                table.rows.push_back({dates[t], asset_names[static_cast<std::size_t>(i)],
                                      asset_names[static_cast<std::size_t>(j)],
                                      format_full(corr_path.matrices[t](i, j))});
    write_table(path.string(), table);
}

std::pair<Index, Index> resolve_plot_pair(const RunConfig& config,
                                          const std::vector<std::string>& asset_names) {
    if (config.plot_pair.empty())
        return {0, static_cast<Index>(asset_names.size()) - 1};
    if (config.plot_pair.size() != 2)
        throw std::invalid_argument("config: plot_pair must list exactly two assets");
    Index idx[2];
    for (int k = 0; k < 2; ++k) {
        const auto it =
            std::find(asset_names.begin(), asset_names.end(), config.plot_pair[k]);
        if (it == asset_names.end())
            throw std::invalid_argument("config: plot_pair asset not found: " +
                                        config.plot_pair[k]);
        idx[k] = it - asset_names.begin();
    }
    return {idx[0], idx[1]};
}

std::string decision_word(const TestResult& res) {
    return res.reject ? "reject H0" : "do not reject H0";
}

void print_test_line(std::ostream& os, const TestResult& res) {
    os << res.name << ": stat=" << format_report(res.statistic) << " df=" << res.df
       << " crit5%=" << format_report(res.critical_value_5pct)
       << " p=" << format_report(res.p_value) << " -> " << decision_word(res) << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

RunConfig load_config(const std::string& path) {
    std::ifstream file(path);
    if (!file.is_open()) throw std::invalid_argument("cannot open config file: " + path);
    json doc;
    try {
        file >> doc;
    } catch (const json::exception& err) {
        throw std::invalid_argument("config is not valid JSON: " + std::string(err.what()));
    }

    RunConfig config;
    config.returns_path = doc.value("returns", "");
    config.exogenous_path = doc.value("exogenous", "");
    config.calendar_path = doc.value("calendar", "");
    const std::string delim = doc.value("delimiter", ",");
    if (delim.size() != 1) throw std::invalid_argument("config: delimiter must be 1 char");
    config.delimiter = delim[0];
    config.prices_are_levels = doc.value("prices_are_levels", false);
    config.date_column = doc.value("date_column", "");
    config.estimation_start = doc.value("estimation_start", "");
    config.estimation_end = doc.value("estimation_end", "");

    if (doc.contains("models")) {
        for (const auto& name : doc.at("models"))
            config.models.push_back(ModelSpec::parse(name.get<std::string>()));
    }
    if (config.models.empty()) config.models = ModelSpec::all();

    if (doc.contains("rolling")) {
        const auto& r = doc.at("rolling");
        config.scheme.window_length = r.value("window", 2049);
        config.scheme.block_length = r.value("block", 60);
        config.scheme.n_blocks = r.value("n_blocks", 10);
    }
    if (doc.contains("mcs")) {
        const auto& m = doc.at("mcs");
        config.mcs_alpha = m.value("alpha", 0.05);
        config.mcs_n_boot = m.value("n_boot", 5000);
        config.mcs_block_len = m.value("block_len", 12);
        if (m.contains("statistics")) {
            config.mcs_statistics.clear();
            for (const auto& s : m.at("statistics")) {
                const std::string name = s.get<std::string>();
                if (name == "TR" || name == "T_R")
                    config.mcs_statistics.push_back(McsStatistic::T_R);
                else if (name == "TSQ" || name == "T_SQ")
                    config.mcs_statistics.push_back(McsStatistic::T_SQ);
                else
                    throw std::invalid_argument("config: unknown MCS statistic " + name);
            }
        }
    }
    config.seed = doc.value("seed", 1ULL);
    config.threads = doc.value("threads", 1);
    config.out_dir = doc.value("out", "out");
    config.rolling_corr_window = doc.value("rolling_corr_window", 22);
    if (doc.contains("plot_pair"))
        for (const auto& a : doc.at("plot_pair"))
            config.plot_pair.push_back(a.get<std::string>());
    if (config.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    return config;
}

void apply_overrides(RunConfig& config, const CliOverrides& overrides) {
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.threads) config.threads = *overrides.threads;
    if (config.threads < 1) throw std::invalid_argument("threads must be >= 1");
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

int run_estimate(const RunConfig& config) {
    try {
        const LoadedData loaded = load_aligned(config);
        const AlignedData data =
            restrict_range(loaded.aligned, config.estimation_start, config.estimation_end);
        std::cout << "estimation sample: " << data.panel.rows() << " rows, "
                  << data.panel.cols() << " assets";
        if (loaded.dropped_rows)
            std::cout << " (" << loaded.dropped_rows << " incomplete rows dropped)";
        std::cout << '\n';

        fs::create_directories(config.out_dir);
        const TwoStepFit step1 = first_step(data, config.seed);
        json garch_doc = json::array();
        bool all_converged = true;
        for (Index i = 0; i < data.panel.cols(); ++i) {
            const GarchFit& fit = step1.garch[static_cast<std::size_t>(i)];
            garch_doc.push_back(
                garch_to_json(fit, data.panel.asset_names[static_cast<std::size_t>(i)]));
            if (!fit.converged) {
                all_converged = false;
                std::cerr << "GARCH fit failed to converge: "
                          << data.panel.asset_names[static_cast<std::size_t>(i)] << '\n';
            }
        }
        write_json(fs::path(config.out_dir) / "garch_fits.json", garch_doc);

        const std::vector<CorrFitResult> fits =
            fit_models(config.models, data, step1.residuals, config.seed, config.threads,
                       /*compute_se=*/true);
        for (const CorrFitResult& fit : fits) {
            write_json(fs::path(config.out_dir) / ("fit_" + fit.spec.name() + ".json"),
                       fit_to_json(fit, data.panel.asset_names, data.panel.rows()));
            write_path_csv(fs::path(config.out_dir) / ("path_" + fit.spec.name() + ".csv"),
                           fit.path, data.panel.dates, data.panel.asset_names);
            std::cout << fit.spec.name() << ": loglik=" << format_report(fit.loglik)
                      << (fit.converged ? "" : "  [NOT CONVERGED]") << '\n';
            if (!fit.converged) all_converged = false;
        }
        return all_converged ? 0 : 1;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

namespace {

const CorrFitResult* find_fit(const std::vector<CorrFitResult>& fits, Family family) {
    for (const CorrFitResult& fit : fits)
        if (fit.spec.family == family && fit.converged) return &fit;
    return nullptr;
}

}  // namespace

int run_test(const RunConfig& config) {
    try {
        const LoadedData loaded = load_aligned(config);
        const AlignedData data =
            restrict_range(loaded.aligned, config.estimation_start, config.estimation_end);
        fs::create_directories(config.out_dir);
        const TwoStepFit step1 = first_step(data, config.seed);
        const std::vector<CorrFitResult> fits =
            fit_models(config.models, data, step1.residuals, config.seed, config.threads,
                       /*compute_se=*/true);
        const Index t_obs = data.panel.rows();
        const Index n = data.panel.cols();

        std::ofstream report(fs::path(config.out_dir) / "tests_report.txt");
        if (!report.is_open()) throw std::runtime_error("cannot write tests_report.txt");
        bool all_converged = true;

        report << "== a) Information criteria (per-observation; raw in brackets) ==\n";
        for (const CorrFitResult& fit : fits) {
            report << fit.spec.name() << ": k=" << fit.spec.parameter_count(n)
                   << " loglik=" << format_report(fit.loglik);
            if (fit.converged) {
                const InformationCriteria ic = information_criteria(fit, t_obs);
                report << " aic=" << format_report(ic.aic)
                       << " bic=" << format_report(ic.bic) << " [aic_raw="
                       << format_report(ic.aic_raw)
                       << " bic_raw=" << format_report(ic.bic_raw) << "]";
            } else {
                report << " NOT CONVERGED";
                all_converged = false;
            }
            report << '\n';
        }

        report << "\n== b) Constant-correlation tests ==\n";
        const CorrFitResult* ccc = find_fit(fits, Family::CCC);
        const CorrFitResult* ccc_pe = find_fit(fits, Family::CCC_PE);
        if (ccc && ccc_pe) {
            const int df = ccc_pe->spec.parameter_count(n) - ccc->spec.parameter_count(n);
            print_test_line(report, lr_test(*ccc, *ccc_pe, df));
        }
        if (ccc) {
            CorrData corr = make_corr_data(ModelSpec{Family::STCC_TUE}, step1.residuals,
                                           data);
            print_test_line(report, lm_test_constant_correlation(*ccc, corr));
        }
        if (ccc_pe) {
            CorrData corr = make_corr_data(ModelSpec{Family::STCC_TUPE}, step1.residuals,
                                           data);
            print_test_line(report, lm_test_constant_correlation(*ccc_pe, corr));
        }

        report << "\n== c) Equal stock-bond correlations across regimes (Wald) ==\n";
        std::vector<std::pair<Index, Index>> bond_pairs;
        for (Index i = 0; i + 1 < n; ++i) bond_pairs.emplace_back(n - 1, i);
        for (Family family :
             {Family::CCC_PE, Family::STCC_TUE, Family::STCC_TUPE}) {
            const CorrFitResult* fit = find_fit(fits, family);
            if (!fit) continue;
            try {
                print_test_line(report, wald_equal_correlations(*fit, bond_pairs));
            } catch (const std::runtime_error& err) {
                report << "Wald (" << fit->spec.name() << "): unavailable (" << err.what()
                       << ")\n";
            }
        }

        report << "\n== d) Likelihood-ratio tests for nested models ==\n";
        for (const auto& [small, large] : lr_pairs()) {
            const CorrFitResult* fit_r = find_fit(fits, small);
            const CorrFitResult* fit_u = find_fit(fits, large);
            if (!fit_r || !fit_u) continue;
            const int df =
                fit_u->spec.parameter_count(n) - fit_r->spec.parameter_count(n);
            print_test_line(report, lr_test(*fit_r, *fit_u, df));
        }

        report << "\n== e) Ljung-Box on de-garched cross products (vs last asset) ==\n";
        const std::vector<int> lag_list = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20};
        for (Index i = 0; i + 1 < n; ++i) {
            const Vector cross = (step1.residuals.col(i).array() *
                                  step1.residuals.col(n - 1).array())
                                     .matrix();
            const std::vector<TestResult> lb = ljung_box(cross, 20);
            report << data.panel.asset_names[static_cast<std::size_t>(i)] << " x "
                   << data.panel.asset_names[static_cast<std::size_t>(n - 1)] << ":";
            for (int lag : lag_list)
                report << "  Q(" << lag << ")="
                       << format_report(lb[static_cast<std::size_t>(lag - 1)].statistic);
            report << "\n  chi2 5% critical:";
            for (int lag : lag_list)
                report << "  " << format_report(chi2_quantile(0.95, lag));
            report << '\n';
        }
        std::cout << "wrote " << (fs::path(config.out_dir) / "tests_report.txt").string()
                  << '\n';
        return all_converged ? 0 : 1;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}

// ---------------------------------------------------------------------------
// forecast
// ---------------------------------------------------------------------------

int run_forecast(const RunConfig& config) {
    try {
        const LoadedData loaded = load_aligned(config);
        const AlignedData& full = loaded.aligned;
        config.scheme.validate(full.panel.rows());
        fs::create_directories(config.out_dir);
        const Index n_models = static_cast<Index>(config.models.size());

        std::vector<ForecastRun> runs(config.models.size());
        parallel_for(n_models, config.threads, [&](Index m) {
            ForecastOptions options;
            options.seed = config.seed + 4241ULL * static_cast<std::uint64_t>(m);
            runs[static_cast<std::size_t>(m)] = rolling_forecast(
                config.models[static_cast<std::size_t>(m)], full, config.scheme, options);
        });

        std::vector<Vector> qlike(config.models.size()), gmv(config.models.size());
        std::vector<std::string> names;
        for (std::size_t m = 0; m < config.models.size(); ++m) {
            qlike[m] = qlike_losses(runs[m]);
            gmv[m] = gmv_losses(runs[m]);
            names.push_back(config.models[m].name());
        }

        auto write_losses = [&](const std::string& fname,
                                const std::vector<Vector>& losses) {
            Table table;
            table.header = {"model", "tau", "date", "loss"};
            for (std::size_t m = 0; m < config.models.size(); ++m)
                for (Index t = 0; t < losses[m].size(); ++t)
                    table.rows.push_back({names[m], std::to_string(t + 1),
                                          runs[m].dates[static_cast<std::size_t>(t)],
                                          format_full(losses[m](t))});
            write_table((fs::path(config.out_dir) / fname).string(), table);
        };
        write_losses("qlike_losses.csv", qlike);
        write_losses("gmv_losses.csv", gmv);

        std::ofstream report(fs::path(config.out_dir) / "mcs_report.txt");
        if (!report.is_open()) throw std::runtime_error("cannot write mcs_report.txt");
        json mcs_doc = json::object();
        auto run_mcs_panel = [&](McsStatistic statistic, const std::string& loss_name,
                                 const std::vector<Vector>& losses) {
            McsOptions options;
            options.statistic = statistic;
            options.alpha = config.mcs_alpha;
            options.n_boot = config.mcs_n_boot;
            options.block_len = config.mcs_block_len;
            options.seed = config.seed;
            const MCSResult result = mcs(names, losses, options);
            const std::string stat_name = statistic == McsStatistic::T_R ? "T_R" : "T_SQ";
            report << "== MCS " << loss_name << " / " << stat_name
                   << " (alpha=" << format_report(config.mcs_alpha)
                   << ", first removed first) ==\n";
            json ladder = json::array();
            for (const auto& [model, p_value] : result.ladder) {
                const bool survivor =
                    std::find(result.survivors.begin(), result.survivors.end(), model) !=
                    result.survivors.end();
                report << model << ": p=" << format_report(p_value)
                       << (survivor ? "  [survivor]" : "  [eliminated]") << '\n';
                ladder.push_back(
                    {{"model", model}, {"p_value", p_value}, {"survivor", survivor}});
            }
            report << '\n';
            mcs_doc[loss_name + "_" + stat_name] = std::move(ladder);
        };
        if (names.size() >= 2) {
            for (const McsStatistic statistic : config.mcs_statistics) {
                run_mcs_panel(statistic, "QLike", qlike);
                run_mcs_panel(statistic, "GMV", gmv);
            }
        }
        write_json(fs::path(config.out_dir) / "mcs.json", mcs_doc);

        // Plot-ready data: rolling correlation against the exogenous level.
        const auto [pair_i, pair_j] = resolve_plot_pair(config, full.panel.asset_names);
        {
            const RollingCorrelation rolling = rolling_correlation(
                full.panel, pair_i, pair_j, config.rolling_corr_window);
            Table table;
            table.header = {"date", "rolling_corr", "exog"};
            const Index offset = config.rolling_corr_window - 1;
            for (Index t = 0; t < rolling.values.size(); ++t)
                table.rows.push_back({rolling.dates[static_cast<std::size_t>(t)],
                                      format_full(rolling.values(t)),
                                      format_full(full.exog.values(t + offset))});
            write_table((fs::path(config.out_dir) / "plot_rolling_corr.csv").string(),
                        table);
        }

        // In-sample correlation paths and fitted transition curves.
        const AlignedData in_sample =
            restrict_range(full, config.estimation_start, config.estimation_end);
        const TwoStepFit step1 = first_step(in_sample, config.seed);
        const std::vector<CorrFitResult> fits =
            fit_models(config.models, in_sample, step1.residuals, config.seed,
                       config.threads, /*compute_se=*/false);
        for (const CorrFitResult& fit : fits) {
            Table table;
            table.header = {"date", "rho", "exog", "dummy"};
            for (std::size_t t = 0; t < fit.path.matrices.size(); ++t)
                table.rows.push_back(
                    {in_sample.panel.dates[t],
                     format_full(fit.path.matrices[t](pair_i, pair_j)),
                     format_full(in_sample.exog.values(static_cast<Index>(t))),
                     std::to_string(in_sample.calendar.dummy[t])});
            write_table((fs::path(config.out_dir) /
                         ("plot_corr_path_" + fit.spec.name() + ".csv"))
                            .string(),
                        table);

            if (fit.spec.family == Family::STCC_TUE ||
                fit.spec.family == Family::STCC_TUPE) {
                Table curve;
                curve.header = {"x"};
                for (std::size_t k = 0; k < fit.params.transition.size(); ++k)
                    curve.header.push_back("G" + std::to_string(k + 1));
                const double x_max = in_sample.exog.values.maxCoeff() * 1.05;
                for (int g = 0; g <= 200; ++g) {
                    const double x = x_max * g / 200.0;
                    std::vector<std::string> row = {format_full(x)};
                    for (const TransitionParams& tp : fit.params.transition)
                        row.push_back(format_full(logistic_transition(x, tp)));
                    curve.rows.push_back(std::move(row));
                }
                write_table((fs::path(config.out_dir) /
                             ("plot_transition_" + fit.spec.name() + ".csv"))
                                .string(),
                            curve);
            }
        }
        std::cout << "forecast outputs written to " << config.out_dir << '\n';
        return 0;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

namespace {

Matrix equicorrelation(Index n, double rho) {
    Matrix r = Matrix::Constant(n, n, rho);
    r.diagonal().setOnes();
    return r;
}

}  // namespace

SimConfig default_sim_config(const ModelSpec& spec, Index n_assets) {
    SimConfig config;
    config.spec = spec;
    config.n_assets = n_assets;
    config.params.family = spec.family;
    config.params.dcc.restriction = spec.family;
    switch (spec.family) {
        case Family::CCC:
            config.params.R = {equicorrelation(n_assets, 0.5)};
            break;
        case Family::CCC_PE:
            config.params.R = {equicorrelation(n_assets, 0.65),
                               equicorrelation(n_assets, 0.25)};
            break;
        case Family::STCC_TUE:
            config.params.R = {equicorrelation(n_assets, 0.7),
                               equicorrelation(n_assets, 0.15)};
            config.params.transition = {{8.0, 0.12}};
            break;
        case Family::STCC_TUPE:
            config.params.R = {equicorrelation(n_assets, 0.7),
                               equicorrelation(n_assets, 0.35),
                               equicorrelation(n_assets, 0.3),
                               equicorrelation(n_assets, -0.05)};
            config.params.transition = {{16.0, 0.05}, {8.0, 0.5}};
            break;
        case Family::DCC:
            config.params.dcc.a.setConstant(0.19);
            config.params.dcc.b.setConstant(0.79);
            break;
        case Family::DCC_TUE:
            config.params.dcc.a.setConstant(0.04);
            config.params.dcc.b.setConstant(0.92);
            config.params.dcc.psi.setConstant(0.15);
            break;
        case Family::DCC_TUPE:
            config.params.dcc.a = Eigen::Vector2d(0.045, 0.0375);
            config.params.dcc.b = Eigen::Vector2d(0.94, 0.955);
            config.params.dcc.psi = Eigen::Vector2d(0.07, 0.037);
            break;
        case Family::DCC_TUPE_PSI:
            config.params.dcc.a.setConstant(0.039);
            config.params.dcc.b.setConstant(0.95);
            config.params.dcc.psi = Eigen::Vector2d(0.019, 0.021);
            break;
        case Family::DCC_PE:
            config.params.dcc.a = Eigen::Vector2d(0.25, 0.18);
            config.params.dcc.b = Eigen::Vector2d(0.71, 0.80);
            break;
    }
    config.params.dcc.apply_restriction();
    if (spec.is_dcc()) config.params.rbar = equicorrelation(n_assets, 0.4);
    return config;
}

int run_simulate(const SimulateCli& cli) {
    try {
        const ModelSpec spec = ModelSpec::parse(cli.model);
        const SimConfig sim_config = default_sim_config(spec, cli.n_assets);
        const SimulatedData sim = simulate(sim_config, cli.t_obs, cli.seed);
        fs::create_directories(cli.out_dir);

        Table returns;
        returns.header = {"date"};
        for (const std::string& name : sim.panel.asset_names) returns.header.push_back(name);
        for (Index t = 0; t < sim.panel.rows(); ++t) {
            std::vector<std::string> row = {sim.panel.dates[static_cast<std::size_t>(t)]};
            for (Index i = 0; i < sim.panel.cols(); ++i)
                row.push_back(format_full(sim.panel.returns(t, i)));
            returns.rows.push_back(std::move(row));
        }
        write_table((fs::path(cli.out_dir) / "returns.csv").string(), returns);

        Table exog;
        exog.header = {"date", "value"};
        for (Index t = 0; t < sim.exog.values.size(); ++t)
            exog.rows.push_back({sim.exog.dates[static_cast<std::size_t>(t)],
                                 format_full(sim.exog.values(t))});
        write_table((fs::path(cli.out_dir) / "exog.csv").string(), exog);

        json calendar;
        calendar["initial_regime"] = sim.calendar.dummy.empty() ? 0 : sim.calendar.dummy[0];
        json switches = json::array();
        for (const std::string& date : sim.calendar.switch_dates) {
            const Index t =
                std::lower_bound(sim.calendar.dates.begin(), sim.calendar.dates.end(),
                                 date) -
                sim.calendar.dates.begin();
            switches.push_back(
                {{"date", date}, {"regime", sim.calendar.dummy[static_cast<std::size_t>(t)]}});
        }
        calendar["switches"] = std::move(switches);
        write_json(fs::path(cli.out_dir) / "calendar.json", calendar);

        write_path_csv(fs::path(cli.out_dir) / "true_path.csv", sim.true_path,
                       sim.panel.dates, sim.panel.asset_names);

        json meta;
        meta["model"] = spec.name();
        meta["T"] = cli.t_obs;
        meta["N"] = cli.n_assets;
        meta["seed"] = cli.seed;
        write_json(fs::path(cli.out_dir) / "dgp.json", meta);
        std::cout << "simulated " << spec.name() << " sample written to " << cli.out_dir
                  << '\n';
        return 0;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}

}  // namespace ccm
