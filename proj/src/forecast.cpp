#include "ccm/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "ccm/garch.hpp"

namespace ccm {

void RollingScheme::validate(Index t_obs) const {
    if (window_length < 500)
        throw std::invalid_argument("RollingScheme: window_length must be >= 500");
    if (block_length < 1 || n_blocks < 1)
        throw std::invalid_argument("RollingScheme: block_length and n_blocks must be >= 1");
    if (window_length + n_blocks * block_length > t_obs)
        throw std::invalid_argument(
            "RollingScheme: window_length + n_blocks * block_length exceeds the sample (" +
            std::to_string(window_length + n_blocks * block_length) + " > " +
            std::to_string(t_obs) + ")");
}

ForecastRun rolling_forecast(const ModelSpec& spec, const AlignedData& data,
                             const RollingScheme& scheme,
                             const ForecastOptions& options) {
    data.panel.validate();
    scheme.validate(data.panel.rows());
    const Index n = data.panel.cols();

    ForecastRun run;
    run.model = spec;
    run.dates.reserve(static_cast<std::size_t>(scheme.total_forecasts()));
    run.forecasts.reserve(static_cast<std::size_t>(scheme.total_forecasts()));
    run.realized.reserve(static_cast<std::size_t>(scheme.total_forecasts()));

    for (Index block = 0; block < scheme.n_blocks; ++block) {
        try {
            const Index est_begin = block * scheme.block_length;
            const Index fc_begin = est_begin + scheme.window_length;
            const Index ext_len = scheme.window_length + scheme.block_length;

            // First step: per-asset GJR fits on the estimation window.
            std::vector<GarchFit> fits;
            fits.reserve(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) {
                GarchFit fit = fit_gjr(
                    data.panel.returns.col(i).segment(est_begin, scheme.window_length),
                    options.seed + static_cast<std::uint64_t>(block) * 101 +
                        static_cast<std::uint64_t>(i));
                if (options.garch_must_converge && !fit.converged)
                    throw std::runtime_error("GARCH fit did not converge for asset " +
                                             std::to_string(i));
                fits.push_back(std::move(fit));
            }

            // Second step on window residuals.
            Matrix window_resid(scheme.window_length, n);
            for (Index i = 0; i < n; ++i)
                window_resid.col(i) = fits[static_cast<std::size_t>(i)].residuals;
            const ExogenousSeries window_exog =
                data.exog.slice(est_begin, scheme.window_length);
            const RegimeCalendar window_cal =
                data.calendar.slice(est_begin, scheme.window_length);
            CorrData window_data;
            window_data.residuals = window_resid;
            window_data.exog = spec.uses_exogenous() ? &window_exog : nullptr;
            window_data.regimes = spec.uses_regime() ? &window_cal : nullptr;
            EstimateOptions est_options;
            est_options.seed = options.seed + static_cast<std::uint64_t>(block);
            est_options.compute_se = false;
            const CorrFitResult fit = estimate(spec, window_data, est_options);
            if (!fit.converged)
                throw std::runtime_error("correlation fit did not converge");

            // Frozen-parameter recursions over the window plus the block.
            Matrix ext_h2(ext_len, n);
            Matrix ext_resid(ext_len, n);
            for (Index i = 0; i < n; ++i) {
                const GarchFit& gf = fits[static_cast<std::size_t>(i)];
                ext_h2.col(i) = gjr_variance_path(
                    gf.params, data.panel.returns.col(i).segment(est_begin, ext_len),
                    gf.h0);
                ext_resid.col(i) =
                    data.panel.returns.col(i).segment(est_begin, ext_len).array() /
                    ext_h2.col(i).array().sqrt();
            }

            ExogenousSeries ext_exog = data.exog.slice(est_begin, ext_len);
            // Targeting arithmetic stays on the estimation window's mean.
            ext_exog.sample_mean = window_exog.sample_mean;
            RegimeCalendar ext_cal = data.calendar.slice(est_begin, ext_len);
            // Forecast steps read the dummy at tau - 1.
            for (Index t = ext_len - 1; t >= scheme.window_length; --t)
                ext_cal.dummy[static_cast<std::size_t>(t)] =
                    ext_cal.dummy[static_cast<std::size_t>(t - 1)];

            CorrData ext_data;
            ext_data.residuals = ext_resid;
            ext_data.exog = spec.uses_exogenous() ? &ext_exog : nullptr;
            ext_data.regimes = spec.uses_regime() ? &ext_cal : nullptr;
            const CorrelationPath ext_path =
                spec.is_dcc()
                    ? build_path_with_rbar(spec, fit.params, ext_data, fit.params.rbar)
                    : build_path(spec, fit.params, ext_data);

            for (Index s = 0; s < scheme.block_length; ++s) {
                const Index t_ext = scheme.window_length + s;
                const Index t_abs = fc_begin + s;
                const Vector sd = ext_h2.row(t_ext).array().sqrt();
                Matrix h_hat = sd.asDiagonal() *
                               ext_path.matrices[static_cast<std::size_t>(t_ext)] *
                               sd.asDiagonal();
                h_hat = 0.5 * (h_hat + h_hat.transpose());
                const Vector r_tau = data.panel.returns.row(t_abs).transpose();
                run.dates.push_back(data.panel.dates[static_cast<std::size_t>(t_abs)]);
                run.forecasts.push_back(std::move(h_hat));
                run.realized.push_back(r_tau * r_tau.transpose());
            }
        } catch (const std::exception& err) {
            throw std::runtime_error("rolling_forecast: block " + std::to_string(block) +
                                     " failed: " + err.what());
        }
    }
    return run;
}

namespace {

void check_run(const ForecastRun& run) {
    if (run.forecasts.empty() || run.forecasts.size() != run.realized.size())
        throw std::invalid_argument("forecast run is empty or inconsistent");
}

}  // namespace

Vector qlike_losses(const ForecastRun& run) {
    check_run(run);
    const Index t_h = static_cast<Index>(run.forecasts.size());
    Vector losses(t_h);
    for (Index t = 0; t < t_h; ++t) {
        const Matrix& h = run.forecasts[static_cast<std::size_t>(t)];
        Eigen::LLT<Matrix> llt(h);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("qlike_loss: singular forecast at tau = " +
                                     std::to_string(t));
        const Matrix l = llt.matrixL();
        double ldet = 0.0;
        for (Index i = 0; i < h.rows(); ++i) ldet += std::log(l(i, i));
        ldet *= 2.0;
        losses(t) = ldet + llt.solve(run.realized[static_cast<std::size_t>(t)]).trace();
    }
    return losses;
}

double qlike_loss(const ForecastRun& run) { return qlike_losses(run).mean(); }

Vector gmv_losses(const ForecastRun& run) {
    check_run(run);
    const Index t_h = static_cast<Index>(run.forecasts.size());
    Vector losses(t_h);
    for (Index t = 0; t < t_h; ++t) {
        const Matrix& h = run.forecasts[static_cast<std::size_t>(t)];
        const Index n = h.rows();
        Eigen::LLT<Matrix> llt(h);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("gmv_loss: singular forecast at tau = " +
                                     std::to_string(t));
        const Vector ones = Vector::Ones(n);
        const Vector hinv_ones = llt.solve(ones);
        const double denom = ones.dot(hinv_ones);
        if (!(std::abs(denom) > 0.0))
            throw std::runtime_error("gmv_loss: degenerate weights at tau = " +
                                     std::to_string(t));
        const Vector v = std::sqrt(static_cast<double>(n)) * hinv_ones / denom;
        losses(t) = v.dot(h * v);
    }
    return losses;
}

double gmv_loss(const ForecastRun& run) { return gmv_losses(run).mean(); }

// ---------------------------------------------------------------------------
// Model confidence set
// ---------------------------------------------------------------------------

namespace {

constexpr double kVarFloor = 1e-300;

// Standardized statistic handling degenerate bootstrap variances: a zero
// spread with a zero mean contributes nothing, a zero spread with a
// non-zero mean dominates every finite statistic.
double studentize(double num, double var) {
    if (var > kVarFloor) return num / std::sqrt(var);
    return std::abs(num) < 1e-14 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

MCSResult mcs(const std::vector<std::string>& names, const std::vector<Vector>& losses,
              const McsOptions& options) {
    const Index n_models = static_cast<Index>(names.size());
    if (n_models < 2 || losses.size() != names.size())
        throw std::invalid_argument("mcs: need >= 2 models with matching loss sequences");
    const Index t_h = losses[0].size();
    for (const Vector& l : losses)
        if (l.size() != t_h || t_h < 2)
            throw std::invalid_argument("mcs: loss sequences must share length >= 2");
    if (options.n_boot < 1) throw std::invalid_argument("mcs: n_boot must be >= 1");
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw std::invalid_argument("mcs: alpha must lie in (0,1)");
    const Index block = std::max<Index>(1, std::min(options.block_len, t_h));

    // Resampled per-model mean losses under a circular block bootstrap;
    // pair differentials follow as differences of model means.
    Vector mean_loss(n_models);
    for (Index i = 0; i < n_models; ++i) mean_loss(i) = losses[i].mean();
    Matrix boot_means(options.n_boot, n_models);
    {
        std::mt19937_64 rng(options.seed);
        std::uniform_int_distribution<Index> start(0, t_h - 1);
        std::vector<Index> idx(static_cast<std::size_t>(t_h));
        for (int b = 0; b < options.n_boot; ++b) {
            Index filled = 0;
            while (filled < t_h) {
                const Index s = start(rng);
                for (Index k = 0; k < block && filled < t_h; ++k)
                    idx[static_cast<std::size_t>(filled++)] = (s + k) % t_h;
            }
            for (Index i = 0; i < n_models; ++i) {
                double sum = 0.0;
                for (Index t = 0; t < t_h; ++t)
                    sum += losses[i](idx[static_cast<std::size_t>(t)]);
                boot_means(b, i) = sum / static_cast<double>(t_h);
            }
        }
    }

    MCSResult out;
    out.statistic_kind = options.statistic;
    out.alpha = options.alpha;

    std::vector<Index> active(static_cast<std::size_t>(n_models));
    for (Index i = 0; i < n_models; ++i) active[static_cast<std::size_t>(i)] = i;
    double running_p = 0.0;

    while (active.size() > 1) {
        const Index m = static_cast<Index>(active.size());

        // Pairwise variances of the mean differentials from the bootstrap.
        Matrix var_pair = Matrix::Zero(m, m);
        for (Index p = 0; p < m; ++p) {
            for (Index q = p + 1; q < m; ++q) {
                const Index i = active[static_cast<std::size_t>(p)];
                const Index j = active[static_cast<std::size_t>(q)];
                const double d_hat = mean_loss(i) - mean_loss(j);
                double acc = 0.0;
                for (int b = 0; b < options.n_boot; ++b) {
                    const double dev = boot_means(b, i) - boot_means(b, j) - d_hat;
                    acc += dev * dev;
                }
                var_pair(p, q) = var_pair(q, p) = acc / options.n_boot;
            }
        }

        auto statistic_of = [&](const std::function<double(Index, Index)>& diff) {
            double t_r = 0.0;
            double t_sq = 0.0;
            for (Index p = 0; p < m; ++p)
                for (Index q = p + 1; q < m; ++q) {
                    const double t_pq = studentize(diff(p, q), var_pair(p, q));
                    t_r = std::max(t_r, std::abs(t_pq));
                    t_sq += t_pq * t_pq;
                }
            return options.statistic == McsStatistic::T_R ? t_r : t_sq;
        };

        const double observed = statistic_of([&](Index p, Index q) {
            return mean_loss(active[static_cast<std::size_t>(p)]) -
                   mean_loss(active[static_cast<std::size_t>(q)]);
        });
        int n_geq = 0;
        for (int b = 0; b < options.n_boot; ++b) {
            const double boot_stat = statistic_of([&](Index p, Index q) {
                const Index i = active[static_cast<std::size_t>(p)];
                const Index j = active[static_cast<std::size_t>(q)];
                return boot_means(b, i) - boot_means(b, j) -
                       (mean_loss(i) - mean_loss(j));
            });
            if (boot_stat >= observed) ++n_geq;
        }
        const double p_value = static_cast<double>(n_geq) / options.n_boot;
        running_p = std::max(running_p, p_value);

        // Worst model by standardized deviation from the active-set mean.
        Index worst_pos = 0;
        double worst_stat = -std::numeric_limits<double>::infinity();
        for (Index p = 0; p < m; ++p) {
            const Index i = active[static_cast<std::size_t>(p)];
            double d_i = 0.0;
            for (Index q = 0; q < m; ++q)
                if (q != p) d_i += mean_loss(i) - mean_loss(active[static_cast<std::size_t>(q)]);
            d_i /= static_cast<double>(m - 1);
            double acc = 0.0;
            for (int b = 0; b < options.n_boot; ++b) {
                double d_b = 0.0;
                for (Index q = 0; q < m; ++q)
                    if (q != p)
                        d_b += boot_means(b, i) -
                               boot_means(b, active[static_cast<std::size_t>(q)]);
                d_b /= static_cast<double>(m - 1);
                const double dev = d_b - d_i;
                acc += dev * dev;
            }
            const double t_i = studentize(d_i, acc / options.n_boot);
            if (t_i > worst_stat) {
                worst_stat = t_i;
                worst_pos = p;
            }
        }

        out.ladder.emplace_back(names[static_cast<std::size_t>(
                                    active[static_cast<std::size_t>(worst_pos)])],
                                running_p);
        active.erase(active.begin() + worst_pos);
    }
    out.ladder.emplace_back(names[static_cast<std::size_t>(active[0])], 1.0);

    for (const auto& [model, p_value] : out.ladder)
        if (p_value >= options.alpha) out.survivors.push_back(model);
    return out;
}

}  // namespace ccm
