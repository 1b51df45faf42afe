#include "ccm/inference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ccm {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

TestResult make_result(std::string name, double statistic, int df) {
    TestResult res;
    res.name = std::move(name);
    res.statistic = statistic;
    res.df = df;
    res.critical_value_5pct = chi2_quantile(0.95, df);
    res.reject = statistic > res.critical_value_5pct;
    res.p_value = 1.0 - chi2_cdf(statistic, df);
    return res;
}

// Strict-lower-triangle position of (i, j), i > j, row-major.
Index vech_index(Index i, Index j) { return i * (i - 1) / 2 + j; }

}  // namespace

Vector robust_se(const CorrFitResult& fit, const LoglikTerms& loglik) {
    if (!fit.converged)
        throw std::invalid_argument("robust_se: fit did not converge");
    return sandwich_standard_errors(loglik, fit.param_values);
}

Vector robust_se(const GarchFit& fit, const LoglikTerms& loglik) {
    if (!fit.converged)
        throw std::invalid_argument("robust_se: fit did not converge");
    Vector natural(4);
    natural << fit.params.omega, fit.params.alpha, fit.params.beta, fit.params.gamma;
    return sandwich_standard_errors(loglik, natural);
}

std::vector<TestResult> ljung_box(VecRef series, int max_lag) {
    const Index t_obs = series.size();
    if (max_lag < 1) throw std::invalid_argument("ljung_box: max_lag must be >= 1");
    if (t_obs <= max_lag)
        throw std::invalid_argument("ljung_box: series shorter than max_lag");
    const double mean = series.mean();
    const Eigen::ArrayXd centered = series.array() - mean;
    const double denom = centered.square().sum();
    if (!(denom > 0.0)) throw std::runtime_error("ljung_box: zero-variance series");

    std::vector<TestResult> out;
    out.reserve(static_cast<std::size_t>(max_lag));
    const double t_d = static_cast<double>(t_obs);
    double cumulative = 0.0;
    for (int lag = 1; lag <= max_lag; ++lag) {
        double acf = 0.0;
        for (Index t = lag; t < t_obs; ++t) acf += centered(t) * centered(t - lag);
        acf /= denom;
        cumulative += acf * acf / static_cast<double>(t_obs - lag);
        const double q = t_d * (t_d + 2.0) * cumulative;
        out.push_back(make_result("LjungBox(" + std::to_string(lag) + ")", q, lag));
    }
    return out;
}

TestResult lr_test(const CorrFitResult& restricted, const CorrFitResult& unrestricted,
                   int df) {
    if (!is_nested_in(restricted.spec.family, unrestricted.spec.family))
        throw std::invalid_argument("lr_test: " + restricted.spec.name() +
                                    " is not nested in " + unrestricted.spec.name());
    if (!restricted.converged || !unrestricted.converged)
        throw std::invalid_argument("lr_test: both fits must have converged");
    if (df < 1) throw std::invalid_argument("lr_test: df must be >= 1");
    double statistic = 2.0 * (unrestricted.loglik - restricted.loglik);
    if (statistic < -1e-6)
        throw std::runtime_error(
            "lr_test: unrestricted log-likelihood below restricted one (" +
            std::to_string(statistic) + "); optimizer failure suspected");
    statistic = std::max(statistic, 0.0);
    return make_result("LR " + unrestricted.spec.name() + " vs " + restricted.spec.name(),
                       statistic, df);
}

TestResult lm_test_constant_correlation(const CorrFitResult& null_fit,
                                        const CorrData& data) {
    const Family family = null_fit.spec.family;
    if (family != Family::CCC && family != Family::CCC_PE)
        throw std::invalid_argument(
            "lm_test_constant_correlation: null fit must be CCC or CCC-PE");
    if (!data.exog)
        throw std::invalid_argument(
            "lm_test_constant_correlation: transition variable required");
    const Matrix& resid = data.residuals;
    const Index t_obs = resid.rows();
    const Index n = resid.cols();
    if (data.exog->values.size() != t_obs)
        throw std::invalid_argument("lm_test_constant_correlation: series not aligned");
    const bool split = family == Family::CCC_PE;
    if (split && (!data.regimes ||
                  static_cast<Index>(data.regimes->dummy.size()) != t_obs))
        throw std::invalid_argument("lm_test_constant_correlation: calendar not aligned");

    // Standardized lagged transition variable; the statistic is invariant
    // to its location and scale, and centering keeps the perturbed
    // matrices comfortably positive definite.
    Vector g = transition_input(*data.exog);
    const double g_mean = g.mean();
    const double g_sd = std::sqrt(std::max(sample_variance(g), 1e-300));
    g = (g.array() - g_mean) / g_sd;

    const Index m = n * (n - 1) / 2;
    const Index n_groups = split ? 2 : 1;
    const Index dim = 2 * n_groups * m;  // base correlations plus slope entries
    const Index df = n_groups * m;

    // theta layout: base entries per group, then slope-matrix entries.
    Vector theta0(dim);
    for (Index grp = 0; grp < n_groups; ++grp) {
        const Matrix& r = null_fit.params.R[static_cast<std::size_t>(grp)];
        Index k = grp * m;
        for (Index i = 1; i < n; ++i)
            for (Index j = 0; j < i; ++j) theta0(k++) = r(i, j);
    }
    theta0.tail(n_groups * m).setZero();

    auto terms = [&](const Vector& theta) -> Vector {
        std::vector<Matrix> base(static_cast<std::size_t>(n_groups));
        std::vector<Matrix> slope(static_cast<std::size_t>(n_groups));
        for (Index grp = 0; grp < n_groups; ++grp) {
            Matrix r = Matrix::Identity(n, n);
            Matrix a = Matrix::Zero(n, n);
            Index k = grp * m;
            Index ka = (n_groups + grp) * m;
            for (Index i = 1; i < n; ++i)
                for (Index j = 0; j < i; ++j) {
                    r(i, j) = r(j, i) = theta(k++);
                    a(i, j) = a(j, i) = theta(ka++);
                }
            base[static_cast<std::size_t>(grp)] = std::move(r);
            slope[static_cast<std::size_t>(grp)] = std::move(a);
        }
        Vector out(t_obs);
        const double constant = -0.5 * n * std::log(2.0 * M_PI);
        for (Index t = 0; t < t_obs; ++t) {
            const Index grp =
                split ? (data.regimes->dummy[static_cast<std::size_t>(t)] == 1 ? 0 : 1)
                      : 0;
            const Matrix rt = base[static_cast<std::size_t>(grp)] +
                              g(t) * slope[static_cast<std::size_t>(grp)];
            Eigen::LLT<Matrix> llt(rt);
            if (llt.info() != Eigen::Success) {
                out.setConstant(kNaN);
                return out;
            }
            const Matrix l = llt.matrixL();
            double ldet = 0.0;
            for (Index i = 0; i < n; ++i) ldet += std::log(l(i, i));
            const Vector e = resid.row(t).transpose();
            out(t) = constant - ldet - 0.5 * e.dot(llt.solve(e));
        }
        return out;
    };

    // Per-observation scores at the restricted optimum.
    Matrix scores(t_obs, dim);
    for (Index i = 0; i < dim; ++i) {
        const double h = 1e-4 * std::max(std::abs(theta0(i)), 1.0);
        Vector tp = theta0, tm = theta0;
        tp(i) += h;
        tm(i) -= h;
        const Vector fp = terms(tp);
        const Vector fm = terms(tm);
        if (!fp.allFinite() || !fm.allFinite())
            throw std::runtime_error(
                "lm_test_constant_correlation: likelihood not finite near the null fit");
        scores.col(i) = (fp - fm) / (2.0 * h);
    }
    const Vector score_sum = scores.colwise().sum();
    const Matrix opg = scores.transpose() * scores;
    Eigen::FullPivLU<Matrix> lu(opg);
    if (!lu.isInvertible())
        throw std::runtime_error(
            "lm_test_constant_correlation: singular score outer-product matrix");
    const double statistic = score_sum.dot(lu.solve(score_sum));

    TestResult res = make_result(split ? "LM STCC-TUPE vs CCC-PE" : "LM STCC-TUE vs CCC",
                                 statistic, static_cast<int>(df));
    return res;
}

TestResult wald_equal_correlations(const CorrFitResult& fit,
                                   const std::vector<std::pair<Index, Index>>& pairs) {
    const int n_mats = fit.spec.n_corr_matrices();
    if (n_mats != 2 && n_mats != 4)
        throw std::invalid_argument(
            "wald_equal_correlations: fit must expose two or four regime matrices");
    if (pairs.empty())
        throw std::invalid_argument("wald_equal_correlations: empty pair set");
    if (!fit.robust_cov.allFinite())
        throw std::runtime_error("wald_equal_correlations: robust covariance unavailable");
    const Index n = fit.params.R[0].rows();
    const Index m = n * (n - 1) / 2;

    std::vector<std::pair<int, int>> matrix_pairs = {{0, 1}};
    if (n_mats == 4) matrix_pairs.push_back({2, 3});

    const Index n_diff = static_cast<Index>(pairs.size() * matrix_pairs.size());
    Vector delta(n_diff);
    Matrix selector = Matrix::Zero(n_diff, fit.param_values.size());
    Index row = 0;
    for (const auto& [m1, m2] : matrix_pairs) {
        for (auto [i, j] : pairs) {
            if (i == j || i < 0 || j < 0 || i >= n || j >= n)
                throw std::invalid_argument("wald_equal_correlations: bad asset pair");
            if (i < j) std::swap(i, j);
            const Index k1 = m1 * m + vech_index(i, j);
            const Index k2 = m2 * m + vech_index(i, j);
            delta(row) = fit.param_values(k1) - fit.param_values(k2);
            selector(row, k1) = 1.0;
            selector(row, k2) = -1.0;
            ++row;
        }
    }
    const Matrix v = selector * fit.robust_cov * selector.transpose();
    Eigen::FullPivLU<Matrix> lu(v);
    if (!lu.isInvertible())
        throw std::runtime_error("wald_equal_correlations: singular covariance block");
    const double statistic = delta.dot(lu.solve(delta));
    return make_result("Wald equal stock-bond correlations (" + fit.spec.name() + ")",
                       statistic, static_cast<int>(n_diff));
}

InformationCriteria information_criteria(const CorrFitResult& fit, Index t_obs) {
    if (!fit.converged)
        throw std::invalid_argument("information_criteria: fit did not converge");
    if (t_obs < 1) throw std::invalid_argument("information_criteria: T must be >= 1");
    const Index n = fit.path.matrices.empty() ? 0 : fit.path.matrices[0].rows();
    const double k = static_cast<double>(fit.spec.parameter_count(n));
    const double t_d = static_cast<double>(t_obs);
    InformationCriteria ic;
    ic.aic_raw = -2.0 * fit.loglik + 2.0 * k;
    ic.bic_raw = -2.0 * fit.loglik + k * std::log(t_d);
    ic.aic = ic.aic_raw / t_d;
    ic.bic = ic.bic_raw / t_d;
    return ic;
}

}  // namespace ccm
