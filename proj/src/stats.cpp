#include "ccm/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccm {

namespace {

constexpr int kMaxGammaIter = 400;
constexpr double kGammaEps = 1e-14;

// Series expansion of P(a,x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kMaxGammaIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kGammaEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) = 1 - P(a,x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double fpmin = std::numeric_limits<double>::min() / kGammaEps;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxGammaIter; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kGammaEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double chi2_cdf(double x, int df) {
    if (df < 1) throw std::invalid_argument("chi2_cdf: df must be >= 1");
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, int df) {
    if (df < 1) throw std::invalid_argument("chi2_quantile: df must be >= 1");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("chi2_quantile: p must lie in (0,1)");

    // Bracket, then bisect. CDF is monotone so this is safe everywhere.
    double lo = 0.0;
    double hi = df + 10.0;
    while (chi2_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

double sample_mean(VecRef x) {
    if (x.size() == 0) throw std::invalid_argument("sample_mean: empty vector");
    return x.mean();
}

double sample_variance(VecRef x) {
    if (x.size() < 2) throw std::invalid_argument("sample_variance: need >= 2 points");
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

double pearson_correlation(VecRef x, VecRef y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson_correlation: size mismatch or too short");
    const double mx = x.mean();
    const double my = y.mean();
    const Eigen::ArrayXd dx = x.array() - mx;
    const Eigen::ArrayXd dy = y.array() - my;
    const double sxx = dx.square().sum();
    const double syy = dy.square().sum();
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return dx.cwiseProduct(dy).sum() / std::sqrt(sxx * syy);
}

Matrix sample_correlation(MatRef x, bool center) {
    const Index n = x.cols();
    if (x.rows() < 2 || n < 1)
        throw std::invalid_argument("sample_correlation: need >= 2 rows");
    Matrix m;
    if (center) {
        const Eigen::RowVectorXd mu = x.colwise().mean();
        const Matrix d = x.rowwise() - mu;
        m = d.transpose() * d;
    } else {
        m = x.transpose() * x;
    }
    Vector inv_sd(n);
    for (Index i = 0; i < n; ++i) {
        const double v = m(i, i);
        if (!(v > 0.0))
            throw std::runtime_error("sample_correlation: zero-variance column " +
                                     std::to_string(i));
        inv_sd(i) = 1.0 / std::sqrt(v);
    }
    Matrix r = inv_sd.asDiagonal() * m * inv_sd.asDiagonal();
    r.diagonal().setOnes();
    return 0.5 * (r + r.transpose());
}

namespace {

// Per-coordinate steps, shrunk until f(theta +/- h e_i) is finite.
Vector finite_steps(const LoglikTerms& loglik, const Vector& theta, double rel_step) {
    const Index k = theta.size();
    Vector h(k);
    for (Index i = 0; i < k; ++i) {
        double step = rel_step * std::max(std::abs(theta(i)), 1.0);
        bool ok = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Vector tp = theta, tm = theta;
            tp(i) += step;
            tm(i) -= step;
            const Vector fp = loglik(tp);
            const Vector fm = loglik(tm);
            if (fp.allFinite() && fm.allFinite()) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok)
            throw std::runtime_error(
                "sandwich_covariance: log-likelihood not finite near theta, coordinate " +
                std::to_string(i));
        h(i) = step;
    }
    return h;
}

}  // namespace

Matrix sandwich_covariance(const LoglikTerms& loglik, VecRef theta, double rel_step) {
    const Index k = theta.size();
    const Vector theta0 = theta;
    const Vector f0 = loglik(theta0);
    if (!f0.allFinite())
        throw std::runtime_error("sandwich_covariance: log-likelihood not finite at theta");
    const Index t_obs = f0.size();
    const Vector h = finite_steps(loglik, theta0, rel_step);

    // Per-observation scores by central differences.
    Matrix scores(t_obs, k);
    std::vector<Vector> plus(k), minus(k);
    for (Index i = 0; i < k; ++i) {
        Vector tp = theta0, tm = theta0;
        tp(i) += h(i);
        tm(i) -= h(i);
        plus[i] = loglik(tp);
        minus[i] = loglik(tm);
        scores.col(i) = (plus[i] - minus[i]) / (2.0 * h(i));
    }
    const Matrix opg = scores.transpose() * scores;

    // Hessian of the total log-likelihood.
    const double total0 = f0.sum();
    Matrix hess(k, k);
    for (Index i = 0; i < k; ++i)
        hess(i, i) = (plus[i].sum() - 2.0 * total0 + minus[i].sum()) / (h(i) * h(i));
    for (Index i = 0; i < k; ++i) {
        for (Index j = i + 1; j < k; ++j) {
            Vector tpp = theta0, tpm = theta0, tmp = theta0, tmm = theta0;
            tpp(i) += h(i); tpp(j) += h(j);
            tpm(i) += h(i); tpm(j) -= h(j);
            tmp(i) -= h(i); tmp(j) += h(j);
            tmm(i) -= h(i); tmm(j) -= h(j);
            const double fpp = loglik(tpp).sum();
            const double fpm = loglik(tpm).sum();
            const double fmp = loglik(tmp).sum();
            const double fmm = loglik(tmm).sum();
            if (!std::isfinite(fpp) || !std::isfinite(fpm) || !std::isfinite(fmp) ||
                !std::isfinite(fmm))
                throw std::runtime_error("sandwich_covariance: non-finite cross term");
            hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h(i) * h(j));
        }
    }

    Eigen::FullPivLU<Matrix> lu(hess);
    if (!lu.isInvertible())
        throw std::runtime_error(
            "sandwich_covariance: singular Hessian; review parameter identification");
    const Matrix hinv = lu.inverse();
    Matrix cov = hinv * opg * hinv;
    return 0.5 * (cov + cov.transpose());
}

Vector sandwich_standard_errors(const LoglikTerms& loglik, VecRef theta, double rel_step) {
    const Matrix cov = sandwich_covariance(loglik, theta, rel_step);
    return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace ccm
