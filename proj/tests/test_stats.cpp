#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ccm/stats.hpp"

using namespace ccm;

TEST_CASE("chi-squared quantile reproduces the tabulated 5% critical values") {
    // Lags 1..10, 15, 20 of the usual chi2_{0.05} row.
    const double expected[] = {3.8415,  5.9915,  7.8147,  9.4877, 11.0705, 12.5916,
                               14.0671, 15.5073, 16.9190, 18.3070};
    for (int df = 1; df <= 10; ++df)
        CHECK(std::abs(chi2_quantile(0.95, df) - expected[df - 1]) < 5e-4);
    CHECK(std::abs(chi2_quantile(0.95, 15) - 24.9958) < 5e-4);
    CHECK(std::abs(chi2_quantile(0.95, 20) - 31.4104) < 5e-4);
}

TEST_CASE("chi-squared CDF/quantile round trip and monotonicity") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (int trial = 0; trial < 50; ++trial) {
        const int df = 1 + static_cast<int>(rng() % 30);
        const double p = unif(rng);
        const double q = chi2_quantile(p, df);
        CHECK(chi2_cdf(q, df) == doctest::Approx(p).epsilon(1e-8));
    }
    for (int df = 1; df <= 12; ++df)
        CHECK(chi2_quantile(0.95, df) < chi2_quantile(0.975, df));
    for (int df = 1; df <= 12; ++df)
        CHECK(chi2_quantile(0.95, df) < chi2_quantile(0.95, df + 1));
    CHECK_THROWS_AS(chi2_quantile(0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(chi2_quantile(0.5, 0), std::invalid_argument);
}

TEST_CASE("pearson correlation degenerate and exact cases") {
    Vector x(5), y(5);
    x << 1, 2, 3, 4, 5;
    y = 2.0 * x;
    CHECK(pearson_correlation(x, y) == doctest::Approx(1.0));
    CHECK(pearson_correlation(x, -y) == doctest::Approx(-1.0));
    Vector flat = Vector::Constant(5, 3.0);
    CHECK(std::isnan(pearson_correlation(x, flat)));
}

TEST_CASE("sample correlation is symmetric PSD with unit diagonal") {
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss;
    Matrix x(300, 4);
    for (Index t = 0; t < x.rows(); ++t)
        for (Index i = 0; i < x.cols(); ++i) x(t, i) = gauss(rng);
    const Matrix r = sample_correlation(x);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    for (Index i = 0; i < 4; ++i) CHECK(r(i, i) == doctest::Approx(1.0));
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(r).eigenvalues();
    CHECK(eig.minCoeff() >= -1e-10);
}

TEST_CASE("sandwich standard error matches the iid Gaussian mean oracle") {
    std::mt19937 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.7);
    const Index t_obs = 4000;
    Vector x(t_obs);
    for (Index t = 0; t < t_obs; ++t) x(t) = 0.3 + gauss(rng);

    LoglikTerms terms = [&x](const Vector& theta) {
        const double mu = theta(0);
        return Vector(-0.5 * (x.array() - mu).square());
    };
    Vector theta(1);
    theta << x.mean();
    const Vector se = sandwich_standard_errors(terms, theta);
    const double sd = std::sqrt((x.array() - x.mean()).square().sum() / (t_obs - 1));
    const double oracle = sd / std::sqrt(static_cast<double>(t_obs));
    CHECK(se(0) == doctest::Approx(oracle).epsilon(0.10));
}

TEST_CASE("robust and inverse-Hessian standard errors agree under correct specification") {
    std::mt19937 rng(13);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Index t_obs = 6000;
    Vector x(t_obs);
    for (Index t = 0; t < t_obs; ++t) x(t) = 1.0 + 0.8 * gauss(rng);

    LoglikTerms terms = [&x](const Vector& theta) {
        const double mu = theta(0);
        const double sigma = theta(1);
        if (!(sigma > 0.0)) return Vector(Vector::Constant(x.size(), std::nan("")));
        return Vector(-std::log(sigma) - 0.5 * ((x.array() - mu) / sigma).square());
    };
    const double mu_hat = x.mean();
    const double sigma_hat = std::sqrt((x.array() - mu_hat).square().mean());
    Vector theta(2);
    theta << mu_hat, sigma_hat;
    const Vector robust = sandwich_standard_errors(terms, theta);

    // Inverse-Hessian oracle computed directly here.
    auto total = [&](double a, double b) {
        Vector th(2);
        th << a, b;
        return terms(th).sum();
    };
    const double h0 = 1e-4 * std::max(std::abs(theta(0)), 1.0);
    const double h1 = 1e-4 * std::max(std::abs(theta(1)), 1.0);
    Matrix hess(2, 2);
    hess(0, 0) = (total(theta(0) + h0, theta(1)) - 2 * total(theta(0), theta(1)) +
                  total(theta(0) - h0, theta(1))) /
                 (h0 * h0);
    hess(1, 1) = (total(theta(0), theta(1) + h1) - 2 * total(theta(0), theta(1)) +
                  total(theta(0), theta(1) - h1)) /
                 (h1 * h1);
    hess(0, 1) = hess(1, 0) =
        (total(theta(0) + h0, theta(1) + h1) - total(theta(0) + h0, theta(1) - h1) -
         total(theta(0) - h0, theta(1) + h1) + total(theta(0) - h0, theta(1) - h1)) /
        (4 * h0 * h1);
    const Matrix inv_hess = (-hess).inverse();
    for (Index i = 0; i < 2; ++i) {
        CHECK(robust(i) >= 0.0);
        CHECK(robust(i) == doctest::Approx(std::sqrt(inv_hess(i, i))).epsilon(0.15));
    }
}

TEST_CASE("sandwich covariance rejects a flat direction") {
    Vector x = Vector::LinSpaced(50, 0.0, 1.0);
    LoglikTerms terms = [&x](const Vector& theta) {
        return Vector(-0.5 * (x.array() - theta(0)).square());  // theta(1) unused
    };
    Vector theta(2);
    theta << 0.5, 0.0;
    CHECK_THROWS_AS(sandwich_covariance(terms, theta), std::runtime_error);
}
