#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ccm/corrmodels.hpp"
#include "ccm/stats.hpp"

using namespace ccm;

namespace {

Matrix equicorr(Index n, double rho) {
    Matrix r = Matrix::Constant(n, n, rho);
    r.diagonal().setOnes();
    return r;
}

Matrix random_correlation(Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.3, 2.8);
    Vector angles(n * (n - 1) / 2);
    for (Index i = 0; i < angles.size(); ++i) angles(i) = unif(rng);
    return angles_to_correlation(angles, n);
}

Matrix random_residuals(Index t_obs, Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Matrix x(t_obs, n);
    for (Index t = 0; t < t_obs; ++t)
        for (Index i = 0; i < n; ++i) x(t, i) = gauss(rng);
    return x;
}

ExogenousSeries make_exog(const Vector& values) {
    ExogenousSeries exog;
    exog.values = values;
    exog.dates.resize(static_cast<std::size_t>(values.size()), "");
    exog.sample_mean = values.mean();
    return exog;
}

RegimeCalendar make_calendar(const std::vector<int>& dummy) {
    RegimeCalendar cal;
    cal.dummy = dummy;
    cal.dates.resize(dummy.size(), "");
    return cal;
}

// Naive per-t Eq.-(7) loop written independently of the library recursion.
std::vector<Matrix> naive_dcc_q(const DccParams& p, const Matrix& eps,
                                const Vector* x_lagged, const std::vector<int>* dummy,
                                const Matrix& rbar, double xbar) {
    const Index t_obs = eps.rows();
    const Index n = eps.cols();
    std::vector<Matrix> q(static_cast<std::size_t>(t_obs));
    q[0] = rbar;
    for (Index t = 1; t < t_obs; ++t) {
        const int d = dummy ? ((*dummy)[static_cast<std::size_t>(t)] == 1 ? 0 : 1) : 0;
        Matrix qt = Matrix::Zero(n, n);
        Matrix qt_prev_sqrt = Matrix::Zero(n, n);
        for (Index i = 0; i < n; ++i)
            qt_prev_sqrt(i, i) = std::sqrt(q[static_cast<std::size_t>(t - 1)](i, i));
        const Matrix outer = qt_prev_sqrt * eps.row(t - 1).transpose() *
                             eps.row(t - 1) * qt_prev_sqrt;
        const double x = x_lagged ? (*x_lagged)(t) : 0.0;
        qt = (1.0 - p.a(d) - p.b(d) - p.psi(d) * xbar) * rbar + p.a(d) * outer +
             p.b(d) * q[static_cast<std::size_t>(t - 1)] + p.psi(d) * x * rbar;
        q[static_cast<std::size_t>(t)] = qt;
    }
    return q;
}

void check_path_valid(const CorrelationPath& path) {
    for (const Matrix& r : path.matrices) {
        CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((r.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
        const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(r).eigenvalues();
        CHECK(eig.minCoeff() > 0.0);
    }
}

}  // namespace

TEST_CASE("parameter counts match the nine-model table at N = 5") {
    const Index n = 5;
    CHECK(ModelSpec{Family::CCC}.parameter_count(n) == 10);
    CHECK(ModelSpec{Family::CCC_PE}.parameter_count(n) == 20);
    CHECK(ModelSpec{Family::STCC_TUE}.parameter_count(n) == 22);
    CHECK(ModelSpec{Family::STCC_TUPE}.parameter_count(n) == 44);
    CHECK(ModelSpec{Family::DCC}.parameter_count(n) == 2);
    CHECK(ModelSpec{Family::DCC_TUE}.parameter_count(n) == 3);
    CHECK(ModelSpec{Family::DCC_TUPE}.parameter_count(n) == 6);
    CHECK(ModelSpec{Family::DCC_TUPE_PSI}.parameter_count(n) == 4);
    CHECK(ModelSpec{Family::DCC_PE}.parameter_count(n) == 4);
}

TEST_CASE("model names parse back to themselves") {
    for (const ModelSpec& spec : ModelSpec::all()) {
        CHECK(ModelSpec::parse(spec.name()).family == spec.family);
        const Vector flat = Vector::Zero(spec.parameter_count(3));
        CHECK(static_cast<Index>(natural_param_names(spec, 3).size()) == flat.size());
    }
    CHECK(ModelSpec::parse("dcc_tupe_psi").family == Family::DCC_TUPE_PSI);
    CHECK_THROWS_AS(ModelSpec::parse("GARCH"), std::invalid_argument);
}

TEST_CASE("logistic transition anchors") {
    CHECK(logistic_transition(-0.3, {4.0, -0.3}) == 0.5);  // G(c) = 1/2 exactly
    // Published smooth-transition estimates evaluated at x = 0.
    const TransitionParams table5{6.7608, -0.0559};
    const double expected = 1.0 / (1.0 + std::exp(-6.7608 * (0.0 - (-0.0559))));
    CHECK(logistic_transition(0.0, table5) == doctest::Approx(expected).epsilon(1e-12));
    // Step-function limit.
    CHECK(logistic_transition(0.01, {1e6, 0.0}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(logistic_transition(0.0, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("logistic transition is strictly increasing away from saturation") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const TransitionParams tp{0.1 + 30.0 * std::abs(unif(rng)), unif(rng)};
        const double x1 = unif(rng);
        const double x2 = x1 + 1e-3 + std::abs(unif(rng));
        const double g1 = logistic_transition(x1, tp);
        const double g2 = logistic_transition(x2, tp);
        CHECK(g2 >= g1);
        if (g1 > 1e-12 && g2 < 1.0 - 1e-12) CHECK(g2 > g1);
        CHECK(g1 > 0.0);
        CHECK(g2 <= 1.0);
    }
}

TEST_CASE("triangular map basics") {
    Vector one(1);
    one << 0.37;
    const Matrix r2 = triangular_to_correlation(one);
    CHECK(r2(1, 0) == doctest::Approx(0.37).epsilon(1e-15));

    const Matrix r_eye = triangular_to_correlation(Vector::Zero(10));
    CHECK((r_eye - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);

    Vector bad(3);
    bad << 0.9, 0.9, 0.9;  // row 2 norm exceeds one
    CHECK_THROWS_AS(triangular_to_correlation(bad), std::invalid_argument);
}

TEST_CASE("triangular map agrees with an explicit P P' product") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unif(-0.4, 0.4);
    const Index n = 5;
    Vector free_params(10);
    for (Index i = 0; i < 10; ++i) free_params(i) = unif(rng);
    const Matrix r = triangular_to_correlation(free_params);

    Matrix p = Matrix::Zero(n, n);
    p(0, 0) = 1.0;
    Index k = 0;
    for (Index i = 1; i < n; ++i) {
        double ss = 0.0;
        for (Index j = 0; j < i; ++j) {
            p(i, j) = free_params(k++);
            ss += p(i, j) * p(i, j);
        }
        p(i, i) = std::sqrt(1.0 - ss);
    }
    const Matrix oracle = p * p.transpose();
    CHECK((r - oracle).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((r.diagonal().array() - 1.0).abs().maxCoeff() < 1e-14);
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(r).eigenvalues();
    CHECK(eig.minCoeff() >= -1e-12);
}

TEST_CASE("angle parametrization round-trips positive definite correlation matrices") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        const Index n = 2 + static_cast<Index>(rng() % 4);
        const Matrix r = random_correlation(n, rng);
        const Matrix back = angles_to_correlation(correlation_to_angles(r), n);
        CHECK((r - back).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("correlation log-likelihood closed forms and oracle") {
    std::mt19937_64 rng(4);
    const Index t_obs = 50;
    const Index n = 3;
    const Matrix eps = random_residuals(t_obs, n, rng);

    CorrelationPath eye_path;
    eye_path.matrices.assign(t_obs, Matrix::Identity(n, n));
    const double ll_eye = correlation_loglik(eye_path, eps);
    const double expected_eye = -0.5 * t_obs * n * std::log(2.0 * M_PI) -
                                0.5 * eps.array().square().sum();
    CHECK(ll_eye == doctest::Approx(expected_eye).epsilon(1e-12));

    // Scalar reduction.
    const Matrix eps1 = eps.col(0);
    CorrelationPath path1;
    path1.matrices.assign(t_obs, Matrix::Identity(1, 1));
    CHECK(correlation_loglik(path1, eps1) ==
          doctest::Approx(-0.5 * t_obs * std::log(2.0 * M_PI) -
                          0.5 * eps1.array().square().sum())
              .epsilon(1e-12));

    // Random instance against a naive inverse/determinant loop.
    CorrelationPath path;
    for (Index t = 0; t < t_obs; ++t) path.matrices.push_back(random_correlation(n, rng));
    double naive = -0.5 * t_obs * n * std::log(2.0 * M_PI);
    for (Index t = 0; t < t_obs; ++t) {
        const Matrix& r = path.matrices[static_cast<std::size_t>(t)];
        naive -= 0.5 * std::log(r.determinant());
        naive -= 0.5 * (eps.row(t) * r.inverse() * eps.row(t).transpose())(0, 0);
    }
    CHECK(correlation_loglik(path, eps) == doctest::Approx(naive).epsilon(1e-8));

    CorrelationPath singular = path;
    singular.matrices[7] = Matrix::Ones(n, n);
    CHECK_THROWS_WITH_AS(correlation_loglik(singular, eps),
                         doctest::Contains("t = 7"), std::runtime_error);
}

TEST_CASE("dcc recursion fixed points") {
    std::mt19937_64 rng(5);
    const Index t_obs = 60;
    const Index n = 3;
    const Matrix eps = random_residuals(t_obs, n, rng);
    const Matrix rbar = equicorr(n, 0.4);

    DccParams zero;
    zero.restriction = Family::DCC;
    const DccRecursionResult idle = dcc_recursion(zero, eps, nullptr, nullptr, rbar);
    for (const Matrix& r : idle.path.matrices)
        CHECK((r - rbar).cwiseAbs().maxCoeff() < 1e-12);

    DccParams ar_only;
    ar_only.restriction = Family::DCC;
    ar_only.b.setConstant(0.9);
    const DccRecursionResult fixed = dcc_recursion(ar_only, eps, nullptr, nullptr, rbar);
    for (const Matrix& q : fixed.q) CHECK((q - rbar).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dcc recursion matches the naive loop at published parameter values") {
    std::mt19937_64 rng(6);
    const Index t_obs = 150;
    const Index n = 4;
    const Matrix eps = random_residuals(t_obs, n, rng);
    const Matrix rbar = random_correlation(n, rng);

    DccParams p;  // a_1 = 0.1908, b_1 = 0.7907 from the plain-DCC estimates
    p.restriction = Family::DCC;
    p.a.setConstant(0.1908);
    p.b.setConstant(0.7907);
    const DccRecursionResult rec = dcc_recursion(p, eps, nullptr, nullptr, rbar);
    const std::vector<Matrix> oracle = naive_dcc_q(p, eps, nullptr, nullptr, rbar, 0.0);
    for (Index t = 0; t < t_obs; ++t) {
        CHECK((rec.q[static_cast<std::size_t>(t)] - oracle[static_cast<std::size_t>(t)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    }
    check_path_valid(rec.path);
}

TEST_CASE("dcc recursion with regime and exogenous terms matches the naive loop") {
    std::mt19937_64 rng(7);
    const Index t_obs = 120;
    const Index n = 3;
    const Matrix eps = random_residuals(t_obs, n, rng);
    const Matrix rbar = equicorr(n, 0.35);
    Vector x(t_obs);
    std::uniform_real_distribution<double> unif(0.01, 0.5);
    for (Index t = 0; t < t_obs; ++t) x(t) = unif(rng);
    const ExogenousSeries exog = make_exog(x);
    std::vector<int> dummy(static_cast<std::size_t>(t_obs));
    for (Index t = 0; t < t_obs; ++t) dummy[static_cast<std::size_t>(t)] = (t / 30) % 2;
    const RegimeCalendar cal = make_calendar(dummy);

    DccParams p;
    p.restriction = Family::DCC_TUPE;
    p.a = Eigen::Vector2d(0.05, 0.03);
    p.b = Eigen::Vector2d(0.90, 0.93);
    p.psi = Eigen::Vector2d(0.2, 0.1);
    const DccRecursionResult rec = dcc_recursion(p, eps, &exog, &cal, rbar);

    const Vector x_lagged = transition_input(exog);
    const std::vector<Matrix> oracle =
        naive_dcc_q(p, eps, &x_lagged, &dummy, rbar, exog.sample_mean);
    for (Index t = 0; t < t_obs; ++t)
        CHECK((rec.q[static_cast<std::size_t>(t)] - oracle[static_cast<std::size_t>(t)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    check_path_valid(rec.path);

    // All-regime-1 calendar equals the suffix-1 recursion with no regime logic.
    const RegimeCalendar all_one = make_calendar(std::vector<int>(t_obs, 1));
    DccParams suffix1 = p;
    suffix1.a.setConstant(p.a(0));
    suffix1.b.setConstant(p.b(0));
    suffix1.psi.setConstant(p.psi(0));
    const DccRecursionResult with_regime = dcc_recursion(p, eps, &exog, &all_one, rbar);
    const DccRecursionResult without = dcc_recursion(suffix1, eps, &exog, nullptr, rbar);
    for (Index t = 0; t < t_obs; ++t)
        CHECK((with_regime.path.matrices[static_cast<std::size_t>(t)] -
               without.path.matrices[static_cast<std::size_t>(t)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);

    DccParams invalid = p;
    invalid.b.setConstant(0.999);
    CHECK_THROWS_AS(dcc_recursion(invalid, eps, &exog, &cal, rbar),
                    std::invalid_argument);
}

TEST_CASE("correlation targeting fixed point") {
    std::mt19937_64 rng(8);
    const Index t_obs = 400;
    const Index n = 3;
    const Matrix eps = random_residuals(t_obs, n, rng);

    DccParams zero;
    zero.restriction = Family::DCC;
    const TargetingResult idle = correlation_targeting(eps, zero, nullptr, nullptr);
    CHECK(idle.converged);
    CHECK(idle.iterations <= 2);
    const Matrix zero_mean_corr = sample_correlation(eps, false);
    CHECK((idle.rbar - zero_mean_corr).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("correlation targeting recovers the simulated unconditional matrix") {
    SimConfig config;
    config.spec = ModelSpec{Family::DCC};
    config.n_assets = 3;
    config.params.family = Family::DCC;
    config.params.dcc.restriction = Family::DCC;
    config.params.dcc.a.setConstant(0.05);
    config.params.dcc.b.setConstant(0.90);
    config.params.rbar = equicorr(3, 0.45);
    const SimulatedData sim = simulate(config, 20000, 99);

    const TargetingResult targeting =
        correlation_targeting(sim.true_residuals, config.params.dcc, nullptr, nullptr);
    CHECK(targeting.converged);
    CHECK((targeting.rbar - config.params.rbar).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("build_path family algebra") {
    std::mt19937_64 rng(9);
    const Index t_obs = 80;
    const Index n = 3;
    const Matrix eps = random_residuals(t_obs, n, rng);
    std::vector<int> dummy(static_cast<std::size_t>(t_obs), 1);
    for (Index t = t_obs / 2; t < t_obs; ++t) dummy[static_cast<std::size_t>(t)] = 0;
    const RegimeCalendar cal = make_calendar(dummy);
    const ExogenousSeries exog = make_exog(Vector::Constant(t_obs, 0.2));

    CorrData data;
    data.residuals = eps;
    data.regimes = &cal;
    data.exog = &exog;

    // CCC-PE with equal matrices collapses to CCC.
    CorrParams ccc;
    ccc.family = Family::CCC;
    ccc.R = {equicorr(n, 0.5)};
    const CorrelationPath ccc_path = build_path(ModelSpec{Family::CCC}, ccc, data);
    CorrParams pe;
    pe.family = Family::CCC_PE;
    pe.R = {equicorr(n, 0.5), equicorr(n, 0.5)};
    const CorrelationPath pe_path = build_path(ModelSpec{Family::CCC_PE}, pe, data);
    for (Index t = 0; t < t_obs; ++t)
        CHECK((ccc_path.matrices[static_cast<std::size_t>(t)] -
               pe_path.matrices[static_cast<std::size_t>(t)])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);

    // STCC-TUE at x == c blends to the midpoint.
    CorrParams stcc;
    stcc.family = Family::STCC_TUE;
    stcc.R = {equicorr(n, 0.7), equicorr(n, 0.1)};
    stcc.transition = {{5.0, 0.2}};
    const CorrelationPath mid = build_path(ModelSpec{Family::STCC_TUE}, stcc, data);
    const Matrix blend = 0.5 * (stcc.R[0] + stcc.R[1]);
    for (const Matrix& r : mid.matrices)
        CHECK((r - blend).cwiseAbs().maxCoeff() < 1e-12);
    check_path_valid(mid);

    // STCC-TUPE with an all-ones dummy equals STCC-TUE with the regime-1 pieces.
    std::mt19937_64 rng2(10);
    Vector x(t_obs);
    std::uniform_real_distribution<double> unif(0.01, 1.0);
    for (Index t = 0; t < t_obs; ++t) x(t) = unif(rng2);
    const ExogenousSeries vary = make_exog(x);
    const RegimeCalendar ones = make_calendar(std::vector<int>(t_obs, 1));
    CorrData data2;
    data2.residuals = eps;
    data2.exog = &vary;
    data2.regimes = &ones;
    CorrParams tupe;
    tupe.family = Family::STCC_TUPE;
    tupe.R = {equicorr(n, 0.65), equicorr(n, 0.15), equicorr(n, 0.4), equicorr(n, -0.1)};
    tupe.transition = {{7.0, 0.3}, {2.0, 0.8}};
    const CorrelationPath tupe_path =
        build_path(ModelSpec{Family::STCC_TUPE}, tupe, data2);
    CorrParams tue;
    tue.family = Family::STCC_TUE;
    tue.R = {tupe.R[0], tupe.R[1]};
    tue.transition = {tupe.transition[0]};
    const CorrelationPath tue_path = build_path(ModelSpec{Family::STCC_TUE}, tue, data2);
    for (Index t = 0; t < t_obs; ++t)
        CHECK((tupe_path.matrices[static_cast<std::size_t>(t)] -
               tue_path.matrices[static_cast<std::size_t>(t)])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);

    CorrData no_exog;
    no_exog.residuals = eps;
    no_exog.regimes = &cal;
    CHECK_THROWS_AS(build_path(ModelSpec{Family::STCC_TUE}, stcc, no_exog),
                    std::invalid_argument);
}

TEST_CASE("natural parameter vector round-trips for every family") {
    std::mt19937_64 rng(11);
    const Index n = 3;
    for (const ModelSpec& spec : ModelSpec::all()) {
        CorrParams params;
        params.family = spec.family;
        for (int m = 0; m < spec.n_corr_matrices(); ++m)
            params.R.push_back(random_correlation(n, rng));
        if (spec.family == Family::STCC_TUE) params.transition = {{3.0, 0.1}};
        if (spec.family == Family::STCC_TUPE)
            params.transition = {{3.0, 0.1}, {8.0, 0.4}};
        params.dcc.restriction = spec.family;
        params.dcc.a = Eigen::Vector2d(0.04, 0.06);
        params.dcc.b = Eigen::Vector2d(0.9, 0.88);
        params.dcc.psi = Eigen::Vector2d(0.1, 0.2);
        params.dcc.apply_restriction();

        const Vector flat = pack_natural(params, n);
        CHECK(flat.size() == spec.parameter_count(n));
        const CorrParams back = unpack_natural(spec, flat, n);
        const Vector flat2 = pack_natural(back, n);
        CHECK((flat - flat2).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("simulate is reproducible and honors the requested DGP") {
    SimConfig config;
    config.spec = ModelSpec{Family::CCC};
    config.n_assets = 2;
    config.params.family = Family::CCC;
    config.params.R = {equicorr(2, 0.0)};
    const SimulatedData a = simulate(config, 2000, 4242);
    const SimulatedData b = simulate(config, 2000, 4242);
    CHECK((a.panel.returns - b.panel.returns).cwiseAbs().maxCoeff() == 0.0);

    // Zero-correlation DGP: cross-correlation inside the CLT band.
    const double rho_hat =
        pearson_correlation(a.true_residuals.col(0), a.true_residuals.col(1));
    CHECK(std::abs(rho_hat) < 3.0 / std::sqrt(2000.0));
    check_path_valid(a.true_path);
    CHECK(a.panel.dates.front() == "2015-01-05");
}

TEST_CASE("CCC estimate recovers a simulated constant correlation") {
    SimConfig config;
    config.spec = ModelSpec{Family::CCC};
    config.n_assets = 2;
    config.params.family = Family::CCC;
    config.params.R = {equicorr(2, 0.5)};
    const SimulatedData sim = simulate(config, 5000, 31);

    CorrData data;
    data.residuals = sim.true_residuals;
    const CorrFitResult fit = estimate(ModelSpec{Family::CCC}, data);
    CHECK(fit.converged);
    const double rho_hat = fit.param_values(0);
    CHECK(std::abs(rho_hat - 0.5) < 0.03);
    const Matrix sample = sample_correlation(sim.true_residuals, false);
    CHECK(std::abs(rho_hat - sample(1, 0)) < 0.02);
    CHECK(fit.robust_se(0) > 0.0);
    check_path_valid(fit.path);
}

TEST_CASE("DCC-TUE estimate puts psi near zero when the DGP has none") {
    SimConfig config;
    config.spec = ModelSpec{Family::DCC};
    config.n_assets = 3;
    config.params.family = Family::DCC;
    config.params.dcc.restriction = Family::DCC;
    config.params.dcc.a.setConstant(0.06);
    config.params.dcc.b.setConstant(0.90);
    config.params.rbar = equicorr(3, 0.4);
    const SimulatedData sim = simulate(config, 4000, 57);

    CorrData data;
    data.residuals = sim.true_residuals;
    data.exog = &sim.exog;
    const CorrFitResult fit = estimate(ModelSpec{Family::DCC_TUE}, data);
    CHECK(fit.converged);
    const double psi_hat = fit.param_values(2);
    const double psi_se = fit.robust_se(2);
    CHECK(psi_hat >= 0.0);
    CHECK(psi_hat <= 2.0 * std::max(psi_se, 1e-3));
    check_path_valid(fit.path);
}

TEST_CASE("nesting monotonicity holds for the tabulated nested pairs") {
    SimConfig config = [] {
        SimConfig c;
        c.spec = ModelSpec{Family::DCC_TUPE};
        c.n_assets = 3;
        c.params.family = Family::DCC_TUPE;
        c.params.dcc.restriction = Family::DCC_TUPE;
        c.params.dcc.a = Eigen::Vector2d(0.05, 0.04);
        c.params.dcc.b = Eigen::Vector2d(0.92, 0.94);
        c.params.dcc.psi = Eigen::Vector2d(0.08, 0.04);
        c.params.rbar = equicorr(3, 0.4);
        return c;
    }();
    const SimulatedData sim = simulate(config, 900, 1234);

    std::vector<CorrFitResult> fits;
    for (const ModelSpec& spec : ModelSpec::all()) {
        CorrData data;
        data.residuals = sim.true_residuals;
        data.exog = spec.uses_exogenous() ? &sim.exog : nullptr;
        data.regimes = spec.uses_regime() ? &sim.calendar : nullptr;
        EstimateOptions options;
        options.seed = 5;
        options.compute_se = false;
        fits.push_back(estimate(spec, data, options));
        CHECK(fits.back().converged);
        check_path_valid(fits.back().path);
    }
    const std::vector<std::pair<Family, Family>> pairs = {
        {Family::STCC_TUE, Family::STCC_TUPE}, {Family::DCC, Family::DCC_TUPE},
        {Family::DCC_TUE, Family::DCC_TUPE},   {Family::DCC_TUPE_PSI, Family::DCC_TUPE},
        {Family::DCC_PE, Family::DCC_TUPE},    {Family::DCC_TUE, Family::DCC_TUPE_PSI},
        {Family::DCC, Family::DCC_TUE},        {Family::DCC, Family::DCC_PE},
        {Family::DCC, Family::DCC_TUPE_PSI},   {Family::CCC, Family::CCC_PE},
    };
    auto loglik_of = [&](Family f) {
        for (const CorrFitResult& fit : fits)
            if (fit.spec.family == f) return fit.loglik;
        throw std::logic_error("fit not found");
    };
    for (const auto& [small, large] : pairs) {
        INFO(ModelSpec{small}.name(), " vs ", ModelSpec{large}.name());
        CHECK(loglik_of(large) >= loglik_of(small) - 1e-6);
    }
}

TEST_CASE("lift embeds restricted parameters without changing the path") {
    std::mt19937_64 rng(12);
    const Index t_obs = 120;
    const Index n = 3;
    const Matrix eps = random_residuals(t_obs, n, rng);
    Vector x(t_obs);
    std::uniform_real_distribution<double> unif(0.05, 0.6);
    for (Index t = 0; t < t_obs; ++t) x(t) = unif(rng);
    const ExogenousSeries exog = make_exog(x);
    std::vector<int> dummy(static_cast<std::size_t>(t_obs));
    for (Index t = 0; t < t_obs; ++t) dummy[static_cast<std::size_t>(t)] = (t < 60) ? 1 : 0;
    const RegimeCalendar cal = make_calendar(dummy);

    CorrData data;
    data.residuals = eps;
    data.exog = &exog;
    data.regimes = &cal;

    // CCC -> STCC_TUE keeps a constant path.
    CorrParams ccc;
    ccc.family = Family::CCC;
    ccc.R = {equicorr(n, 0.3)};
    CorrData ccc_data;
    ccc_data.residuals = eps;
    const double base =
        correlation_loglik(build_path(ModelSpec{Family::CCC}, ccc, ccc_data), eps);
    const CorrParams lifted = lift_params(ccc, Family::STCC_TUE);
    const double lifted_ll =
        correlation_loglik(build_path(ModelSpec{Family::STCC_TUE}, lifted, data), eps);
    CHECK(lifted_ll == doctest::Approx(base).epsilon(1e-12));

    // DCC -> DCC_TUPE keeps the recursion identical.
    CorrParams dcc;
    dcc.family = Family::DCC;
    dcc.dcc.restriction = Family::DCC;
    dcc.dcc.a.setConstant(0.07);
    dcc.dcc.b.setConstant(0.88);
    dcc.rbar = equicorr(n, 0.4);
    const CorrParams dcc_lifted = lift_params(dcc, Family::DCC_TUPE);
    const CorrelationPath p1 =
        build_path_with_rbar(ModelSpec{Family::DCC}, dcc, ccc_data, dcc.rbar);
    const CorrelationPath p2 =
        build_path_with_rbar(ModelSpec{Family::DCC_TUPE}, dcc_lifted, data, dcc.rbar);
    for (Index t = 0; t < t_obs; ++t)
        CHECK((p1.matrices[static_cast<std::size_t>(t)] -
               p2.matrices[static_cast<std::size_t>(t)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);

    CHECK_THROWS_AS(lift_params(dcc, Family::CCC_PE), std::invalid_argument);
}

TEST_CASE("estimate validates its preconditions") {
    std::mt19937_64 rng(13);
    const Matrix eps = random_residuals(200, 2, rng);
    CorrData data;
    data.residuals = eps;
    CHECK_THROWS_AS(estimate(ModelSpec{Family::STCC_TUE}, data), std::invalid_argument);
    const RegimeCalendar constant = make_calendar(std::vector<int>(200, 1));
    data.regimes = &constant;
    CHECK_THROWS_AS(estimate(ModelSpec{Family::CCC_PE}, data), std::invalid_argument);
}
