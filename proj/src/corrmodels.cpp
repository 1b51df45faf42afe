#include "ccm/corrmodels.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "ccm/optim.hpp"
#include "ccm/stats.hpp"

namespace ccm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kDccCap = 0.9995;   // cap on a + b + psi * xbar
constexpr double kSlopeCap = 500.0;  // STCC slope bound
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
    const double eps = 1e-16;
    p = std::min(std::max(p, eps), 1.0 - eps);
    return std::log(p / (1.0 - p));
}

Index vech_size(Index n) { return n * (n - 1) / 2; }

// ---------------------------------------------------------------------------
// Trading-day generation (civil date arithmetic, weekends skipped)
// ---------------------------------------------------------------------------

long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int& y, int& m, int& d) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += (m <= 2);
}

bool is_weekday(long z) {
    const int wd = static_cast<int>((z + 4) % 7);  // 0 = Sunday
    return wd >= 1 && wd <= 5;
}

std::vector<std::string> trading_days(const std::string& start, Index count) {
    int y = std::stoi(start.substr(0, 4));
    int m = std::stoi(start.substr(5, 2));
    int d = std::stoi(start.substr(8, 2));
    long z = days_from_civil(y, m, d);
    while (!is_weekday(z)) ++z;
    std::vector<std::string> out;
    out.reserve(count);
    char buf[16];
    for (Index t = 0; t < count; ++t) {
        civil_from_days(z, y, m, d);
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
        out.emplace_back(buf);
        do {
            ++z;
        } while (!is_weekday(z));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelSpec
// ---------------------------------------------------------------------------

bool ModelSpec::uses_exogenous() const {
    switch (family) {
        case Family::STCC_TUE:
        case Family::STCC_TUPE:
        case Family::DCC_TUE:
        case Family::DCC_TUPE:
        case Family::DCC_TUPE_PSI:
            return true;
        default:
            return false;
    }
}

bool ModelSpec::uses_regime() const {
    switch (family) {
        case Family::CCC_PE:
        case Family::STCC_TUPE:
        case Family::DCC_TUPE:
        case Family::DCC_TUPE_PSI:
        case Family::DCC_PE:
            return true;
        default:
            return false;
    }
}

bool ModelSpec::is_dcc() const {
    switch (family) {
        case Family::DCC:
        case Family::DCC_TUE:
        case Family::DCC_TUPE:
        case Family::DCC_TUPE_PSI:
        case Family::DCC_PE:
            return true;
        default:
            return false;
    }
}

int ModelSpec::n_corr_matrices() const {
    switch (family) {
        case Family::CCC:
            return 1;
        case Family::CCC_PE:
        case Family::STCC_TUE:
            return 2;
        case Family::STCC_TUPE:
            return 4;
        default:
            return 0;
    }
}

int ModelSpec::parameter_count(Index n_assets) const {
    const int m = static_cast<int>(vech_size(n_assets));
    switch (family) {
        case Family::CCC:
            return m;
        case Family::CCC_PE:
            return 2 * m;
        case Family::STCC_TUE:
            return 2 * m + 2;
        case Family::STCC_TUPE:
            return 4 * m + 4;
        case Family::DCC:
            return 2;
        case Family::DCC_TUE:
            return 3;
        case Family::DCC_TUPE:
            return 6;
        case Family::DCC_TUPE_PSI:
            return 4;
        case Family::DCC_PE:
            return 4;
    }
    return 0;
}

std::string ModelSpec::name() const {
    switch (family) {
        case Family::CCC:
            return "CCC";
        case Family::CCC_PE:
            return "CCC-PE";
        case Family::STCC_TUE:
            return "STCC-TUE";
        case Family::STCC_TUPE:
            return "STCC-TUPE";
        case Family::DCC:
            return "DCC";
        case Family::DCC_TUE:
            return "DCC-TUE";
        case Family::DCC_TUPE:
            return "DCC-TUPE";
        case Family::DCC_TUPE_PSI:
            return "DCC-TUPE-PSI";
        case Family::DCC_PE:
            return "DCC-PE";
    }
    return "?";
}

ModelSpec ModelSpec::parse(const std::string& raw) {
    std::string s;
    for (char c : raw) {
        if (c == '_') c = '-';
        s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    for (const ModelSpec& spec : all())
        if (s == spec.name()) return spec;
    if (s == "DCC-TUPEPSI") return ModelSpec{Family::DCC_TUPE_PSI};
    throw std::invalid_argument("unknown model name: " + raw);
}

const std::vector<ModelSpec>& ModelSpec::all() {
    static const std::vector<ModelSpec> specs = {
        {Family::CCC},      {Family::CCC_PE},   {Family::STCC_TUE},
        {Family::STCC_TUPE},{Family::DCC},      {Family::DCC_TUE},
        {Family::DCC_TUPE}, {Family::DCC_TUPE_PSI}, {Family::DCC_PE},
    };
    return specs;
}

bool is_nested_in(Family restricted, Family unrestricted) {
    if (restricted == unrestricted) return false;
    switch (unrestricted) {
        case Family::CCC_PE:
        case Family::STCC_TUE:
            return restricted == Family::CCC;
        case Family::STCC_TUPE:
            return restricted == Family::CCC || restricted == Family::CCC_PE ||
                   restricted == Family::STCC_TUE;
        case Family::DCC_TUE:
        case Family::DCC_PE:
            return restricted == Family::DCC;
        case Family::DCC_TUPE_PSI:
            return restricted == Family::DCC || restricted == Family::DCC_TUE;
        case Family::DCC_TUPE:
            return restricted == Family::DCC || restricted == Family::DCC_TUE ||
                   restricted == Family::DCC_TUPE_PSI || restricted == Family::DCC_PE;
        default:
            return false;
    }
}

std::vector<Family> nested_parents(Family family) {
    switch (family) {
        case Family::CCC_PE:
        case Family::STCC_TUE:
            return {Family::CCC};
        case Family::STCC_TUPE:
            return {Family::STCC_TUE};
        case Family::DCC_TUE:
        case Family::DCC_PE:
            return {Family::DCC};
        case Family::DCC_TUPE_PSI:
            return {Family::DCC_TUE};
        case Family::DCC_TUPE:
            return {Family::DCC_TUPE_PSI, Family::DCC_PE};
        default:
            return {};
    }
}

// ---------------------------------------------------------------------------
// Transition and DCC parameters
// ---------------------------------------------------------------------------

double logistic_transition(double x, const TransitionParams& params) {
    if (!(params.slope > 0.0))
        throw std::invalid_argument("logistic_transition: slope must be positive");
    return 1.0 / (1.0 + std::exp(-params.slope * (x - params.location)));
}

void DccParams::apply_restriction() {
    switch (restriction) {
        case Family::DCC:
            a(1) = a(0);
            b(1) = b(0);
            psi.setZero();
            break;
        case Family::DCC_TUE:
            a(1) = a(0);
            b(1) = b(0);
            psi(1) = psi(0);
            break;
        case Family::DCC_TUPE_PSI:
            a(1) = a(0);
            b(1) = b(0);
            break;
        case Family::DCC_PE:
            psi.setZero();
            break;
        default:
            break;
    }
}

bool DccParams::valid(double exog_mean) const {
    for (int d = 0; d < 2; ++d) {
        if (!(a(d) >= 0.0) || !(b(d) >= 0.0) || !(psi(d) >= 0.0)) return false;
        if (!(a(d) + b(d) + psi(d) * exog_mean < 1.0)) return false;
    }
    return true;
}

Vector transition_input(const ExogenousSeries& exog) {
    const Index t_obs = exog.values.size();
    Vector out(t_obs);
    out(0) = exog.values(0);
    for (Index t = 1; t < t_obs; ++t) out(t) = exog.values(t - 1);
    return out;
}

// ---------------------------------------------------------------------------
// Correlation parametrizations
// ---------------------------------------------------------------------------

Matrix triangular_to_correlation(VecRef free_params) {
    // Solve m(m-1)/2 = size for m.
    const Index m = static_cast<Index>(
        std::llround(0.5 * (1.0 + std::sqrt(1.0 + 8.0 * free_params.size()))));
    if (vech_size(m) != free_params.size())
        throw std::invalid_argument("triangular_to_correlation: not a triangular count");
    Matrix p = Matrix::Zero(m, m);
    p(0, 0) = 1.0;
    Index k = 0;
    for (Index i = 1; i < m; ++i) {
        double sum_sq = 0.0;
        for (Index j = 0; j < i; ++j) {
            p(i, j) = free_params(k++);
            sum_sq += p(i, j) * p(i, j);
        }
        if (sum_sq > 1.0)
            throw std::invalid_argument(
                "triangular_to_correlation: row norm exceeds 1 at row " + std::to_string(i));
        p(i, i) = std::sqrt(1.0 - sum_sq);
    }
    Matrix r = p * p.transpose();
    r.diagonal().setOnes();
    return 0.5 * (r + r.transpose());
}

Matrix angles_to_correlation(VecRef angles, Index n) {
    if (angles.size() != vech_size(n))
        throw std::invalid_argument("angles_to_correlation: wrong angle count");
    Matrix p = Matrix::Zero(n, n);
    p(0, 0) = 1.0;
    Index k = 0;
    for (Index i = 1; i < n; ++i) {
        double prod = 1.0;
        for (Index j = 0; j < i; ++j) {
            const double th = angles(k++);
            p(i, j) = std::cos(th) * prod;
            prod *= std::sin(th);
        }
        p(i, i) = prod;
    }
    Matrix r = p * p.transpose();
    r.diagonal().setOnes();
    return 0.5 * (r + r.transpose());
}

Vector correlation_to_angles(MatRef correlation) {
    const Index n = correlation.rows();
    Matrix r = correlation;
    Eigen::LLT<Matrix> llt(r);
    for (int blend = 0; blend < 6 && llt.info() != Eigen::Success; ++blend) {
        r = 0.95 * r + 0.05 * Matrix::Identity(n, n);
        r.diagonal().setOnes();
        llt.compute(r);
    }
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("correlation_to_angles: matrix not positive definite");
    const Matrix l = llt.matrixL();
    Vector angles(vech_size(n));
    Index k = 0;
    for (Index i = 1; i < n; ++i) {
        double prod = 1.0;
        for (Index j = 0; j < i; ++j) {
            double c = prod > 1e-14 ? l(i, j) / prod : 0.0;
            c = std::min(std::max(c, -1.0), 1.0);
            const double th = std::acos(c);
            angles(k++) = th;
            prod *= std::sin(th);
        }
    }
    return angles;
}

// ---------------------------------------------------------------------------
// Likelihood kernels
// ---------------------------------------------------------------------------

namespace {

// Per-observation contributions; false when some R_t is unusable.
bool loglik_terms_nothrow(const std::vector<Matrix>& path, MatRef residuals,
                          Vector& terms, Index* bad_t = nullptr) {
    const Index t_obs = residuals.rows();
    const Index n = residuals.cols();
    terms.resize(t_obs);
    const double constant = -0.5 * n * kLog2Pi;
    for (Index t = 0; t < t_obs; ++t) {
        const Matrix& r = path[static_cast<std::size_t>(t)];
        if (!r.allFinite()) {
            if (bad_t) *bad_t = t;
            return false;
        }
        Eigen::LLT<Matrix> llt(r);
        if (llt.info() != Eigen::Success) {
            if (bad_t) *bad_t = t;
            return false;
        }
        const Matrix l = llt.matrixL();
        double ldet = 0.0;
        for (Index i = 0; i < n; ++i) ldet += std::log(l(i, i));
        ldet *= 2.0;
        const Vector e = residuals.row(t).transpose();
        const double quad = e.dot(llt.solve(e));
        terms(t) = constant - 0.5 * (ldet + quad);
        if (!std::isfinite(terms(t))) {
            if (bad_t) *bad_t = t;
            return false;
        }
    }
    return true;
}

}  // namespace

Vector correlation_loglik_terms(const CorrelationPath& path, MatRef residuals) {
    if (static_cast<Index>(path.matrices.size()) != residuals.rows())
        throw std::invalid_argument("correlation_loglik: path/residual length mismatch");
    if (residuals.rows() == 0) throw std::invalid_argument("correlation_loglik: empty data");
    if (path.matrices[0].rows() != residuals.cols())
        throw std::invalid_argument("correlation_loglik: dimension mismatch");
    Vector terms;
    Index bad_t = -1;
    if (!loglik_terms_nothrow(path.matrices, residuals, terms, &bad_t))
        throw std::runtime_error("correlation_loglik: R_t not invertible at t = " +
                                 std::to_string(bad_t));
    return terms;
}

double correlation_loglik(const CorrelationPath& path, MatRef residuals) {
    return correlation_loglik_terms(path, residuals).sum();
}

// ---------------------------------------------------------------------------
// DCC recursion and targeting
// ---------------------------------------------------------------------------

namespace {

int regime_index(const RegimeCalendar* regimes, Index t) {
    if (!regimes) return 0;
    return regimes->dummy[static_cast<std::size_t>(t)] == 1 ? 0 : 1;
}

// Tolerant recursion used by the optimizer and finite-difference probes:
// returns false instead of throwing when the parameters break positivity.
bool dcc_recursion_nothrow(const DccParams& params, MatRef residuals,
                           const Vector* x_lagged, const RegimeCalendar* regimes,
                           const Matrix& rbar, double xbar, std::vector<Matrix>& q,
                           std::vector<Matrix>& r) {
    const Index t_obs = residuals.rows();
    const Index n = residuals.cols();
    for (int d = 0; d < 2; ++d)
        if (!(1.0 - params.a(d) - params.b(d) - params.psi(d) * xbar > 0.0)) return false;
    q.assign(static_cast<std::size_t>(t_obs), Matrix());
    r.assign(static_cast<std::size_t>(t_obs), Matrix());
    q[0] = rbar;
    r[0] = rbar;
    Vector scale(n);
    for (Index t = 1; t < t_obs; ++t) {
        const Matrix& q_prev = q[static_cast<std::size_t>(t - 1)];
        for (Index i = 0; i < n; ++i) {
            const double qd = q_prev(i, i);
            if (!(qd > 0.0) || !std::isfinite(qd)) return false;
            scale(i) = std::sqrt(qd);
        }
        const int d = regime_index(regimes, t);
        const double x_lag = x_lagged ? (*x_lagged)(t) : 0.0;
        const double intercept = 1.0 - params.a(d) - params.b(d) - params.psi(d) * xbar;
        const Vector u = scale.asDiagonal() * residuals.row(t - 1).transpose();
        Matrix qt = (intercept + params.psi(d) * x_lag) * rbar;
        qt.noalias() += params.a(d) * (u * u.transpose());
        qt.noalias() += params.b(d) * q_prev;
        if (!qt.allFinite()) return false;
        for (Index i = 0; i < n; ++i) {
            const double qd = qt(i, i);
            if (!(qd > 0.0)) return false;
            scale(i) = 1.0 / std::sqrt(qd);
        }
        Matrix rt = scale.asDiagonal() * qt * scale.asDiagonal();
        rt.diagonal().setOnes();
        q[static_cast<std::size_t>(t)] = std::move(qt);
        r[static_cast<std::size_t>(t)] = 0.5 * (rt + rt.transpose());
    }
    return true;
}

}  // namespace

DccRecursionResult dcc_recursion(const DccParams& params, MatRef residuals,
                                 const ExogenousSeries* exog,
                                 const RegimeCalendar* regimes, MatRef rbar) {
    const double xbar = exog ? exog->sample_mean : 0.0;
    if (!params.valid(xbar))
        throw std::invalid_argument(
            "dcc_recursion: parameters rejected (non-negative coefficients with "
            "a_d + b_d + psi_d * xbar < 1 required)");
    if (rbar.rows() != residuals.cols() || rbar.cols() != residuals.cols())
        throw std::invalid_argument("dcc_recursion: rbar dimension mismatch");
    if (regimes && static_cast<Index>(regimes->dummy.size()) != residuals.rows())
        throw std::invalid_argument("dcc_recursion: regime calendar length mismatch");
    std::optional<Vector> x_lagged;
    if (exog) {
        if (exog->values.size() != residuals.rows())
            throw std::invalid_argument("dcc_recursion: exogenous series length mismatch");
        x_lagged = transition_input(*exog);
    }
    DccRecursionResult out;
    const Matrix rbar_m = rbar;
    if (!dcc_recursion_nothrow(params, residuals, x_lagged ? &*x_lagged : nullptr, regimes,
                               rbar_m, xbar, out.q, out.path.matrices))
        throw std::runtime_error("dcc_recursion: recursion produced an invalid Q_t");
    out.path.model = ModelSpec{params.restriction};
    return out;
}

TargetingResult correlation_targeting(MatRef residuals, const DccParams& params,
                                      const ExogenousSeries* exog,
                                      const RegimeCalendar* regimes) {
    const double xbar = exog ? exog->sample_mean : 0.0;
    if (!params.valid(xbar))
        throw std::invalid_argument("correlation_targeting: invalid DCC parameters");
    std::optional<Vector> x_lagged;
    if (exog) x_lagged = transition_input(*exog);

    TargetingResult out;
    out.rbar = sample_correlation(residuals, /*center=*/false);
    const Index t_obs = residuals.rows();
    const Index n = residuals.cols();
    std::vector<Matrix> q, r;
    Matrix rescaled(t_obs, n);
    for (int iter = 1; iter <= 50; ++iter) {
        out.iterations = iter;
        if (!dcc_recursion_nothrow(params, residuals, x_lagged ? &*x_lagged : nullptr,
                                   regimes, out.rbar, xbar, q, r))
            throw std::runtime_error("correlation_targeting: recursion failed");
        for (Index t = 0; t < t_obs; ++t) {
            const Matrix& qt = q[static_cast<std::size_t>(t)];
            for (Index i = 0; i < n; ++i)
                rescaled(t, i) = std::sqrt(qt(i, i)) * residuals(t, i);
        }
        const Matrix next = sample_correlation(rescaled, /*center=*/false);
        const double delta = (next - out.rbar).cwiseAbs().maxCoeff();
        out.rbar = next;
        if (delta < 1e-6) {
            out.converged = true;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Path construction
// ---------------------------------------------------------------------------

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_path_inputs(const ModelSpec& spec, const CorrParams& params,
                       const CorrData& data) {
    const Index t_obs = data.residuals.rows();
    require(t_obs >= 1, "build_path: empty residuals");
    if (spec.uses_exogenous()) {
        require(data.exog != nullptr, "build_path: missing exogenous series");
        require(data.exog->values.size() == t_obs,
                "build_path: exogenous series length mismatch");
    }
    if (spec.uses_regime()) {
        require(data.regimes != nullptr, "build_path: missing regime calendar");
        require(static_cast<Index>(data.regimes->dummy.size()) == t_obs,
                "build_path: regime calendar length mismatch");
    }
    if (spec.n_corr_matrices() > 0) {
        require(static_cast<int>(params.R.size()) == spec.n_corr_matrices(),
                "build_path: wrong number of correlation matrices");
        for (const Matrix& r : params.R)
            require(r.rows() == data.residuals.cols() && r.cols() == data.residuals.cols(),
                    "build_path: correlation matrix dimension mismatch");
    }
    if (spec.family == Family::STCC_TUE)
        require(params.transition.size() == 1, "build_path: need one transition pair");
    if (spec.family == Family::STCC_TUPE)
        require(params.transition.size() == 2, "build_path: need two transition pairs");
}

std::vector<Matrix> build_ccc_family_path(const ModelSpec& spec, const CorrParams& params,
                                          const CorrData& data) {
    const Index t_obs = data.residuals.rows();
    std::vector<Matrix> path(static_cast<std::size_t>(t_obs));
    switch (spec.family) {
        case Family::CCC:
            for (auto& m : path) m = params.R[0];
            break;
        case Family::CCC_PE:
            for (Index t = 0; t < t_obs; ++t)
                path[static_cast<std::size_t>(t)] =
                    data.regimes->dummy[static_cast<std::size_t>(t)] == 1 ? params.R[0]
                                                                          : params.R[1];
            break;
        case Family::STCC_TUE: {
            const Vector tin = transition_input(*data.exog);
            for (Index t = 0; t < t_obs; ++t) {
                const double g = logistic_transition(tin(t), params.transition[0]);
                path[static_cast<std::size_t>(t)] =
                    g * params.R[0] + (1.0 - g) * params.R[1];
            }
            break;
        }
        case Family::STCC_TUPE: {
            const Vector tin = transition_input(*data.exog);
            for (Index t = 0; t < t_obs; ++t) {
                const bool rep = data.regimes->dummy[static_cast<std::size_t>(t)] == 1;
                const int base = rep ? 0 : 2;
                const double g =
                    logistic_transition(tin(t), params.transition[rep ? 0 : 1]);
                path[static_cast<std::size_t>(t)] =
                    g * params.R[base] + (1.0 - g) * params.R[base + 1];
            }
            break;
        }
        default:
            throw std::logic_error("build_ccc_family_path: not a CCC-family spec");
    }
    return path;
}

}  // namespace

CorrelationPath build_path_with_rbar(const ModelSpec& spec, const CorrParams& params,
                                     const CorrData& data, MatRef rbar) {
    check_path_inputs(spec, params, data);
    CorrelationPath out;
    out.model = spec;
    if (spec.is_dcc()) {
        out = dcc_recursion(params.dcc, data.residuals,
                            spec.uses_exogenous() ? data.exog : nullptr,
                            spec.uses_regime() ? data.regimes : nullptr, rbar)
                  .path;
        out.model = spec;
    } else {
        out.matrices = build_ccc_family_path(spec, params, data);
    }
    return out;
}

CorrelationPath build_path(const ModelSpec& spec, const CorrParams& params,
                           const CorrData& data) {
    check_path_inputs(spec, params, data);
    if (!spec.is_dcc()) {
        CorrelationPath out;
        out.model = spec;
        out.matrices = build_ccc_family_path(spec, params, data);
        return out;
    }
    Matrix rbar = params.rbar;
    if (rbar.rows() != data.residuals.cols()) {
        rbar = correlation_targeting(data.residuals, params.dcc,
                                     spec.uses_exogenous() ? data.exog : nullptr,
                                     spec.uses_regime() ? data.regimes : nullptr)
                   .rbar;
    }
    return build_path_with_rbar(spec, params, data, rbar);
}

// ---------------------------------------------------------------------------
// Natural parameter vector
// ---------------------------------------------------------------------------

namespace {

void fill_strict_lower(const Matrix& r, Vector& flat, Index& k) {
    for (Index i = 1; i < r.rows(); ++i)
        for (Index j = 0; j < i; ++j) flat(k++) = r(i, j);
}

Matrix matrix_from_strict_lower(VecRef flat, Index& k, Index n) {
    Matrix r = Matrix::Identity(n, n);
    for (Index i = 1; i < n; ++i)
        for (Index j = 0; j < i; ++j) {
            r(i, j) = flat(k++);
            r(j, i) = r(i, j);
        }
    return r;
}

}  // namespace

Vector pack_natural(const CorrParams& params, Index n_assets) {
    const ModelSpec spec{params.family};
    Vector flat(spec.parameter_count(n_assets));
    Index k = 0;
    for (const Matrix& r : params.R) fill_strict_lower(r, flat, k);
    for (const TransitionParams& tp : params.transition) {
        flat(k++) = tp.slope;
        flat(k++) = tp.location;
    }
    switch (params.family) {
        case Family::DCC:
            flat(k++) = params.dcc.a(0);
            flat(k++) = params.dcc.b(0);
            break;
        case Family::DCC_TUE:
            flat(k++) = params.dcc.a(0);
            flat(k++) = params.dcc.b(0);
            flat(k++) = params.dcc.psi(0);
            break;
        case Family::DCC_TUPE:
            for (int d = 0; d < 2; ++d) {
                flat(k++) = params.dcc.a(d);
                flat(k++) = params.dcc.b(d);
                flat(k++) = params.dcc.psi(d);
            }
            break;
        case Family::DCC_TUPE_PSI:
            flat(k++) = params.dcc.a(0);
            flat(k++) = params.dcc.b(0);
            flat(k++) = params.dcc.psi(0);
            flat(k++) = params.dcc.psi(1);
            break;
        case Family::DCC_PE:
            for (int d = 0; d < 2; ++d) {
                flat(k++) = params.dcc.a(d);
                flat(k++) = params.dcc.b(d);
            }
            break;
        default:
            break;
    }
    return flat;
}

CorrParams unpack_natural(const ModelSpec& spec, VecRef flat, Index n_assets) {
    if (flat.size() != spec.parameter_count(n_assets))
        throw std::invalid_argument("unpack_natural: wrong parameter count");
    CorrParams params;
    params.family = spec.family;
    Index k = 0;
    for (int m = 0; m < spec.n_corr_matrices(); ++m)
        params.R.push_back(matrix_from_strict_lower(flat, k, n_assets));
    const int n_transitions =
        spec.family == Family::STCC_TUE ? 1 : (spec.family == Family::STCC_TUPE ? 2 : 0);
    for (int i = 0; i < n_transitions; ++i) {
        TransitionParams tp;
        tp.slope = flat(k++);
        tp.location = flat(k++);
        params.transition.push_back(tp);
    }
    params.dcc.restriction = spec.family;
    switch (spec.family) {
        case Family::DCC:
            params.dcc.a(0) = flat(k++);
            params.dcc.b(0) = flat(k++);
            break;
        case Family::DCC_TUE:
            params.dcc.a(0) = flat(k++);
            params.dcc.b(0) = flat(k++);
            params.dcc.psi(0) = flat(k++);
            break;
        case Family::DCC_TUPE:
            for (int d = 0; d < 2; ++d) {
                params.dcc.a(d) = flat(k++);
                params.dcc.b(d) = flat(k++);
                params.dcc.psi(d) = flat(k++);
            }
            break;
        case Family::DCC_TUPE_PSI:
            params.dcc.a(0) = flat(k++);
            params.dcc.b(0) = flat(k++);
            params.dcc.psi(0) = flat(k++);
            params.dcc.psi(1) = flat(k++);
            break;
        case Family::DCC_PE:
            for (int d = 0; d < 2; ++d) {
                params.dcc.a(d) = flat(k++);
                params.dcc.b(d) = flat(k++);
            }
            break;
        default:
            break;
    }
    params.dcc.apply_restriction();
    return params;
}

std::vector<std::string> natural_param_names(const ModelSpec& spec, Index n_assets) {
    std::vector<std::string> names;
    for (int m = 0; m < spec.n_corr_matrices(); ++m)
        for (Index i = 1; i < n_assets; ++i)
            for (Index j = 0; j < i; ++j)
                names.push_back("R" + std::to_string(m + 1) + "[" + std::to_string(i + 1) +
                                "," + std::to_string(j + 1) + "]");
    switch (spec.family) {
        case Family::STCC_TUE:
            names.insert(names.end(), {"phi", "c"});
            break;
        case Family::STCC_TUPE:
            names.insert(names.end(), {"phi1", "c1", "phi2", "c2"});
            break;
        case Family::DCC:
            names.insert(names.end(), {"a", "b"});
            break;
        case Family::DCC_TUE:
            names.insert(names.end(), {"a", "b", "psi"});
            break;
        case Family::DCC_TUPE:
            names.insert(names.end(), {"a1", "b1", "psi1", "a2", "b2", "psi2"});
            break;
        case Family::DCC_TUPE_PSI:
            names.insert(names.end(), {"a", "b", "psi1", "psi2"});
            break;
        case Family::DCC_PE:
            names.insert(names.end(), {"a1", "b1", "a2", "b2"});
            break;
        default:
            break;
    }
    return names;
}

Vector natural_loglik_terms(const ModelSpec& spec, VecRef flat, const CorrData& data,
                            const Matrix& rbar) {
    const Index t_obs = data.residuals.rows();
    Vector nan_terms = Vector::Constant(t_obs, kNaN);
    CorrParams params;
    try {
        params = unpack_natural(spec, flat, data.residuals.cols());
    } catch (const std::exception&) {
        return nan_terms;
    }
    for (const TransitionParams& tp : params.transition)
        if (!(tp.slope > 0.0)) return nan_terms;

    std::vector<Matrix> path;
    if (spec.is_dcc()) {
        const double xbar = spec.uses_exogenous() ? data.exog->sample_mean : 0.0;
        std::optional<Vector> x_lagged;
        if (spec.uses_exogenous()) x_lagged = transition_input(*data.exog);
        std::vector<Matrix> q;
        if (!dcc_recursion_nothrow(params.dcc, data.residuals,
                                   x_lagged ? &*x_lagged : nullptr,
                                   spec.uses_regime() ? data.regimes : nullptr, rbar,
                                   xbar, q, path))
            return nan_terms;
    } else {
        try {
            path = build_ccc_family_path(spec, params, data);
        } catch (const std::exception&) {
            return nan_terms;
        }
    }
    Vector terms;
    if (!loglik_terms_nothrow(path, data.residuals, terms)) return nan_terms;
    return terms;
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

namespace {

struct OptSpace {
    ModelSpec spec;
    Index n = 0;
    double xbar = 0.0;

    Index dim() const { return spec.parameter_count(n); }

    // Unconstrained coordinates: correlation angles, logit-mapped STCC
    // slopes (bounded by kSlopeCap), raw locations, and stick-breaking DCC
    // coefficients keeping a + b + psi * xbar below kDccCap.
    Vector pack(const CorrParams& params) const {
        Vector theta(dim());
        Index k = 0;
        for (const Matrix& r : params.R) {
            const Vector ang = correlation_to_angles(r);
            theta.segment(k, ang.size()) = ang;
            k += ang.size();
        }
        for (const TransitionParams& tp : params.transition) {
            theta(k++) = logit(std::min(tp.slope, kSlopeCap * (1.0 - 1e-12)) / kSlopeCap);
            theta(k++) = tp.location;
        }
        if (spec.is_dcc()) k = pack_dcc(params.dcc, theta, k);
        return theta;
    }

    Index pack_dcc(const DccParams& p, Vector& theta, Index k) const {
        auto pack_ab = [&](int d) {
            const double u = std::min(p.a(d) + p.b(d), kDccCap * (1.0 - 1e-12));
            theta(k++) = logit(u / kDccCap);
            theta(k++) = logit(u > 0.0 ? p.b(d) / u : 0.5);
        };
        auto pack_psi = [&](int d) {
            const double slack = kDccCap - (p.a(d) + p.b(d));
            const double frac = slack > 0.0 ? p.psi(d) * std::max(xbar, 1e-300) / slack : 0.0;
            theta(k++) = logit(frac);
        };
        switch (spec.family) {
            case Family::DCC:
                pack_ab(0);
                break;
            case Family::DCC_TUE:
                pack_ab(0);
                pack_psi(0);
                break;
            case Family::DCC_TUPE:
                pack_ab(0);
                pack_psi(0);
                pack_ab(1);
                pack_psi(1);
                break;
            case Family::DCC_TUPE_PSI:
                pack_ab(0);
                pack_psi(0);
                pack_psi(1);
                break;
            case Family::DCC_PE:
                pack_ab(0);
                pack_ab(1);
                break;
            default:
                break;
        }
        return k;
    }

    CorrParams unpack(VecRef theta) const {
        CorrParams params;
        params.family = spec.family;
        Index k = 0;
        const Index m = vech_size(n);
        for (int i = 0; i < spec.n_corr_matrices(); ++i) {
            Vector angles = theta.segment(k, m);
            for (Index j = 0; j < m; ++j)
                angles(j) = std::min(std::max(angles(j), 0.004), M_PI - 0.004);
            // A whisker of shrinkage toward the identity keeps fitted
            // matrices invertible even when the optimizer parks a
            // correlation at the boundary.
            Matrix r = angles_to_correlation(angles, n);
            r = (1.0 - 1e-7) * r;
            r.diagonal().setOnes();
            params.R.push_back(std::move(r));
            k += m;
        }
        const int n_transitions =
            spec.family == Family::STCC_TUE ? 1 : (spec.family == Family::STCC_TUPE ? 2 : 0);
        for (int i = 0; i < n_transitions; ++i) {
            TransitionParams tp;
            tp.slope = std::max(kSlopeCap * sigmoid(theta(k++)), 1e-12);
            tp.location = theta(k++);
            params.transition.push_back(tp);
        }
        params.dcc.restriction = spec.family;
        if (spec.is_dcc()) {
            auto unpack_ab = [&](int d) {
                const double u = kDccCap * sigmoid(theta(k++));
                params.dcc.b(d) = u * sigmoid(theta(k++));
                params.dcc.a(d) = u - params.dcc.b(d);
            };
            auto unpack_psi = [&](int d) {
                const double slack = kDccCap - (params.dcc.a(d) + params.dcc.b(d));
                params.dcc.psi(d) = slack * sigmoid(theta(k++)) / std::max(xbar, 1e-300);
            };
            switch (spec.family) {
                case Family::DCC:
                    unpack_ab(0);
                    break;
                case Family::DCC_TUE:
                    unpack_ab(0);
                    unpack_psi(0);
                    break;
                case Family::DCC_TUPE:
                    unpack_ab(0);
                    unpack_psi(0);
                    unpack_ab(1);
                    unpack_psi(1);
                    break;
                case Family::DCC_TUPE_PSI:
                    unpack_ab(0);
                    // psi slacks are measured against the shared (a, b).
                    params.dcc.a(1) = params.dcc.a(0);
                    params.dcc.b(1) = params.dcc.b(0);
                    unpack_psi(0);
                    unpack_psi(1);
                    break;
                case Family::DCC_PE:
                    unpack_ab(0);
                    unpack_ab(1);
                    break;
                default:
                    break;
            }
            params.dcc.apply_restriction();
        }
        return params;
    }
};

// Precomputed pieces shared across objective evaluations.
struct ObjectiveContext {
    ModelSpec spec;
    const CorrData* data = nullptr;
    Index t_obs = 0;
    Index n = 0;
    double xbar = 0.0;
    Vector tin;                          // lagged exogenous input
    std::array<Matrix, 2> group_sums;    // sum of eps eps' per regime group
    std::array<double, 2> group_counts{{0.0, 0.0}};
    Matrix rbar0;                        // targeting start (unused by CCC)

    double grouped_loglik(const std::vector<const Matrix*>& mats) const {
        double ll = 0.0;
        for (std::size_t g = 0; g < mats.size(); ++g) {
            if (group_counts[g] == 0.0) continue;
            Eigen::LLT<Matrix> llt(*mats[g]);
            if (llt.info() != Eigen::Success) return -kHugePenalty;
            const Matrix l = llt.matrixL();
            double ldet = 0.0;
            for (Index i = 0; i < n; ++i) ldet += std::log(l(i, i));
            ldet *= 2.0;
            const double quad = llt.solve(group_sums[g]).trace();
            ll += -0.5 * group_counts[g] * (n * kLog2Pi + ldet) - 0.5 * quad;
        }
        return std::isfinite(ll) ? ll : -kHugePenalty;
    }

    double stcc_loglik(const CorrParams& params) const {
        const bool tupe = spec.family == Family::STCC_TUPE;
        double ll = 0.0;
        Eigen::LLT<Matrix> llt;
        Matrix rt(n, n);
        for (Index t = 0; t < t_obs; ++t) {
            int base = 0;
            int trans = 0;
            if (tupe) {
                const bool rep = data->regimes->dummy[static_cast<std::size_t>(t)] == 1;
                base = rep ? 0 : 2;
                trans = rep ? 0 : 1;
            }
            const double g = logistic_transition(tin(t), params.transition[trans]);
            rt = g * params.R[base] + (1.0 - g) * params.R[base + 1];
            llt.compute(rt);
            if (llt.info() != Eigen::Success) return -kHugePenalty;
            const Matrix l = llt.matrixL();
            double ldet = 0.0;
            for (Index i = 0; i < n; ++i) ldet += std::log(l(i, i));
            ldet *= 2.0;
            const Vector e = data->residuals.row(t).transpose();
            ll += -0.5 * (n * kLog2Pi + ldet + e.dot(llt.solve(e)));
        }
        return std::isfinite(ll) ? ll : -kHugePenalty;
    }

    double dcc_loglik(const CorrParams& params) const {
        // Profile likelihood: rbar re-targeted at every evaluation.
        const RegimeCalendar* regimes = spec.uses_regime() ? data->regimes : nullptr;
        const Vector* x_lagged = spec.uses_exogenous() ? &tin : nullptr;
        Matrix rbar = rbar0;
        std::vector<Matrix> q, r;
        Matrix rescaled(t_obs, n);
        bool ok = false;
        for (int iter = 0; iter < 50; ++iter) {
            if (!dcc_recursion_nothrow(params.dcc, data->residuals, x_lagged, regimes, rbar,
                                       xbar, q, r))
                return -kHugePenalty;
            for (Index t = 0; t < t_obs; ++t) {
                const Matrix& qt = q[static_cast<std::size_t>(t)];
                for (Index i = 0; i < n; ++i)
                    rescaled(t, i) = std::sqrt(qt(i, i)) * data->residuals(t, i);
            }
            Matrix next;
            try {
                next = sample_correlation(rescaled, /*center=*/false);
            } catch (const std::exception&) {
                return -kHugePenalty;
            }
            const double delta = (next - rbar).cwiseAbs().maxCoeff();
            rbar = next;
            if (delta < 1e-6) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            // Use the last iterate; the optimizer may still improve from here.
        }
        if (!dcc_recursion_nothrow(params.dcc, data->residuals, x_lagged, regimes, rbar,
                                   xbar, q, r))
            return -kHugePenalty;
        Vector terms;
        if (!loglik_terms_nothrow(r, data->residuals, terms)) return -kHugePenalty;
        return terms.sum();
    }

    double loglik(const CorrParams& params) const {
        switch (spec.family) {
            case Family::CCC:
                return grouped_loglik({&params.R[0]});
            case Family::CCC_PE:
                return grouped_loglik({&params.R[0], &params.R[1]});
            case Family::STCC_TUE:
            case Family::STCC_TUPE:
                return stcc_loglik(params);
            default:
                return dcc_loglik(params);
        }
    }
};

ObjectiveContext make_context(const ModelSpec& spec, const CorrData& data) {
    ObjectiveContext ctx;
    ctx.spec = spec;
    ctx.data = &data;
    ctx.t_obs = data.residuals.rows();
    ctx.n = data.residuals.cols();
    ctx.xbar = spec.uses_exogenous() ? data.exog->sample_mean : 0.0;
    if (spec.uses_exogenous()) ctx.tin = transition_input(*data.exog);
    if (spec.family == Family::CCC) {
        ctx.group_sums[0] = data.residuals.transpose() * data.residuals;
        ctx.group_counts[0] = static_cast<double>(ctx.t_obs);
    } else if (spec.family == Family::CCC_PE) {
        ctx.group_sums[0] = Matrix::Zero(ctx.n, ctx.n);
        ctx.group_sums[1] = Matrix::Zero(ctx.n, ctx.n);
        for (Index t = 0; t < ctx.t_obs; ++t) {
            const int g = data.regimes->dummy[static_cast<std::size_t>(t)] == 1 ? 0 : 1;
            ctx.group_sums[g].noalias() +=
                data.residuals.row(t).transpose() * data.residuals.row(t);
            ctx.group_counts[g] += 1.0;
        }
    }
    if (spec.is_dcc()) ctx.rbar0 = sample_correlation(data.residuals, /*center=*/false);
    return ctx;
}

// Sample correlation over a row subset, falling back to the full sample
// when the subset is too small to be useful.
Matrix subset_correlation(MatRef residuals, const std::vector<Index>& rows) {
    const Index n = residuals.cols();
    const Index min_rows = std::max<Index>(10, 3 * n);
    if (static_cast<Index>(rows.size()) < min_rows)
        return sample_correlation(residuals, /*center=*/false);
    Matrix sub(static_cast<Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Index>(i)) = residuals.row(rows[i]);
    try {
        return sample_correlation(sub, /*center=*/false);
    } catch (const std::exception&) {
        return sample_correlation(residuals, /*center=*/false);
    }
}

double vector_median(Vector v) {
    std::sort(v.data(), v.data() + v.size());
    const Index t = v.size();
    return t % 2 == 1 ? v(t / 2) : 0.5 * (v(t / 2 - 1) + v(t / 2));
}

TransitionParams transition_start(const Vector& tin) {
    TransitionParams tp;
    tp.location = vector_median(tin);
    const double sd = std::sqrt(std::max(sample_variance(tin), 1e-16));
    tp.slope = std::min(std::max(2.0 / sd, 0.5), 400.0);
    return tp;
}

CorrParams heuristic_start(const ModelSpec& spec, const CorrData& data,
                           const ObjectiveContext& ctx) {
    CorrParams params;
    params.family = spec.family;
    const Matrix& resid = data.residuals;
    const Index t_obs = resid.rows();

    auto rows_where = [&](auto&& pred) {
        std::vector<Index> rows;
        for (Index t = 0; t < t_obs; ++t)
            if (pred(t)) rows.push_back(t);
        return rows;
    };

    switch (spec.family) {
        case Family::CCC:
            params.R.push_back(sample_correlation(resid, false));
            break;
        case Family::CCC_PE: {
            const auto& dummy = data.regimes->dummy;
            params.R.push_back(subset_correlation(
                resid, rows_where([&](Index t) { return dummy[t] == 1; })));
            params.R.push_back(subset_correlation(
                resid, rows_where([&](Index t) { return dummy[t] == 0; })));
            break;
        }
        case Family::STCC_TUE: {
            const double med = vector_median(ctx.tin);
            params.R.push_back(subset_correlation(
                resid, rows_where([&](Index t) { return ctx.tin(t) > med; })));
            params.R.push_back(subset_correlation(
                resid, rows_where([&](Index t) { return ctx.tin(t) <= med; })));
            params.transition.push_back(transition_start(ctx.tin));
            break;
        }
        case Family::STCC_TUPE: {
            const auto& dummy = data.regimes->dummy;
            for (int regime : {1, 0}) {
                std::vector<Index> in_regime =
                    rows_where([&](Index t) { return dummy[t] == regime; });
                Vector tin_regime(static_cast<Index>(in_regime.size()));
                for (std::size_t i = 0; i < in_regime.size(); ++i)
                    tin_regime(static_cast<Index>(i)) = ctx.tin(in_regime[i]);
                const double med = in_regime.empty() ? 0.0 : vector_median(tin_regime);
                params.R.push_back(subset_correlation(
                    resid, rows_where([&](Index t) {
                        return dummy[t] == regime && ctx.tin(t) > med;
                    })));
                params.R.push_back(subset_correlation(
                    resid, rows_where([&](Index t) {
                        return dummy[t] == regime && ctx.tin(t) <= med;
                    })));
                params.transition.push_back(
                    in_regime.empty() ? transition_start(ctx.tin)
                                      : transition_start(tin_regime));
            }
            break;
        }
        default: {
            params.dcc.restriction = spec.family;
            params.dcc.a.setConstant(0.05);
            params.dcc.b.setConstant(0.90);
            if (spec.uses_exogenous()) {
                const double slack = kDccCap - 0.95;
                params.dcc.psi.setConstant(0.2 * slack / std::max(ctx.xbar, 1e-300));
            }
            params.dcc.apply_restriction();
            break;
        }
    }
    return params;
}

void validate_estimate_inputs(const ModelSpec& spec, const CorrData& data) {
    const Index t_obs = data.residuals.rows();
    const Index n = data.residuals.cols();
    if (t_obs < 30 || n < 2)
        throw std::invalid_argument("estimate: need T >= 30 and N >= 2");
    if (!data.residuals.allFinite())
        throw std::invalid_argument("estimate: non-finite residuals");
    if (spec.uses_exogenous()) {
        if (!data.exog) throw std::invalid_argument("estimate: missing exogenous series");
        if (data.exog->values.size() != t_obs)
            throw std::invalid_argument("estimate: exogenous series not aligned");
        if (!(data.exog->sample_mean > 0.0))
            throw std::invalid_argument("estimate: exogenous series is identically zero");
    }
    if (spec.uses_regime()) {
        if (!data.regimes) throw std::invalid_argument("estimate: missing regime calendar");
        if (static_cast<Index>(data.regimes->dummy.size()) != t_obs)
            throw std::invalid_argument("estimate: regime calendar not aligned");
        bool has0 = false, has1 = false;
        for (int d : data.regimes->dummy) (d == 1 ? has1 : has0) = true;
        if (!has0 || !has1)
            throw std::invalid_argument(
                "estimate: regime dummy is constant; regime-specific parameters are "
                "not identified");
    }
}

}  // namespace

CorrParams lift_params(const CorrParams& restricted, Family target) {
    if (!is_nested_in(restricted.family, target))
        throw std::invalid_argument("lift_params: " + ModelSpec{restricted.family}.name() +
                                    " is not nested in " + ModelSpec{target}.name());
    CorrParams out;
    out.family = target;
    out.rbar = restricted.rbar;
    const TransitionParams flat_transition{1.0, 0.0};

    switch (restricted.family) {
        case Family::CCC:
            if (target == Family::CCC_PE) {
                out.R = {restricted.R[0], restricted.R[0]};
            } else if (target == Family::STCC_TUE) {
                out.R = {restricted.R[0], restricted.R[0]};
                out.transition = {flat_transition};
            } else {  // STCC_TUPE
                out.R = {restricted.R[0], restricted.R[0], restricted.R[0],
                         restricted.R[0]};
                out.transition = {flat_transition, flat_transition};
            }
            return out;
        case Family::CCC_PE:
            out.R = {restricted.R[0], restricted.R[0], restricted.R[1], restricted.R[1]};
            out.transition = {flat_transition, flat_transition};
            return out;
        case Family::STCC_TUE:
            out.R = {restricted.R[0], restricted.R[1], restricted.R[0], restricted.R[1]};
            out.transition = {restricted.transition[0], restricted.transition[0]};
            return out;
        default:
            break;
    }

    out.dcc = restricted.dcc;
    out.dcc.restriction = target;
    switch (restricted.family) {
        case Family::DCC:
            out.dcc.a(1) = out.dcc.a(0);
            out.dcc.b(1) = out.dcc.b(0);
            out.dcc.psi.setZero();
            break;
        case Family::DCC_TUE:
            out.dcc.a(1) = out.dcc.a(0);
            out.dcc.b(1) = out.dcc.b(0);
            out.dcc.psi(1) = out.dcc.psi(0);
            break;
        case Family::DCC_TUPE_PSI:
            out.dcc.a(1) = out.dcc.a(0);
            out.dcc.b(1) = out.dcc.b(0);
            break;
        case Family::DCC_PE:
            out.dcc.psi.setZero();
            break;
        default:
            break;
    }
    return out;
}

CorrFitResult estimate(const ModelSpec& spec, const CorrData& data,
                       const EstimateOptions& options) {
    validate_estimate_inputs(spec, data);
    const Index n = data.residuals.cols();
    ObjectiveContext ctx = make_context(spec, data);
    OptSpace space{spec, n, ctx.xbar};

    Objective neg_loglik = [&](const Vector& theta) -> double {
        try {
            const double ll = ctx.loglik(space.unpack(theta));
            return std::isfinite(ll) ? -ll : kHugePenalty;
        } catch (const std::exception&) {
            return kHugePenalty;
        }
    };
    OptimOptions optim_options;
    optim_options.max_iterations = 300 + 30 * static_cast<int>(space.dim());
    optim_options.simplex_max_iterations =
        std::max<int>(2000, 400 * static_cast<int>(space.dim()));

    std::vector<Vector> starts;
    starts.push_back(space.pack(heuristic_start(spec, data, ctx)));
    for (const Vector& natural : options.extra_starts)
        starts.push_back(space.pack(unpack_natural(spec, natural, n)));
    if (options.nested_warm_start) {
        for (Family parent : nested_parents(spec.family)) {
            EstimateOptions sub_options;
            sub_options.seed = options.seed ^ (0x517cc1b7ull + static_cast<int>(parent));
            sub_options.restarts = 1;
            sub_options.compute_se = false;
            CorrFitResult parent_fit = estimate(ModelSpec{parent}, data, sub_options);
            starts.push_back(space.pack(lift_params(parent_fit.params, spec.family)));
        }
    }

    OptimResult best;
    bool have_best = false;
    for (const Vector& start : starts) {
        OptimResult run = minimize(neg_loglik, start, optim_options);
        if (!have_best || run.value < best.value) {
            best = run;
            have_best = true;
        }
    }
    if (!best.converged && options.restarts > 0) {
        std::mt19937_64 rng(options.seed ^ 0x2545f4914f6cdd1dULL);
        std::normal_distribution<double> jitter(0.0, 0.3);
        for (int attempt = 0; attempt < options.restarts && !best.converged; ++attempt) {
            Vector theta = best.x.size() ? best.x : starts.front();
            for (Index i = 0; i < theta.size(); ++i) theta(i) += jitter(rng);
            OptimResult run = minimize(neg_loglik, theta, optim_options);
            if (run.value < best.value || (run.converged && !best.converged &&
                                           run.value < best.value + 1e-9))
                best = run;
        }
    }

    CorrFitResult fit;
    fit.spec = spec;
    fit.params = space.unpack(best.x);
    fit.converged = best.converged;
    if (spec.is_dcc()) {
        TargetingResult targeting = correlation_targeting(
            data.residuals, fit.params.dcc, spec.uses_exogenous() ? data.exog : nullptr,
            spec.uses_regime() ? data.regimes : nullptr);
        fit.params.rbar = targeting.rbar;
        fit.targeting_converged = targeting.converged;
    }
    fit.path = build_path(spec, fit.params, data);
    fit.loglik = correlation_loglik(fit.path, data.residuals);
    fit.param_names = natural_param_names(spec, n);
    fit.param_values = pack_natural(fit.params, n);

    const Index k = fit.param_values.size();
    fit.robust_se = Vector::Constant(k, kNaN);
    fit.robust_cov = Matrix::Constant(k, k, kNaN);
    if (options.compute_se) {
        const Matrix rbar = fit.params.rbar;
        LoglikTerms terms = [&spec, &data, rbar](const Vector& natural) {
            return natural_loglik_terms(spec, natural, data, rbar);
        };
        try {
            fit.robust_cov = sandwich_covariance(terms, fit.param_values);
            fit.robust_se = fit.robust_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
        } catch (const std::runtime_error&) {
            // Leave the standard errors as NaN; the fit itself stands.
        }
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

SimulatedData simulate(const SimConfig& config, Index t_obs, std::uint64_t seed) {
    const Index n = config.n_assets;
    if (n < 2) throw std::invalid_argument("simulate: need at least 2 assets");
    if (t_obs < 100) throw std::invalid_argument("simulate: need T >= 100");
    const ModelSpec spec = config.spec;

    std::vector<GjrParams> garch = config.garch;
    if (garch.empty()) {
        GjrParams p;
        p.omega = 0.05;
        p.alpha = 0.05;
        p.beta = 0.90;
        p.gamma = 0.05;
        garch.assign(static_cast<std::size_t>(n), p);
    }
    if (static_cast<Index>(garch.size()) != n)
        throw std::invalid_argument("simulate: one GJR parameter set per asset");
    for (const GjrParams& p : garch)
        if (!p.valid()) throw std::invalid_argument("simulate: invalid GJR parameters");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SimulatedData out;
    const std::vector<std::string> dates = trading_days(config.start_date, t_obs);

    // Exogenous level: stationary lognormal AR(1) with mean exog_mean.
    out.exog.dates = dates;
    out.exog.values.resize(t_obs);
    {
        const double ar = config.exog_log_ar;
        const double vol = config.exog_log_vol;
        const double s_var = vol * vol / std::max(1.0 - ar * ar, 1e-12);
        const double mu = std::log(std::max(config.exog_mean, 1e-12)) - 0.5 * s_var;
        double s = std::sqrt(s_var) * gauss(rng);
        for (Index t = 0; t < t_obs; ++t) {
            out.exog.values(t) = std::exp(mu + s);
            s = ar * s + vol * gauss(rng);
        }
    }
    out.exog.sample_mean = out.exog.values.mean();

    out.calendar.dates = dates;
    out.calendar.dummy.resize(static_cast<std::size_t>(t_obs));
    {
        const int segments = std::max(config.regime_segments, 1);
        const Index seg_len = std::max<Index>(t_obs / segments, 1);
        int regime = config.initial_regime;
        for (Index t = 0; t < t_obs; ++t) {
            if (t > 0 && t % seg_len == 0 && t / seg_len < static_cast<Index>(segments)) {
                regime = 1 - regime;
                out.calendar.switch_dates.push_back(dates[static_cast<std::size_t>(t)]);
            }
            out.calendar.dummy[static_cast<std::size_t>(t)] = regime;
        }
    }

    const Vector tin = transition_input(out.exog);
    const double xbar = out.exog.sample_mean;
    if (spec.is_dcc()) {
        if (config.params.rbar.rows() != n)
            throw std::invalid_argument("simulate: DCC specs need params.rbar");
        if (!config.params.dcc.valid(xbar))
            throw std::invalid_argument("simulate: invalid DCC parameters for this series");
    }

    out.true_residuals.resize(t_obs, n);
    out.true_variances.resize(t_obs, n);
    out.true_path.model = spec;
    out.true_path.matrices.resize(static_cast<std::size_t>(t_obs));
    out.panel.dates = dates;
    out.panel.returns.resize(t_obs, n);
    out.panel.asset_names.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out.panel.asset_names.push_back("A" + std::to_string(i + 1));

    Matrix q_prev;
    Vector h2(n);
    for (Index i = 0; i < n; ++i)
        h2(i) = garch[static_cast<std::size_t>(i)].omega /
                (1.0 - garch[static_cast<std::size_t>(i)].persistence());

    for (Index t = 0; t < t_obs; ++t) {
        Matrix rt;
        const int dummy = out.calendar.dummy[static_cast<std::size_t>(t)];
        switch (spec.family) {
            case Family::CCC:
                rt = config.params.R[0];
                break;
            case Family::CCC_PE:
                rt = dummy == 1 ? config.params.R[0] : config.params.R[1];
                break;
            case Family::STCC_TUE: {
                const double g = logistic_transition(tin(t), config.params.transition[0]);
                rt = g * config.params.R[0] + (1.0 - g) * config.params.R[1];
                break;
            }
            case Family::STCC_TUPE: {
                const int base = dummy == 1 ? 0 : 2;
                const double g = logistic_transition(
                    tin(t), config.params.transition[dummy == 1 ? 0 : 1]);
                rt = g * config.params.R[base] + (1.0 - g) * config.params.R[base + 1];
                break;
            }
            default: {
                const DccParams& dp = config.params.dcc;
                if (t == 0) {
                    q_prev = config.params.rbar;
                    rt = config.params.rbar;
                } else {
                    const int d = dummy == 1 ? 0 : 1;
                    const double intercept = 1.0 - dp.a(d) - dp.b(d) - dp.psi(d) * xbar;
                    Vector scale(n);
                    for (Index i = 0; i < n; ++i) scale(i) = std::sqrt(q_prev(i, i));
                    const Vector u =
                        scale.asDiagonal() * out.true_residuals.row(t - 1).transpose();
                    Matrix qt = (intercept + dp.psi(d) * tin(t)) * config.params.rbar;
                    qt.noalias() += dp.a(d) * (u * u.transpose());
                    qt.noalias() += dp.b(d) * q_prev;
                    Vector inv_scale(n);
                    for (Index i = 0; i < n; ++i) inv_scale(i) = 1.0 / std::sqrt(qt(i, i));
                    rt = inv_scale.asDiagonal() * qt * inv_scale.asDiagonal();
                    rt.diagonal().setOnes();
                    q_prev = std::move(qt);
                }
                break;
            }
        }
        rt = 0.5 * (rt + rt.transpose());
        out.true_path.matrices[static_cast<std::size_t>(t)] = rt;

        Eigen::LLT<Matrix> llt(rt);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("simulate: R_t not positive definite at t = " +
                                     std::to_string(t));
        Vector z(n);
        for (Index i = 0; i < n; ++i) z(i) = gauss(rng);
        const Vector eps = Matrix(llt.matrixL()) * z;
        out.true_residuals.row(t) = eps.transpose();

        if (t > 0) {
            for (Index i = 0; i < n; ++i) {
                const GjrParams& p = garch[static_cast<std::size_t>(i)];
                const double r_prev = out.panel.returns(t - 1, i);
                h2(i) = p.omega + p.alpha * r_prev * r_prev + p.beta * h2(i) +
                        (r_prev < 0.0 ? p.gamma * r_prev * r_prev : 0.0);
            }
        }
        out.true_variances.row(t) = h2.transpose();
        out.panel.returns.row(t) =
            (h2.array().sqrt() * eps.array()).matrix().transpose();
    }
    out.panel.validate();
    out.exog.validate();
    out.calendar.validate();
    return out;
}

}  // namespace ccm
