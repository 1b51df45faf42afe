#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccm/data.hpp"
#include "ccm/garch.hpp"
#include "ccm/types.hpp"

namespace ccm {

// ---------------------------------------------------------------------------
// Model vocabulary
// ---------------------------------------------------------------------------

enum class Family {
    CCC,           // constant correlation
    CCC_PE,        // two constant matrices switched by the regime dummy
    STCC_TUE,      // smooth transition driven by the exogenous level
    STCC_TUPE,     // regime-specific smooth transitions (four matrices)
    DCC,           // scalar dynamic correlation with targeting
    DCC_TUE,       // DCC plus exogenous level term
    DCC_TUPE,      // regime-specific (a, b, psi)
    DCC_TUPE_PSI,  // shared (a, b), regime-specific psi
    DCC_PE,        // regime-specific (a, b), no exogenous term
};

struct ModelSpec {
    Family family = Family::CCC;

    bool uses_exogenous() const;
    bool uses_regime() const;
    bool is_dcc() const;
    int n_corr_matrices() const;  // 0 for the DCC family
    int parameter_count(Index n_assets) const;
    std::string name() const;

    static ModelSpec parse(const std::string& name);
    static const std::vector<ModelSpec>& all();
};

bool is_nested_in(Family restricted, Family unrestricted);
std::vector<Family> nested_parents(Family family);  // warm-start chain

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct TransitionParams {
    double slope = 1.0;     // phi > 0
    double location = 0.0;  // c
};

/// G(x) = 1 / (1 + exp(-phi (x - c))); strictly increasing, G(c) = 1/2.
double logistic_transition(double x, const TransitionParams& params);

struct DccParams {
    // Index 0 holds the regime-1 (dummy = 1) coefficients, index 1 regime 2.
    Eigen::Vector2d a{0.0, 0.0};
    Eigen::Vector2d b{0.0, 0.0};
    Eigen::Vector2d psi{0.0, 0.0};
    Family restriction = Family::DCC;

    void apply_restriction();
    bool valid(double exog_mean) const;
};

/// Natural parameters for any of the nine specifications.
struct CorrParams {
    Family family = Family::CCC;
    std::vector<Matrix> R;                     // 1, 2 or 4 correlation matrices
    std::vector<TransitionParams> transition;  // 1 (TUE) or 2 (TUPE)
    DccParams dcc;
    Matrix rbar;  // DCC targeting matrix (not a free parameter)
};

struct CorrData {
    Matrix residuals;  // T x N de-garched returns
    const ExogenousSeries* exog = nullptr;
    const RegimeCalendar* regimes = nullptr;
};

struct CorrelationPath {
    std::vector<Matrix> matrices;
    ModelSpec model;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Correlation log-likelihood including the Gaussian constant:
///   -(TN/2) ln 2pi - 1/2 sum_t [ ln|R_t| + e_t' R_t^{-1} e_t ].
/// Throws std::runtime_error naming t when some R_t is not invertible.
double correlation_loglik(const CorrelationPath& path, MatRef residuals);
Vector correlation_loglik_terms(const CorrelationPath& path, MatRef residuals);

/// R = P P' from the strict lower triangle of P (row-major free_params),
/// p_11 = 1 and p_ii completing each row to unit norm.
Matrix triangular_to_correlation(VecRef free_params);

/// Hyperspherical-angle parametrization of a correlation matrix; the
/// unconstrained optimization space behind the triangular map.
Matrix angles_to_correlation(VecRef angles, Index n);
Vector correlation_to_angles(MatRef correlation);

/// Lagged transition input: entry t is x_{t-1}; entry 0 reuses x_0.
Vector transition_input(const ExogenousSeries& exog);

struct DccRecursionResult {
    std::vector<Matrix> q;
    CorrelationPath path;
};

/// Eq.-(7)-style recursion with the cDCC rescaling of the lagged outer
/// product. Q_1 = rbar; the exogenous term enters as psi_d x_{t-1} rbar and
/// the targeting intercept is (1 - a_d - b_d - psi_d xbar). Throws
/// std::invalid_argument when that intercept is not positive.
DccRecursionResult dcc_recursion(const DccParams& params, MatRef residuals,
                                 const ExogenousSeries* exog,
                                 const RegimeCalendar* regimes, MatRef rbar);

struct TargetingResult {
    Matrix rbar;
    bool converged = false;
    int iterations = 0;
};

/// Fixed-point targeting: starts at the (zero-mean) sample correlation of
/// the residuals and re-estimates it from the rescaled residuals
/// Qtilde_t eps_t until the max-abs change drops below 1e-6 (50 iterations).
TargetingResult correlation_targeting(MatRef residuals, const DccParams& params,
                                      const ExogenousSeries* exog,
                                      const RegimeCalendar* regimes);

/// Correlation path for a parametrized model. DCC families run the
/// targeting fixed point internally.
CorrelationPath build_path(const ModelSpec& spec, const CorrParams& params,
                           const CorrData& data);

/// DCC path with an explicitly supplied targeting matrix.
CorrelationPath build_path_with_rbar(const ModelSpec& spec, const CorrParams& params,
                                     const CorrData& data, MatRef rbar);

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

/// Flat natural parameter vector: correlation entries (strict lower
/// triangle, row-major) per matrix, then transition parameters, or the DCC
/// coefficients, in the order reported by natural_param_names.
Vector pack_natural(const CorrParams& params, Index n_assets);
CorrParams unpack_natural(const ModelSpec& spec, VecRef flat, Index n_assets);
std::vector<std::string> natural_param_names(const ModelSpec& spec, Index n_assets);

/// Per-observation log-likelihood as a function of the natural parameters;
/// entries are NaN when the parameters produce an invalid path. DCC
/// families hold rbar fixed (pass the targeted matrix).
Vector natural_loglik_terms(const ModelSpec& spec, VecRef flat, const CorrData& data,
                            const Matrix& rbar);

struct CorrFitResult {
    ModelSpec spec;
    CorrParams params;
    std::vector<std::string> param_names;
    Vector param_values;
    double loglik = 0.0;
    bool converged = false;
    CorrelationPath path;
    Vector robust_se;
    Matrix robust_cov;
    bool targeting_converged = true;
};

struct EstimateOptions {
    std::uint64_t seed = 0;
    int restarts = 3;                   // random restarts after a failed pass
    bool compute_se = true;
    bool nested_warm_start = true;      // also start from lifted parent fits
    std::vector<Vector> extra_starts;   // natural parameter vectors
};

/// Maximizes the correlation log-likelihood over the specification's free
/// parameters. Non-convergence is reported through the flag, never
/// silently.
CorrFitResult estimate(const ModelSpec& spec, const CorrData& data,
                       const EstimateOptions& options = {});

/// Embeds a restricted model's parameters into a larger family, preserving
/// the implied correlation path (up to a vanishing exogenous loading when
/// a psi term is introduced).
CorrParams lift_params(const CorrParams& restricted, Family target);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimConfig {
    ModelSpec spec;
    CorrParams params;
    Index n_assets = 0;
    std::vector<GjrParams> garch;  // one per asset; defaults used when empty
    double exog_mean = 0.12;
    double exog_log_ar = 0.98;
    double exog_log_vol = 0.25;
    int regime_segments = 4;  // alternating dummy blocks
    int initial_regime = 0;
    std::string start_date = "2015-01-05";
};

struct SimulatedData {
    ReturnPanel panel;
    ExogenousSeries exog;
    RegimeCalendar calendar;
    CorrelationPath true_path;
    Matrix true_residuals;  // the N(0, R_t) draws
    Matrix true_variances;  // per-asset h2 paths
};

/// Draws eps_t ~ N(0, R_t) through the specification's own recursion and
/// scales by per-asset GJR variance processes. Reproducible under seed.
SimulatedData simulate(const SimConfig& config, Index t_obs, std::uint64_t seed);

}  // namespace ccm
