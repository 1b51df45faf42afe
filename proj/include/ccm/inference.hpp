#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ccm/corrmodels.hpp"
#include "ccm/stats.hpp"
#include "ccm/types.hpp"

namespace ccm {

struct TestResult {
    std::string name;
    double statistic = 0.0;
    int df = 0;
    double critical_value_5pct = 0.0;
    bool reject = false;
    double p_value = 1.0;
};

/// Sandwich standard errors for an already-converged fit, differentiating
/// the supplied per-observation log-likelihood at the fit's natural
/// parameter vector. Throws std::runtime_error on a singular Hessian.
Vector robust_se(const CorrFitResult& fit, const LoglikTerms& loglik);
Vector robust_se(const GarchFit& fit, const LoglikTerms& loglik);

/// Ljung-Box portmanteau statistics Q(L) for L = 1..max_lag on the supplied
/// series (pass the cross product eps_i .* eps_j for correlation
/// diagnostics). Each entry is compared against chi2(0.95, L).
std::vector<TestResult> ljung_box(VecRef series, int max_lag);

/// Likelihood ratio test for nested fits: 2 (L_u - L_r) against chi2(df).
/// Throws when the statistic is negative beyond optimizer slack.
TestResult lr_test(const CorrFitResult& restricted, const CorrFitResult& unrestricted,
                   int df);

/// Score-type constant-correlation test against a smooth-transition
/// alternative in its first-order Taylor form: under the null the
/// correlation matrix is constant (CCC) or regime-constant (CCC-PE) and
/// the alternative adds a slope matrix in the lagged transition variable.
/// The statistic is score' (OPG)^{-1} score with all parameters' scores
/// stacked; df counts the correlation parameters allowed to vary.
TestResult lm_test_constant_correlation(const CorrFitResult& null_fit,
                                        const CorrData& data);

/// Wald test of equal correlations across regime matrices (R1 vs R2, plus
/// R3 vs R4 when present) over the listed asset pairs, using the fit's
/// robust covariance. df = pairs x matrix-pairs.
TestResult wald_equal_correlations(const CorrFitResult& fit,
                                   const std::vector<std::pair<Index, Index>>& pairs);

struct InformationCriteria {
    double aic = 0.0;      // (-2L + 2k) / T
    double bic = 0.0;      // (-2L + k ln T) / T
    double aic_raw = 0.0;  // -2L + 2k
    double bic_raw = 0.0;  // -2L + k ln T
};

InformationCriteria information_criteria(const CorrFitResult& fit, Index t_obs);

}  // namespace ccm
