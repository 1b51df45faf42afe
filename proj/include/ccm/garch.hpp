#pragma once

#include <cstdint>
#include <vector>

#include "ccm/data.hpp"
#include "ccm/types.hpp"

namespace ccm {

/// GJR-GARCH(1,1) parameters:
///   h2_t = omega + alpha r_{t-1}^2 + beta h2_{t-1} + gamma r_{t-1}^2 1[r_{t-1} < 0]
struct GjrParams {
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    double persistence() const { return alpha + beta + 0.5 * gamma; }
    bool valid() const {
        return omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0 &&
               persistence() < 1.0;
    }
};

/// Conditional variance path. h2_1 = h0; throws std::runtime_error naming
/// the offending t when the recursion overflows.
Vector gjr_variance_path(const GjrParams& params, VecRef returns, double h0);

/// Gaussian log-likelihood: sum_t -0.5 (ln 2pi + ln h2_t + r_t^2 / h2_t).
double gjr_loglik(const GjrParams& params, VecRef returns, double h0);
Vector gjr_loglik_terms(const GjrParams& params, VecRef returns, double h0);

/// Unconstrained parametrization used by the optimizer: omega = exp(theta0),
/// persistence alpha + beta + gamma/2 = 0.9995 * sigmoid(theta1), split
/// between beta and the shock terms by further logistic fractions.
Vector gjr_pack(const GjrParams& params);
GjrParams gjr_unpack(VecRef theta);

struct GarchFit {
    GjrParams params;
    double h0 = 0.0;           // initial variance (sample variance of the window)
    Vector variance_path;      // h2_t
    Vector residuals;          // r_t / h_t
    double loglik = 0.0;
    bool converged = false;
    Vector robust_se;          // for (omega, alpha, beta, gamma); NaN when unavailable
};

/// Quasi-maximum-likelihood fit. Requires T >= 100. Runs a quasi-Newton
/// pass with a simplex polish from a fixed start, plus up to 3 seeded
/// random restarts when the first pass fails to converge.
GarchFit fit_gjr(VecRef returns, std::uint64_t seed = 0);

/// Column i of the result is panel.returns.col(i) / h_i elementwise.
Matrix degarch(const ReturnPanel& panel, const std::vector<GarchFit>& fits);

}  // namespace ccm
