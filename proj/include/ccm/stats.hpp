#pragma once

#include <functional>

#include "ccm/types.hpp"

namespace ccm {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Chi-squared CDF with df degrees of freedom.
double chi2_cdf(double x, int df);

/// Inverse chi-squared CDF. p in (0,1), df >= 1.
double chi2_quantile(double p, int df);

/// Pearson correlation of two equally sized vectors.
/// Returns NaN when either vector has zero variance.
double pearson_correlation(VecRef x, VecRef y);

/// Column-wise sample correlation matrix. When center is false the
/// second moments are taken about zero (the convention used for
/// de-garched residuals, which are zero-mean by construction).
Matrix sample_correlation(MatRef x, bool center = true);

double sample_mean(VecRef x);
double sample_variance(VecRef x);

/// Per-observation log-likelihood as a function of the parameter vector.
/// Returns a length-T vector of contributions; the total is its sum.
using LoglikTerms = std::function<Vector(const Vector&)>;

/// White sandwich covariance H^{ -1} S H^{-1} built from central finite
/// differences of the per-observation log-likelihood: H is the Hessian of
/// the summed log-likelihood, S the outer product of per-observation
/// scores. Steps are rel_step * max(|theta_i|, 1), shrunk per coordinate
/// when an evaluation comes back non-finite.
/// Throws std::runtime_error on a singular Hessian.
Matrix sandwich_covariance(const LoglikTerms& loglik, VecRef theta,
                           double rel_step = 1e-4);

/// Square roots of the sandwich diagonal (tiny negatives clipped to zero).
Vector sandwich_standard_errors(const LoglikTerms& loglik, VecRef theta,
                                double rel_step = 1e-4);

}  // namespace ccm
