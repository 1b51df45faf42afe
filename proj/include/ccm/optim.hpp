#pragma once

#include <functional>

#include "ccm/types.hpp"

namespace ccm {

// Objectives may signal invalid parameter regions by returning +inf
// (or any non-finite value); both solvers treat that as "uphill".
using Objective = std::function<double(const Vector&)>;

constexpr double kHugePenalty = 1e100;

struct OptimOptions {
    int max_iterations = 400;
    double gradient_tol = 1e-7;
    double rel_step = 1e-5;       // central-difference gradient step
    int simplex_max_iterations = 2000;
    double simplex_tol = 1e-11;
};

struct OptimResult {
    Vector x;
    double value = kHugePenalty;
    bool converged = false;
    int iterations = 0;
};

Vector numeric_gradient(const Objective& f, VecRef x, double rel_step);

/// Quasi-Newton (inverse-BFGS) minimizer with central finite-difference
/// gradients and Armijo backtracking. Never returns a point worse than x0.
OptimResult bfgs_minimize(const Objective& f, VecRef x0, const OptimOptions& opts = {});

/// Derivative-free simplex search. scale sets the initial simplex spread
/// relative to max(|x_i|, 1).
OptimResult nelder_mead(const Objective& f, VecRef x0, double scale,
                        int max_iterations, double f_tol);

/// Quasi-Newton run followed by a simplex polish.
OptimResult minimize(const Objective& f, VecRef x0, const OptimOptions& opts = {});

}  // namespace ccm
