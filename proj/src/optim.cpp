#include "ccm/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ccm {

namespace {

double safe_eval(const Objective& f, const Vector& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kHugePenalty;
}

}  // namespace

Vector numeric_gradient(const Objective& f, VecRef x, double rel_step) {
    const Index k = x.size();
    Vector g(k);
    Vector xp = x, xm = x;
    for (Index i = 0; i < k; ++i) {
        const double h = rel_step * std::max(std::abs(x(i)), 1.0);
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        g(i) = (safe_eval(f, xp) - safe_eval(f, xm)) / (2.0 * h);
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return g;
}

OptimResult bfgs_minimize(const Objective& f, VecRef x0, const OptimOptions& opts) {
    const Index k = x0.size();
    OptimResult res;
    res.x = x0;
    res.value = safe_eval(f, res.x);
    if (res.value >= kHugePenalty) return res;

    Matrix hinv = Matrix::Identity(k, k);
    Vector g = numeric_gradient(f, res.x, opts.rel_step);
    bool reset_done = false;

    for (int it = 0; it < opts.max_iterations; ++it) {
        res.iterations = it + 1;
        if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol * (1.0 + std::abs(res.value))) {
            res.converged = true;
            break;
        }
        Vector dir = -(hinv * g);
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            dir = -g;
            slope = g.dot(dir);
            if (!(slope < 0.0)) break;
        }

        // Armijo backtracking.
        double step = 1.0;
        double f_new = kHugePenalty;
        Vector x_new;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            x_new = res.x + step * dir;
            f_new = safe_eval(f, x_new);
            if (f_new <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (reset_done) break;
            hinv.setIdentity();
            reset_done = true;
            continue;
        }

        const Vector g_new = numeric_gradient(f, x_new, opts.rel_step);
        const Vector s = x_new - res.x;
        const Vector y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Matrix eye = Matrix::Identity(k, k);
            hinv = (eye - rho * s * y.transpose()) * hinv *
                       (eye - rho * y * s.transpose()) +
                   rho * s * s.transpose();
        }
        res.x = x_new;
        res.value = f_new;
        g = g_new;
    }
    return res;
}

OptimResult nelder_mead(const Objective& f, VecRef x0, double scale,
                        int max_iterations, double f_tol) {
    const Index k = x0.size();
    OptimResult res;
    res.x = x0;
    res.value = safe_eval(f, res.x);
    if (k == 0) {
        res.converged = true;
        return res;
    }

    std::vector<Vector> pts(k + 1, Vector(x0));
    std::vector<double> vals(k + 1);
    vals[0] = res.value;
    for (Index i = 0; i < k; ++i) {
        pts[i + 1](i) += scale * std::max(std::abs(x0(i)), 1.0);
        vals[i + 1] = safe_eval(f, pts[i + 1]);
    }

    auto order = [&]() {
        for (std::size_t a = 1; a < pts.size(); ++a) {
            auto pv = pts[a];
            auto fv = vals[a];
            std::size_t b = a;
            while (b > 0 && vals[b - 1] > fv) {
                pts[b] = pts[b - 1];
                vals[b] = vals[b - 1];
                --b;
            }
            pts[b] = pv;
            vals[b] = fv;
        }
    };
    order();

    for (int it = 0; it < max_iterations; ++it) {
        res.iterations = it + 1;
        if (vals[k] - vals[0] < f_tol * (1.0 + std::abs(vals[0]))) {
            res.converged = true;
            break;
        }
        Vector centroid = Vector::Zero(k);
        for (Index i = 0; i < k; ++i) centroid += pts[i];
        centroid /= static_cast<double>(k);

        const Vector refl = centroid + (centroid - pts[k]);
        const double f_refl = safe_eval(f, refl);
        if (f_refl < vals[0]) {
            const Vector expd = centroid + 2.0 * (centroid - pts[k]);
            const double f_expd = safe_eval(f, expd);
            if (f_expd < f_refl) {
                pts[k] = expd;
                vals[k] = f_expd;
            } else {
                pts[k] = refl;
                vals[k] = f_refl;
            }
        } else if (f_refl < vals[k - 1]) {
            pts[k] = refl;
            vals[k] = f_refl;
        } else {
            const Vector contr = centroid + 0.5 * (pts[k] - centroid);
            const double f_contr = safe_eval(f, contr);
            if (f_contr < vals[k]) {
                pts[k] = contr;
                vals[k] = f_contr;
            } else {
                for (Index i = 1; i <= k; ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    vals[i] = safe_eval(f, pts[i]);
                }
            }
        }
        order();
    }

    if (vals[0] < res.value) {
        res.x = pts[0];
        res.value = vals[0];
    }
    return res;
}

OptimResult minimize(const Objective& f, VecRef x0, const OptimOptions& opts) {
    OptimResult qn = bfgs_minimize(f, x0, opts);
    OptimResult polish = nelder_mead(f, qn.x, 0.05, opts.simplex_max_iterations,
                                     opts.simplex_tol);
    OptimResult res;
    if (polish.value <= qn.value) {
        res = polish;
        res.converged = polish.converged || qn.converged;
    } else {
        res = qn;
    }
    res.iterations = qn.iterations + polish.iterations;
    if (!std::isfinite(res.value) || res.value >= kHugePenalty) res.converged = false;
    return res;
}

}  // namespace ccm
