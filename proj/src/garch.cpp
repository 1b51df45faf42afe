#include "ccm/garch.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "ccm/optim.hpp"
#include "ccm/stats.hpp"

namespace ccm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kPersistenceCap = 0.9995;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
    const double eps = 1e-16;
    p = std::min(std::max(p, eps), 1.0 - eps);
    return std::log(p / (1.0 - p));
}

}  // namespace

Vector gjr_variance_path(const GjrParams& params, VecRef returns, double h0) {
    if (!params.valid()) throw std::invalid_argument("gjr_variance_path: invalid parameters");
    if (!(h0 > 0.0)) throw std::invalid_argument("gjr_variance_path: h0 must be positive");
    const Index t_obs = returns.size();
    Vector h2(t_obs);
    h2(0) = h0;
    for (Index t = 1; t < t_obs; ++t) {
        const double r = returns(t - 1);
        const double shock = r * r;
        h2(t) = params.omega + params.alpha * shock + params.beta * h2(t - 1) +
                (r < 0.0 ? params.gamma * shock : 0.0);
        if (!std::isfinite(h2(t)))
            throw std::runtime_error("gjr_variance_path: non-finite variance at t = " +
                                     std::to_string(t));
    }
    return h2;
}

Vector gjr_loglik_terms(const GjrParams& params, VecRef returns, double h0) {
    const Index t_obs = returns.size();
    Vector terms(t_obs);
    // Tolerates slightly negative alpha/gamma (finite-difference probes)
    // as long as the variance path stays positive.
    if (!(params.omega > 0.0) || !(h0 > 0.0) || params.persistence() >= 1.0) {
        terms.setConstant(std::numeric_limits<double>::quiet_NaN());
        return terms;
    }
    double h2 = h0;
    for (Index t = 0; t < t_obs; ++t) {
        if (t > 0) {
            const double r = returns(t - 1);
            const double shock = r * r;
            h2 = params.omega + params.alpha * shock + params.beta * h2 +
                 (r < 0.0 ? params.gamma * shock : 0.0);
        }
        if (!(h2 > 0.0) || !std::isfinite(h2)) {
            terms.setConstant(std::numeric_limits<double>::quiet_NaN());
            return terms;
        }
        terms(t) = -0.5 * (kLog2Pi + std::log(h2) + returns(t) * returns(t) / h2);
    }
    return terms;
}

double gjr_loglik(const GjrParams& params, VecRef returns, double h0) {
    const Vector terms = gjr_loglik_terms(params, returns, h0);
    return terms.allFinite() ? terms.sum() : -kHugePenalty;
}

Vector gjr_pack(const GjrParams& params) {
    if (!params.valid()) throw std::invalid_argument("gjr_pack: invalid parameters");
    const double u = params.persistence();
    const double beta_share = u > 0.0 ? params.beta / u : 0.5;
    const double rest = u - params.beta;
    const double alpha_share = rest > 0.0 ? params.alpha / rest : 0.5;
    Vector theta(4);
    theta(0) = std::log(params.omega);
    theta(1) = logit(u / kPersistenceCap);
    theta(2) = logit(beta_share);
    theta(3) = logit(alpha_share);
    return theta;
}

GjrParams gjr_unpack(VecRef theta) {
    if (theta.size() != 4) throw std::invalid_argument("gjr_unpack: need 4 entries");
    GjrParams p;
    p.omega = std::exp(theta(0));
    const double u = kPersistenceCap * sigmoid(theta(1));
    p.beta = u * sigmoid(theta(2));
    const double rest = u - p.beta;
    p.alpha = rest * sigmoid(theta(3));
    p.gamma = 2.0 * (rest - p.alpha);
    return p;
}

GarchFit fit_gjr(VecRef returns, std::uint64_t seed) {
    const Index t_obs = returns.size();
    if (t_obs < 100)
        throw std::invalid_argument("fit_gjr: need at least 100 observations, got " +
                                    std::to_string(t_obs));
    const double h0 = sample_variance(returns);
    if (!(h0 > 0.0)) throw std::invalid_argument("fit_gjr: zero-variance returns");

    const Vector r = returns;
    Objective neg_loglik = [&](const Vector& theta) {
        return -gjr_loglik(gjr_unpack(theta), r, h0);
    };

    // Near alpha = gamma = 0 the likelihood is flat in beta, so an iid
    // sample leaves the persistence essentially unidentified. Candidates
    // within one log-likelihood unit of the best are treated as ties and
    // resolved toward the least persistent representation; a constant
    // variance enters as an explicit candidate.
    const GjrParams starts[] = {
        {0.05 * h0, 0.03, 0.90, 0.02},
        {0.60 * h0, 0.05, 0.15, 0.05},
        {0.90 * h0, 0.02, 0.05, 0.02},
    };
    std::vector<OptimResult> runs;
    for (const GjrParams& start : starts)
        runs.push_back(minimize(neg_loglik, gjr_pack(start)));
    {
        const GjrParams flat{r.array().square().mean(), 1e-10, 1e-10, 0.0};
        OptimResult constant;
        constant.x = gjr_pack(flat);
        constant.value = neg_loglik(constant.x);
        constant.converged = true;
        runs.push_back(constant);
    }
    auto pick_best = [&]() {
        OptimResult best = runs.front();
        for (const OptimResult& run : runs)
            if (run.value < best.value) best = run;
        for (const OptimResult& run : runs) {
            if (run.value <= best.value + 1.0 &&
                gjr_unpack(run.x).persistence() <
                    gjr_unpack(best.x).persistence())
                best = run;
        }
        return best;
    };
    OptimResult best = pick_best();
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> jitter(0.0, 0.5);
    for (int attempt = 0; attempt < 3 && !best.converged; ++attempt) {
        Vector theta = gjr_pack(starts[0]);
        for (Index i = 0; i < theta.size(); ++i) theta(i) += jitter(rng);
        OptimResult trial = minimize(neg_loglik, theta);
        if (trial.value < best.value || (trial.converged && !best.converged)) best = trial;
    }

    GarchFit fit;
    fit.params = gjr_unpack(best.x);
    fit.h0 = h0;
    fit.variance_path = gjr_variance_path(fit.params, r, h0);
    fit.residuals = r.array() / fit.variance_path.array().sqrt();
    fit.loglik = -best.value;
    fit.converged = best.converged && std::isfinite(fit.loglik);

    fit.robust_se = Vector::Constant(4, std::numeric_limits<double>::quiet_NaN());
    if (fit.converged) {
        const GjrParams p = fit.params;
        LoglikTerms terms = [&r, h0](const Vector& natural) {
            GjrParams q;
            q.omega = natural(0);
            q.alpha = natural(1);
            q.beta = natural(2);
            q.gamma = natural(3);
            return gjr_loglik_terms(q, r, h0);
        };
        Vector natural(4);
        natural << p.omega, p.alpha, p.beta, p.gamma;
        try {
            fit.robust_se = sandwich_standard_errors(terms, natural);
        } catch (const std::runtime_error&) {
            // SEs stay NaN; the point estimate is still usable.
        }
    }
    return fit;
}

Matrix degarch(const ReturnPanel& panel, const std::vector<GarchFit>& fits) {
    panel.validate();
    if (static_cast<Index>(fits.size()) != panel.cols())
        throw std::invalid_argument("degarch: one fit per asset required");
    Matrix residuals(panel.rows(), panel.cols());
    for (Index i = 0; i < panel.cols(); ++i) {
        if (fits[i].variance_path.size() != panel.rows())
            throw std::invalid_argument("degarch: variance path length mismatch at asset " +
                                        std::to_string(i));
        residuals.col(i) =
            panel.returns.col(i).array() / fits[i].variance_path.array().sqrt();
    }
    return residuals;
}

}  // namespace ccm
