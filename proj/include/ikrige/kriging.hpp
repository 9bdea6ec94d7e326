#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ikrige/interval.hpp"
#include "ikrige/sample.hpp"
#include "ikrige/variogram.hpp"

namespace ikrige {

enum class KrigingMode { SK, OK };

/// Which semivariogram the radius bracket of the variogram-form prediction
/// variance evaluates against. The structurally symmetric choice is the
/// radius variogram; the center variogram is kept selectable because the two
/// readings disagree in general.
enum class RadiusBracket { gamma_r, gamma_c };

/// One prediction task: interval observations, a target site, fitted
/// center/radius (and optionally cross) variogram models, the center/radius
/// weighting matrix, and the kriging flavor.
///
/// SK assumes a known mean interval; only its center is used (subtracted
/// from the sample centers before prediction and added back after). OK
/// estimates nothing about the mean but constrains the weights to a convex
/// combination.
struct KrigingProblem {
    std::vector<IntervalSample> samples;
    Location target;
    VariogramModel model_c;
    VariogramModel model_r;
    std::optional<VariogramModel> model_cr;
    AMatrix a;
    KrigingMode mode = KrigingMode::OK;
    std::optional<Interval> known_mean;  // SK only

    std::size_t size() const noexcept { return samples.size(); }

    void validate() const {
        if (samples.empty())
            throw std::invalid_argument("KrigingProblem: no samples");
        model_c.validate();
        model_r.validate();
        if (a.a12() != 0.0 && !model_cr)
            throw std::invalid_argument("KrigingProblem: a12 != 0 requires a cross variogram model");
        if (model_cr) model_cr->validate();
        if (known_mean && mode != KrigingMode::SK)
            throw std::invalid_argument("KrigingProblem: known_mean is an SK-only field");
    }
};

/// Precomputed covariance structure of a problem: pairwise and
/// sample-to-target covariances for the three channels, plus the zero-lag
/// values that form the additive constant of the prediction variance.
struct CovarianceCache {
    Eigen::MatrixXd ccc;       // C^{C,C}(x_i - x_j)
    Eigen::MatrixXd crr;       // C^{R,R}
    Eigen::MatrixXd ccr;       // C^{C,R}, empty when a12 == 0
    Eigen::VectorXd ccc_star;  // C^{C,C}(x_i - x*)
    Eigen::VectorXd crr_star;
    Eigen::VectorXd ccr_star;
    double ccc0 = 0.0, crr0 = 0.0, ccr0 = 0.0;
    double a11 = 0.0, a22 = 0.0, a12 = 0.0;
    bool has_cr = false;

    std::size_t size() const noexcept { return static_cast<std::size_t>(ccc.rows()); }

    /// The additive constant dropped by the covariance-form variance.
    double additive_constant() const noexcept {
        return a11 * ccc0 + a22 * crr0 + 2.0 * a12 * ccr0;
    }
};

inline CovarianceCache build_cache(const KrigingProblem& p) {
    p.validate();
    const auto n = static_cast<Eigen::Index>(p.size());
    CovarianceCache c;
    c.a11 = p.a.a11();
    c.a22 = p.a.a22();
    c.a12 = p.a.a12();
    c.has_cr = p.model_cr.has_value();
    c.ccc.resize(n, n);
    c.crr.resize(n, n);
    c.ccc_star.resize(n);
    c.crr_star.resize(n);
    if (c.has_cr) {
        c.ccr.resize(n, n);
        c.ccr_star.resize(n);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& li = p.samples[static_cast<std::size_t>(i)].loc;
        for (Eigen::Index j = i; j < n; ++j) {
            const double d = distance(li, p.samples[static_cast<std::size_t>(j)].loc);
            c.ccc(i, j) = c.ccc(j, i) = cov_from_variogram(p.model_c, d);
            c.crr(i, j) = c.crr(j, i) = cov_from_variogram(p.model_r, d);
            if (c.has_cr) c.ccr(i, j) = c.ccr(j, i) = cov_from_variogram(*p.model_cr, d);
        }
        const double dstar = distance(li, p.target);
        c.ccc_star(i) = cov_from_variogram(p.model_c, dstar);
        c.crr_star(i) = cov_from_variogram(p.model_r, dstar);
        if (c.has_cr) c.ccr_star(i) = cov_from_variogram(*p.model_cr, dstar);
    }
    c.ccc0 = cov_from_variogram(p.model_c, 0.0);
    c.crr0 = cov_from_variogram(p.model_r, 0.0);
    c.ccr0 = c.has_cr ? cov_from_variogram(*p.model_cr, 0.0) : 0.0;
    return c;
}

/// Covariance-form prediction variance without its additive constant:
///   a11 [sum_ij l_i l_j Ccc_ij - 2 sum_i l_i Ccc_i*]
/// + a22 [sum_ij |l_i l_j| Crr_ij - 2 sum_i |l_i| Crr_i*]
/// + 2 a12 [sum_ij l_i |l_j| Ccr_ij - sum_i |l_i| Ccr_*i - sum_i l_i Ccr_i*].
inline double prediction_variance_cov(const Eigen::VectorXd& lambda, const CovarianceCache& c) {
    if (lambda.size() != static_cast<Eigen::Index>(c.size()))
        throw std::invalid_argument("prediction_variance_cov: weight/sample size mismatch");
    const Eigen::VectorXd u = lambda.cwiseAbs();
    double v = c.a11 * (lambda.dot(c.ccc * lambda) - 2.0 * c.ccc_star.dot(lambda));
    v += c.a22 * (u.dot(c.crr * u) - 2.0 * c.crr_star.dot(u));
    if (c.has_cr && c.a12 != 0.0)
        v += 2.0 * c.a12 * (lambda.dot(c.ccr * u) - c.ccr_star.dot(u) - c.ccr_star.dot(lambda));
    return v;
}

/// Full prediction variance: covariance form plus the additive constant
/// a11 C^{C,C}(0) + a22 C^{R,R}(0) + 2 a12 C^{C,R}(0).
inline double prediction_variance_full(const Eigen::VectorXd& lambda, const CovarianceCache& c) {
    return prediction_variance_cov(lambda, c) + c.additive_constant();
}

namespace detail {

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline double prediction_variance_cov(std::span<const double> lambda, const KrigingProblem& p) {
    return prediction_variance_cov(detail::to_eigen(lambda), build_cache(p));
}

inline double prediction_variance_full(std::span<const double> lambda, const KrigingProblem& p) {
    return prediction_variance_full(detail::to_eigen(lambda), build_cache(p));
}

/// Variogram-form prediction variance. Valid only under the unbiasedness
/// constraints sum l_i = 1 and sum |l_i| = 1; callers outside that set get an
/// error rather than a meaningless number.
inline double prediction_variance_vario(std::span<const double> lambda, const KrigingProblem& p,
                                        RadiusBracket radius_bracket = RadiusBracket::gamma_r,
                                        double constraint_tol = 1e-4) {
    p.validate();
    const std::size_t n = p.size();
    if (lambda.size() != n)
        throw std::invalid_argument("prediction_variance_vario: weight/sample size mismatch");
    double sum = 0.0, sum_abs = 0.0;
    for (double l : lambda) {
        sum += l;
        sum_abs += std::abs(l);
    }
    if (std::abs(sum - 1.0) > constraint_tol || std::abs(sum_abs - 1.0) > constraint_tol)
        throw std::invalid_argument("prediction_variance_vario: weights violate the unbiasedness constraints");

    const bool has_cr = p.model_cr.has_value() && p.a.a12() != 0.0;
    double term_c = 0.0, term_r = 0.0, term_cr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& li = p.samples[i].loc;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = distance(li, p.samples[j].loc);
            const double w = lambda[i] * lambda[j];
            term_c -= w * eval_model(p.model_c, d);
            term_r -= w * eval_model(p.model_r, d);
            if (has_cr && i != j) term_cr -= w * eval_model(*p.model_cr, d);
        }
        const double dstar = distance(li, p.target);
        term_c += 2.0 * lambda[i] * eval_model(p.model_c, dstar);
        const VariogramModel& radius_model =
            radius_bracket == RadiusBracket::gamma_r ? p.model_r : p.model_c;
        term_r += 2.0 * lambda[i] * eval_model(radius_model, dstar);
        if (has_cr) term_cr += 2.0 * lambda[i] * eval_model(*p.model_cr, dstar);
    }
    return p.a.a11() * term_c + p.a.a22() * term_r + 2.0 * p.a.a12() * term_cr;
}

/// Per-penalty-stage solver trace.
struct PenaltyStep {
    int k = 0;                // penalty iteration index
    double c = 0.0;           // penalty parameter
    double p = 0.0;           // constraint residual 1 - sum(|l|) (SK) or 1 - sum(l) (OK)
    int newton_steps = 0;
    double objective = 0.0;   // penalized objective at the stage minimizer
};

inline std::string to_string(const PenaltyStep& s) {
    std::ostringstream os;
    os.precision(9);
    os << s.k << ", " << s.c << ", " << s.p << ", " << s.newton_steps << ", " << s.objective;
    return os.str();
}

struct KrigingSolution {
    std::vector<double> weights;
    Interval prediction;
    double kriging_variance = 0.0;   // full variance, additive constant restored
    double constraint_residual = 0.0;
    int penalty_steps = 0;
    int newton_steps = 0;
    bool converged = false;
    std::vector<PenaltyStep> trace;
};

}  // namespace ikrige
