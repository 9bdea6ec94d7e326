#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ikrige/kriging.hpp"

namespace ikrige {

enum class PenaltyVariant { original, adjusted };

inline PenaltyVariant variant_from_string(const std::string& s) {
    if (s == "original") return PenaltyVariant::original;
    if (s == "adjusted") return PenaltyVariant::adjusted;
    throw std::invalid_argument("unknown penalty variant: " + s);
}

/// Thrown when an ordinary-kriging iterate leaves the feasible region
/// (a weight drops below the allowed slack at a constraint check).
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    double c0_sk = 1.0;    // the literature's suggestion of 0 makes 1/c undefined
    double c0_ok = 100.0;
    double eta = 0.8;      // multiplicative decrease of c per penalty stage
    double tolp = 1e-4;    // constraint satisfaction tolerance
    double tolz = 1e-3;    // effective-zero threshold / barrier shift
    int maxp = 50;         // penalty stages
    int maxq = 100;        // Newton iterations per stage
    double newton_tol = 1e-10;  // step-norm stopping rule
    PenaltyVariant variant = PenaltyVariant::adjusted;

    void validate() const {
        if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("SolverConfig: eta must be in (0,1)");
        if (!(c0_sk > 0.0) || !(c0_ok > 0.0)) throw std::invalid_argument("SolverConfig: c0 must be positive");
        if (!(tolp > 0.0) || !(tolz > 0.0) || !(newton_tol > 0.0))
            throw std::invalid_argument("SolverConfig: tolerances must be positive");
        if (maxp < 1 || maxq < 1) throw std::invalid_argument("SolverConfig: iteration caps must be >= 1");
    }
};

/// Penalty bookkeeping for one SUMT stage.
struct PenaltyState {
    double c = 1.0;
    KrigingMode mode = KrigingMode::OK;
    PenaltyVariant variant = PenaltyVariant::adjusted;
    double tolz = 1e-3;  // only the adjusted OK penalty reads this
};

namespace detail {

constexpr double kLambda0Floor = 1e-12;

inline double sum_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().sum(); }

}  // namespace detail

/// Constraint penalty P(lambda, c). Infeasible iterates (log of a
/// nonpositive argument) raise std::domain_error.
inline double penalty(const Eigen::VectorXd& lambda, const PenaltyState& s, std::size_t n) {
    const double c = s.c;
    if (s.mode == KrigingMode::SK) {
        const double gap = 1.0 - detail::sum_abs(lambda);
        double p = gap * gap / c;
        if (s.variant == PenaltyVariant::adjusted) {
            double barrier = 0.0;
            for (Eigen::Index i = 0; i < lambda.size(); ++i) {
                const double sq = lambda(i) * lambda(i);
                if (sq <= 0.0) throw std::domain_error("penalty: zero weight in SK barrier");
                barrier += std::log(sq);
            }
            p -= c / (static_cast<double>(n) * static_cast<double>(n)) * barrier;
        }
        return p;
    }
    // OK
    if (s.variant == PenaltyVariant::original) {
        double barrier = 0.0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            if (lambda(i) <= 0.0) throw std::domain_error("penalty: nonpositive weight in OK barrier");
            barrier += std::log(lambda(i));
        }
        const double gap = 1.0 - detail::sum_abs(lambda);
        return -c * barrier + gap * gap / c;
    }
    double barrier = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double shifted = lambda(i) + s.tolz;
        if (shifted <= 0.0) throw std::domain_error("penalty: weight below -tolz in adjusted OK barrier");
        barrier += std::log(shifted);
    }
    const double gap = 1.0 - lambda.sum();
    return -c * barrier + gap * gap / (c * static_cast<double>(n));
}

inline double penalty(std::span<const double> lambda, const PenaltyState& s, std::size_t n) {
    return penalty(detail::to_eigen(lambda), s, n);
}

/// Prediction-variance part of the objective. SK keeps the |lambda| weights
/// of the radius channel; OK substitutes lambda directly (its constraint set
/// makes them equal, and the substitution is what keeps the OK objective
/// twice differentiable).
inline double variance_part(const Eigen::VectorXd& lambda, const CovarianceCache& c, KrigingMode mode) {
    const Eigen::VectorXd u = mode == KrigingMode::SK ? lambda.cwiseAbs() : lambda;
    double v = c.a11 * (lambda.dot(c.ccc * lambda) - 2.0 * c.ccc_star.dot(lambda));
    v += c.a22 * (u.dot(c.crr * u) - 2.0 * c.crr_star.dot(u));
    if (c.has_cr && c.a12 != 0.0)
        v += 2.0 * c.a12 * (lambda.dot(c.ccr * u) - c.ccr_star.dot(u) - c.ccr_star.dot(lambda));
    return v;
}

/// Penalized objective Q = V + P.
inline double penalized_objective(const Eigen::VectorXd& lambda, const PenaltyState& s,
                                  const CovarianceCache& cache) {
    return variance_part(lambda, cache, s.mode) + penalty(lambda, s, cache.size());
}

namespace detail {

// Derivative surrogates for |lambda_k|: the original SK variant linearizes
// around lambda0 (slope lambda_k/|lambda_k0|, curvature 1/|lambda_k0|), the
// adjusted variant uses the exact a.e. derivative sgn with zero curvature.
// OK substitutes lambda for |lambda| outright.
struct AbsRule {
    Eigen::VectorXd slope;      // s_k
    Eigen::VectorXd curvature;  // w_k
};

inline AbsRule abs_rule(const Eigen::VectorXd& lambda, const Eigen::VectorXd& lambda0,
                        KrigingMode mode, PenaltyVariant variant) {
    const Eigen::Index n = lambda.size();
    AbsRule r{Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n)};
    if (mode == KrigingMode::OK) return r;
    if (variant == PenaltyVariant::original) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (lambda0(k) == 0.0)
                throw std::invalid_argument(
                    "gradient/hessian: zero lambda0 component under the original SK variant");
            const double a0 = std::max(std::abs(lambda0(k)), kLambda0Floor);
            r.slope(k) = lambda(k) / a0;
            r.curvature(k) = 1.0 / a0;
        }
    } else {
        for (Eigen::Index k = 0; k < n; ++k)
            r.slope(k) = lambda(k) > 0.0 ? 1.0 : (lambda(k) < 0.0 ? -1.0 : 0.0);
    }
    return r;
}

}  // namespace detail

/// Gradient of the penalized objective. lambda0 is the linearization point
/// of |lambda| used by the original SK variant; the other mode/variant
/// combinations ignore it.
inline Eigen::VectorXd gradient(const Eigen::VectorXd& lambda, const Eigen::VectorXd& lambda0,
                                const PenaltyState& s, const CovarianceCache& cache) {
    const Eigen::Index n = lambda.size();
    if (lambda0.size() != n || static_cast<std::size_t>(n) != cache.size())
        throw std::invalid_argument("gradient: size mismatch");
    const auto rule = detail::abs_rule(lambda, lambda0, s.mode, s.variant);
    const bool sk = s.mode == KrigingMode::SK;
    const Eigen::VectorXd u = sk ? lambda.cwiseAbs() : lambda;

    Eigen::VectorXd g = cache.a11 * 2.0 * (cache.ccc * lambda - cache.ccc_star);
    const Eigen::VectorXd f_rr = 2.0 * (cache.crr * u - cache.crr_star);
    g += cache.a22 * rule.slope.cwiseProduct(f_rr);
    if (cache.has_cr && cache.a12 != 0.0) {
        const Eigen::VectorXd ccr_u = cache.ccr * u;
        const Eigen::VectorXd ccr_l = cache.ccr * lambda;
        g += 2.0 * cache.a12 *
             (ccr_u + rule.slope.cwiseProduct(ccr_l - cache.ccr_star) - cache.ccr_star);
    }

    const double c = s.c;
    const double nd = static_cast<double>(n);
    if (sk) {
        const double gap = 1.0 - detail::sum_abs(lambda);
        g -= (2.0 / c) * gap * rule.slope;
        if (s.variant == PenaltyVariant::adjusted)
            for (Eigen::Index k = 0; k < n; ++k) g(k) -= 2.0 * c / (nd * nd * lambda(k));
    } else {
        if (s.variant == PenaltyVariant::original) {
            const double gap = 1.0 - detail::sum_abs(lambda);
            for (Eigen::Index k = 0; k < n; ++k) g(k) += -c / lambda(k) - (2.0 / c) * gap;
        } else {
            const double gap = 1.0 - lambda.sum();
            for (Eigen::Index k = 0; k < n; ++k)
                g(k) += -c / (lambda(k) + s.tolz) - (2.0 / (c * nd)) * gap;
        }
    }
    return g;
}

/// Hessian of the penalized objective (same linearization conventions as
/// the gradient; symmetric by construction).
inline Eigen::MatrixXd hessian(const Eigen::VectorXd& lambda, const Eigen::VectorXd& lambda0,
                               const PenaltyState& s, const CovarianceCache& cache) {
    const Eigen::Index n = lambda.size();
    if (lambda0.size() != n || static_cast<std::size_t>(n) != cache.size())
        throw std::invalid_argument("hessian: size mismatch");
    const auto rule = detail::abs_rule(lambda, lambda0, s.mode, s.variant);
    const bool sk = s.mode == KrigingMode::SK;
    const Eigen::VectorXd u = sk ? lambda.cwiseAbs() : lambda;

    Eigen::MatrixXd h = 2.0 * cache.a11 * cache.ccc;
    h += 2.0 * cache.a22 * (rule.slope * rule.slope.transpose()).cwiseProduct(cache.crr);
    if (cache.has_cr && cache.a12 != 0.0) {
        const Eigen::MatrixXd sum_slopes =
            rule.slope * Eigen::RowVectorXd::Ones(n) + Eigen::VectorXd::Ones(n) * rule.slope.transpose();
        h += 2.0 * cache.a12 * sum_slopes.cwiseProduct(cache.ccr);
    }
    // Curvature of the |lambda| surrogate contributes only on the diagonal.
    if (sk && s.variant == PenaltyVariant::original) {
        const Eigen::VectorXd f_rr = 2.0 * (cache.crr * u - cache.crr_star);
        for (Eigen::Index k = 0; k < n; ++k) h(k, k) += cache.a22 * rule.curvature(k) * f_rr(k);
        if (cache.has_cr && cache.a12 != 0.0) {
            const Eigen::VectorXd ccr_l = cache.ccr * lambda;
            for (Eigen::Index k = 0; k < n; ++k)
                h(k, k) += 2.0 * cache.a12 * rule.curvature(k) * (ccr_l(k) - cache.ccr_star(k));
        }
    }

    const double c = s.c;
    const double nd = static_cast<double>(n);
    if (sk) {
        h += (2.0 / c) * rule.slope * rule.slope.transpose();
        if (s.variant == PenaltyVariant::original) {
            const double gap = 1.0 - detail::sum_abs(lambda);
            for (Eigen::Index k = 0; k < n; ++k) h(k, k) -= (2.0 / c) * rule.curvature(k) * gap;
        } else {
            for (Eigen::Index k = 0; k < n; ++k)
                h(k, k) += 2.0 * c / (nd * nd * lambda(k) * lambda(k));
        }
    } else {
        if (s.variant == PenaltyVariant::original) {
            h.array() += 2.0 / c;
            for (Eigen::Index k = 0; k < n; ++k) h(k, k) += c / (lambda(k) * lambda(k));
        } else {
            h.array() += 2.0 / (c * nd);
            for (Eigen::Index k = 0; k < n; ++k) {
                const double shifted = lambda(k) + s.tolz;
                h(k, k) += c / (shifted * shifted);
            }
        }
    }
    return h;
}

struct NewtonResult {
    Eigen::VectorXd lambda;
    int steps = 0;
    bool converged = false;
    double objective = std::numeric_limits<double>::quiet_NaN();
};

/// Damped Newton minimization of the penalized objective at a fixed penalty
/// parameter. The |lambda| linearization point is refreshed to the previous
/// iterate before every step. Singular or non-descent Newton systems fall
/// back to a scaled gradient step; steps that fail to decrease the objective
/// are halved up to 30 times.
inline NewtonResult newton_minimize(const CovarianceCache& cache, const PenaltyState& s,
                                    const Eigen::VectorXd& lambda_init, const SolverConfig& cfg) {
    const auto safe_objective = [&](const Eigen::VectorXd& l) {
        try {
            const double q = penalized_objective(l, s, cache);
            return std::isfinite(q) ? q : std::numeric_limits<double>::infinity();
        } catch (const std::domain_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    NewtonResult res;
    res.lambda = lambda_init;
    double q = safe_objective(res.lambda);
    if (!std::isfinite(q))
        throw std::domain_error("newton_minimize: infeasible starting point");

    for (int m = 0; m < cfg.maxq; ++m) {
        // Linearization point: the previous iterate, floored away from zero.
        Eigen::VectorXd lambda0 = res.lambda;
        for (Eigen::Index i = 0; i < lambda0.size(); ++i)
            if (std::abs(lambda0(i)) < detail::kLambda0Floor)
                lambda0(i) = lambda0(i) < 0.0 ? -detail::kLambda0Floor : detail::kLambda0Floor;
        const Eigen::VectorXd g = gradient(res.lambda, lambda0, s, cache);
        const Eigen::MatrixXd h = hessian(res.lambda, lambda0, s, cache);

        Eigen::VectorXd dir = h.ldlt().solve(g);
        const double hnorm = h.cwiseAbs().rowwise().sum().maxCoeff();
        if (!dir.allFinite() || g.dot(dir) <= 0.0)
            dir = g / std::max(hnorm, 1.0);  // fallback: scaled gradient

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        double q_trial = q;
        for (int half = 0; half < 30; ++half) {
            trial = res.lambda - t * dir;
            q_trial = safe_objective(trial);
            if (q_trial < q) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted && g.dot(dir) > 0.0) {
            // Retry along the raw gradient before giving up.
            dir = g / std::max(hnorm, 1.0);
            t = 1.0;
            for (int half = 0; half < 30; ++half) {
                trial = res.lambda - t * dir;
                q_trial = safe_objective(trial);
                if (q_trial < q) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        ++res.steps;
        if (!accepted) {
            res.converged = true;  // no descent direction left at this scale
            break;
        }
        const double step_norm = (t * dir).cwiseAbs().maxCoeff();
        res.lambda = trial;
        q = q_trial;
        if (step_norm < cfg.newton_tol) {
            res.converged = true;
            break;
        }
    }
    res.objective = q;
    return res;
}

struct SumtResult {
    Eigen::VectorXd lambda;
    double constraint_residual = 0.0;
    int penalty_steps = 0;
    int newton_steps = 0;
    bool converged = false;
    std::vector<PenaltyStep> trace;
};

/// Sequential unconstrained minimization: start from equal weights (or a
/// caller-supplied feasible start), minimize the penalized objective, test
/// the unbiasedness constraint, shrink c and repeat. OK runs abort with
/// infeasible_error when a weight falls below 0 (original penalty) or below
/// -tolz (adjusted penalty); under the adjusted penalty, weights below tolz
/// are set to zero between stages.
inline SumtResult sumt(const CovarianceCache& cache, KrigingMode mode, const SolverConfig& cfg,
                       const Eigen::VectorXd* initial = nullptr) {
    cfg.validate();
    const auto n = static_cast<Eigen::Index>(cache.size());
    SumtResult res;
    res.lambda = initial ? *initial : Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    if (res.lambda.size() != n) throw std::invalid_argument("sumt: bad initial weight size");

    PenaltyState state{mode == KrigingMode::SK ? cfg.c0_sk : cfg.c0_ok, mode, cfg.variant, cfg.tolz};
    const bool ok_mode = mode == KrigingMode::OK;

    for (int k = 1; k <= cfg.maxp; ++k) {
        NewtonResult inner = newton_minimize(cache, state, res.lambda, cfg);
        res.lambda = inner.lambda;
        res.newton_steps += inner.steps;
        res.penalty_steps = k;

        const double p = ok_mode ? 1.0 - res.lambda.sum() : 1.0 - detail::sum_abs(res.lambda);
        res.constraint_residual = p;
        res.trace.push_back({k, state.c, p, inner.steps, inner.objective});

        if (ok_mode) {
            const double floor_allowed = cfg.variant == PenaltyVariant::original ? 0.0 : -cfg.tolz;
            if (res.lambda.minCoeff() < floor_allowed)
                throw infeasible_error("sumt: OK weight left the feasible region at penalty stage " +
                                       std::to_string(k));
        }
        if (std::abs(p) < cfg.tolp) {
            res.converged = true;
            break;
        }
        if (ok_mode && cfg.variant == PenaltyVariant::adjusted) {
            // Effective zeros: freeze near-zero weights at exactly zero
            // before the next stage (they remain free variables).
            Eigen::VectorXd clamped = res.lambda;
            int kept = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (clamped(i) < cfg.tolz)
                    clamped(i) = 0.0;
                else
                    ++kept;
            }
            if (kept > 0) res.lambda = clamped;
        }
        state.c *= cfg.eta;
    }
    return res;
}

// Convenience overloads on spans/problems for callers outside the solver.

inline double penalty(std::span<const double> lambda, const PenaltyState& s, const KrigingProblem& p) {
    return penalty(detail::to_eigen(lambda), s, p.size());
}

inline std::vector<double> gradient(std::span<const double> lambda, std::span<const double> lambda0,
                                    const PenaltyState& s, const KrigingProblem& p) {
    const Eigen::VectorXd g = gradient(detail::to_eigen(lambda), detail::to_eigen(lambda0), s, build_cache(p));
    return {g.data(), g.data() + g.size()};
}

}  // namespace ikrige
