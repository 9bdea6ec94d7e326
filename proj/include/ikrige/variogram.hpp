#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ikrige/sample.hpp"

namespace ikrige {

enum class VariogramFamily { spherical, exponential, nugget_only };

enum class Channel { C, R, CR };

inline std::string to_string(VariogramFamily f) {
    switch (f) {
        case VariogramFamily::spherical: return "spherical";
        case VariogramFamily::exponential: return "exponential";
        case VariogramFamily::nugget_only: return "nugget";
    }
    return "?";
}

inline VariogramFamily family_from_string(const std::string& s) {
    if (s == "spherical" || s == "sph") return VariogramFamily::spherical;
    if (s == "exponential" || s == "exp") return VariogramFamily::exponential;
    if (s == "nugget" || s == "nugget-only" || s == "nug") return VariogramFamily::nugget_only;
    throw std::invalid_argument("unknown variogram family: " + s);
}

/// Parametric semivariogram. All families evaluate to exactly 0 at lag 0;
/// the nugget is a discontinuity at the origin. The sill is always
/// nugget + partial_sill.
struct VariogramModel {
    VariogramFamily family = VariogramFamily::spherical;
    double nugget = 0.0;
    double partial_sill = 1.0;
    double range = 1.0;

    double sill() const noexcept { return nugget + partial_sill; }

    void validate() const {
        if (nugget < 0.0 || partial_sill < 0.0 || !(range > 0.0))
            throw std::invalid_argument("VariogramModel: need nugget >= 0, partial_sill >= 0, range > 0");
    }
};

/// gamma(h) for h >= 0.
inline double eval_model(const VariogramModel& m, double h) {
    if (h < 0.0) throw std::invalid_argument("eval_model: negative lag");
    if (h == 0.0) return 0.0;
    switch (m.family) {
        case VariogramFamily::spherical: {
            if (h >= m.range) return m.nugget + m.partial_sill;
            const double u = h / m.range;
            return m.nugget + m.partial_sill * (1.5 * u - 0.5 * u * u * u);
        }
        case VariogramFamily::exponential:
            return m.nugget + m.partial_sill * (1.0 - std::exp(-h / m.range));
        case VariogramFamily::nugget_only:
            return m.nugget;
    }
    return 0.0;
}

/// C(h) = sill - gamma(h). C(0) equals the sill; for a spherical model the
/// covariance vanishes beyond the range.
inline double cov_from_variogram(const VariogramModel& m, double h) {
    if (h == 0.0) return m.sill();
    return m.sill() - eval_model(m, h);
}

/// Classical method-of-moments estimates of the center, radius, and
/// center-radius increment semivariograms on a common set of distance bins.
/// Bins with no pairs carry count 0 and NaN gamma values.
struct EmpiricalVariogram {
    std::vector<double> bin_centers;
    std::vector<double> gamma_c;
    std::vector<double> gamma_r;
    std::vector<double> gamma_cr;
    std::vector<std::size_t> pair_counts;

    std::size_t size() const noexcept { return bin_centers.size(); }

    std::span<const double> gamma(Channel ch) const {
        switch (ch) {
            case Channel::C: return gamma_c;
            case Channel::R: return gamma_r;
            case Channel::CR: return gamma_cr;
        }
        throw std::logic_error("bad channel");
    }
};

/// Pair distance d lands in bin k when edges[k] < d <= edges[k+1]. The bin
/// center reported is the mean of member distances (edge midpoint for empty
/// bins).
inline EmpiricalVariogram empirical_variograms(std::span<const IntervalSample> samples,
                                               std::span<const double> bin_edges) {
    if (samples.size() < 2)
        throw std::invalid_argument("empirical_variograms: need at least 2 samples");
    if (bin_edges.size() < 2)
        throw std::invalid_argument("empirical_variograms: need at least 2 bin edges");
    for (std::size_t k = 1; k < bin_edges.size(); ++k)
        if (!(bin_edges[k] > bin_edges[k - 1]))
            throw std::invalid_argument("empirical_variograms: bin edges must be strictly increasing");

    const std::size_t nbins = bin_edges.size() - 1;
    EmpiricalVariogram out;
    out.bin_centers.assign(nbins, 0.0);
    out.gamma_c.assign(nbins, 0.0);
    out.gamma_r.assign(nbins, 0.0);
    out.gamma_cr.assign(nbins, 0.0);
    out.pair_counts.assign(nbins, 0);
    std::vector<double> dist_sum(nbins, 0.0);

    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double d = distance(samples[i].loc, samples[j].loc);
            if (d <= bin_edges.front() || d > bin_edges.back()) continue;
            const auto it = std::lower_bound(bin_edges.begin(), bin_edges.end(), d);
            const std::size_t k = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
            const double dc = samples[i].value.center() - samples[j].value.center();
            const double dr = samples[i].value.radius() - samples[j].value.radius();
            out.gamma_c[k] += dc * dc;
            out.gamma_r[k] += dr * dr;
            out.gamma_cr[k] += dc * dr;
            dist_sum[k] += d;
            ++out.pair_counts[k];
        }
    }

    for (std::size_t k = 0; k < nbins; ++k) {
        if (out.pair_counts[k] == 0) {
            out.bin_centers[k] = 0.5 * (bin_edges[k] + bin_edges[k + 1]);
            out.gamma_c[k] = out.gamma_r[k] = out.gamma_cr[k] =
                std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double inv = 1.0 / (2.0 * static_cast<double>(out.pair_counts[k]));
        out.bin_centers[k] = dist_sum[k] / static_cast<double>(out.pair_counts[k]);
        out.gamma_c[k] *= inv;
        out.gamma_r[k] *= inv;
        out.gamma_cr[k] *= inv;
    }
    return out;
}

/// Evenly spaced bin edges 0..cutoff. The leading edge is 0, so zero-lag
/// pairs (duplicate sites) are never counted.
inline std::vector<double> make_bin_edges(double cutoff, std::size_t nbins) {
    if (!(cutoff > 0.0) || nbins == 0)
        throw std::invalid_argument("make_bin_edges: cutoff > 0 and nbins >= 1 required");
    std::vector<double> edges(nbins + 1);
    for (std::size_t k = 0; k <= nbins; ++k)
        edges[k] = cutoff * static_cast<double>(k) / static_cast<double>(nbins);
    return edges;
}

struct FitResult {
    VariogramModel model;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// d gamma / d (nugget, partial_sill, range) at lag h.
inline void model_jacobian(const VariogramModel& m, double h, double* j) {
    j[0] = 1.0;
    switch (m.family) {
        case VariogramFamily::spherical: {
            if (h >= m.range) {
                j[1] = 1.0;
                j[2] = 0.0;
            } else {
                const double u = h / m.range;
                j[1] = 1.5 * u - 0.5 * u * u * u;
                j[2] = -m.partial_sill * (1.5 * h / (m.range * m.range)) * (1.0 - u * u);
            }
            break;
        }
        case VariogramFamily::exponential: {
            const double e = std::exp(-h / m.range);
            j[1] = 1.0 - e;
            j[2] = -m.partial_sill * e * h / (m.range * m.range);
            break;
        }
        case VariogramFamily::nugget_only:
            j[1] = 0.0;
            j[2] = 0.0;
            break;
    }
}

}  // namespace detail

/// Weighted least squares fit of a variogram model to one channel of an
/// empirical variogram. Weights are N_k / gamma(h_k; theta)^2 and are
/// refreshed from the current model each iteration. The solve is a damped
/// Gauss-Newton with the parameters clamped to the feasible box
/// (nugget >= 0, partial_sill >= 0, range > 0).
inline FitResult fit_wls(const EmpiricalVariogram& emp, Channel channel,
                         VariogramFamily family, const VariogramModel& init,
                         int max_iterations = 200, double rel_tol = 1e-10) {
    std::vector<double> h, g, n;
    const auto gamma_hat = emp.gamma(channel);
    for (std::size_t k = 0; k < emp.size(); ++k) {
        if (emp.pair_counts[k] == 0 || !std::isfinite(gamma_hat[k])) continue;
        h.push_back(emp.bin_centers[k]);
        g.push_back(gamma_hat[k]);
        n.push_back(static_cast<double>(emp.pair_counts[k]));
    }
    if (h.size() < 3)
        throw std::invalid_argument("fit_wls: need at least 3 nonempty bins");

    VariogramModel m = init;
    m.family = family;
    m.validate();
    const double max_lag = *std::max_element(h.begin(), h.end());
    const double min_range = 1e-9 * max_lag;
    if (m.range < min_range) m.range = min_range;

    const auto objective = [&](const VariogramModel& mm) {
        double q = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double pred = eval_model(mm, h[k]);
            const double denom = std::max(pred * pred, 1e-24);
            const double r = g[k] - pred;
            q += n[k] * r * r / denom;
        }
        return q;
    };

    double obj = objective(m);
    FitResult result;
    int it = 0;
    for (; it < max_iterations; ++it) {
        // Linearize with weights frozen at the current model.
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double pred = eval_model(m, h[k]);
            const double w = n[k] / std::max(pred * pred, 1e-24);
            double jrow[3];
            detail::model_jacobian(m, h[k], jrow);
            const double r = g[k] - pred;
            for (int a = 0; a < 3; ++a) {
                jtr(a) += w * jrow[a] * r;
                for (int b = 0; b < 3; ++b) jtj(a, b) += w * jrow[a] * jrow[b];
            }
        }
        // Tiny Levenberg damping keeps the normal equations solvable when a
        // parameter has no effect (nugget-only family, lags past the range).
        const double mu = 1e-12 * std::max(1.0, jtj.trace());
        Eigen::Vector3d step = (jtj + mu * Eigen::Matrix3d::Identity()).ldlt().solve(jtr);

        bool improved = false;
        double scale = 1.0;
        VariogramModel trial = m;
        for (int half = 0; half < 40; ++half) {
            trial.nugget = std::max(0.0, m.nugget + scale * step(0));
            trial.partial_sill = std::max(0.0, m.partial_sill + scale * step(1));
            trial.range = std::max(min_range, m.range + scale * step(2));
            const double trial_obj = objective(trial);
            if (trial_obj <= obj) {
                improved = true;
                const double drop = obj - trial_obj;
                m = trial;
                obj = trial_obj;
                if (drop <= rel_tol * std::max(obj, 1e-30)) {
                    result.converged = true;
                }
                break;
            }
            scale *= 0.5;
        }
        if (!improved || result.converged) {
            result.converged = true;
            ++it;
            break;
        }
    }
    if (!result.converged && it >= max_iterations)
        throw std::runtime_error("fit_wls: no convergence after " + std::to_string(max_iterations) + " iterations");
    if (m.family == VariogramFamily::nugget_only) {
        m.partial_sill = 0.0;
    }
    result.model = m;
    result.objective = obj;
    result.iterations = it;
    return result;
}

/// Plain-text model descriptor: "family nugget partial_sill range".
inline std::string describe_model(const VariogramModel& m) {
    std::ostringstream os;
    os.precision(9);
    os << to_string(m.family) << ' ' << m.nugget << ' ' << m.partial_sill << ' ' << m.range;
    return os.str();
}

inline VariogramModel parse_model(const std::string& text) {
    std::istringstream is(text);
    std::string family;
    VariogramModel m;
    if (!(is >> family >> m.nugget >> m.partial_sill >> m.range))
        throw std::invalid_argument("parse_model: expected 'family nugget partial_sill range', got: " + text);
    m.family = family_from_string(family);
    m.validate();
    return m;
}

}  // namespace ikrige
