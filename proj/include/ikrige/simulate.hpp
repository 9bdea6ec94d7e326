#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ikrige/variogram.hpp"

namespace ikrige {

/// Synthetic interval-field generator used for fixtures and statistical
/// tests: centers from a zero-mean Gaussian field, radii from a second field
/// (optionally coupled to the centers) plus a positive shift, re-drawn until
/// every radius is nonnegative.
struct FieldParams {
    double x_min = 0.0, x_max = 2.0;
    double y_min = 0.0, y_max = 2.0;
    double elev_min = 1000.0, elev_max = 3000.0;
    VariogramModel center_model{VariogramFamily::exponential, 0.0, 1.0, 0.5};
    VariogramModel radius_model{VariogramFamily::exponential, 0.0, 1.0 / 9.0, 0.5};
    double radius_shift = 1.5;   // keeps radii positive
    double radius_couple = 0.0;  // adds couple * center to each radius
    double trend_beta0 = 0.0;    // optional elevation trend on the centers
    double trend_beta1 = 0.0;
    int max_redraws = 200;
};

namespace detail {

inline Eigen::LLT<Eigen::MatrixXd> field_cholesky(const std::vector<Location>& locs,
                                                  const VariogramModel& model) {
    const auto n = static_cast<Eigen::Index>(locs.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            const double d = distance(locs[static_cast<std::size_t>(i)], locs[static_cast<std::size_t>(j)]);
            cov(i, j) = cov(j, i) = cov_from_variogram(model, d);
        }
    cov.diagonal().array() += 1e-10 * std::max(model.sill(), 1.0);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("simulate_field: covariance configuration is not positive definite");
    return llt;
}

inline Eigen::VectorXd gaussian_draw(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index n,
                                     std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    return llt.matrixL() * z;
}

}  // namespace detail

inline std::vector<IntervalSample> simulate_field(std::size_t n, const FieldParams& p,
                                                  std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("simulate_field: n must be >= 1");
    p.center_model.validate();
    p.radius_model.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(p.x_min, p.x_max);
    std::uniform_real_distribution<double> uy(p.y_min, p.y_max);
    std::uniform_real_distribution<double> ue(p.elev_min, p.elev_max);

    std::vector<Location> locs(n);
    for (auto& l : locs) {
        l.x = ux(rng);
        l.y = uy(rng);
        l.elevation = ue(rng);
    }

    const auto ni = static_cast<Eigen::Index>(n);
    const auto llt_c = detail::field_cholesky(locs, p.center_model);
    const Eigen::VectorXd centers = detail::gaussian_draw(llt_c, ni, rng);

    const auto llt_r = detail::field_cholesky(locs, p.radius_model);
    Eigen::VectorXd radii(ni);
    bool ok = false;
    for (int attempt = 0; attempt < p.max_redraws; ++attempt) {
        radii = detail::gaussian_draw(llt_r, ni, rng);
        radii += p.radius_couple * centers;
        radii.array() += p.radius_shift;
        if (radii.minCoeff() >= 0.0) {
            ok = true;
            break;
        }
    }
    if (!ok)
        throw std::runtime_error("simulate_field: could not draw nonnegative radii; increase radius_shift");

    std::vector<IntervalSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double c = centers(ii) + p.trend_beta0 + p.trend_beta1 * locs[i].elevation;
        out.push_back({locs[i], Interval::from_center_radius(c, radii(ii))});
    }
    return out;
}

}  // namespace ikrige
