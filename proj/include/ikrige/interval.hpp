#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace ikrige {

/// A non-empty closed bounded interval [lower, upper].
///
/// Stored as its endpoints; center/radius views are computed on demand so
/// that exact inputs survive round trips. Degenerate intervals
/// (lower == upper) are first-class values.
class Interval {
public:
    Interval() = default;

    Interval(double lower, double upper) : lower_(lower), upper_(upper) {
        if (!std::isfinite(lower) || !std::isfinite(upper))
            throw std::invalid_argument("Interval: endpoints must be finite");
        if (lower > upper)
            throw std::invalid_argument("Interval: lower > upper (" +
                                        std::to_string(lower) + " > " +
                                        std::to_string(upper) + ")");
    }

    /// Builds an interval from its center/radius representation.
    static Interval from_center_radius(double center, double radius) {
        if (!std::isfinite(center) || !std::isfinite(radius))
            throw std::invalid_argument("Interval: center/radius must be finite");
        if (radius < 0.0)
            throw std::invalid_argument("Interval: negative radius");
        return Interval(center - radius, center + radius);
    }

    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    double center() const noexcept { return 0.5 * (lower_ + upper_); }
    double radius() const noexcept { return 0.5 * (upper_ - lower_); }
    double width() const noexcept { return upper_ - lower_; }
    bool degenerate() const noexcept { return lower_ == upper_; }

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    double lower_ = 0.0;
    double upper_ = 0.0;
};

/// Symmetric PSD weighting of the center/radius/cross terms in the
/// generalized interval metric.
class AMatrix {
public:
    AMatrix() : a11_(1.0), a22_(1.0), a12_(0.0) {}

    AMatrix(double a11, double a22, double a12) : a11_(a11), a22_(a22), a12_(a12) {
        // Allow a hair of negative slack for matrices assembled from
        // floating-point kernel sums.
        constexpr double slack = 1e-12;
        if (!std::isfinite(a11) || !std::isfinite(a22) || !std::isfinite(a12))
            throw std::invalid_argument("AMatrix: entries must be finite");
        if (a11 < -slack || a22 < -slack || a11 * a22 - a12 * a12 < -slack * std::max(1.0, a11 * a22))
            throw std::invalid_argument("AMatrix: not positive semidefinite");
    }

    static AMatrix identity() { return AMatrix(1.0, 1.0, 0.0); }

    double a11() const noexcept { return a11_; }
    double a22() const noexcept { return a22_; }
    double a12() const noexcept { return a12_; }

private:
    double a11_, a22_, a12_;
};

/// Symmetric positive semidefinite kernel on {-1,+1} x {-1,+1}, the two
/// support-function directions of an interval.
class Kernel2 {
public:
    Kernel2(double k_pp, double k_mm, double k_pm, double k_mp)
        : k_pp_(k_pp), k_mm_(k_mm), k_pm_(k_pm), k_mp_(k_mp) {
        constexpr double tol = 1e-12;
        if (std::abs(k_pm - k_mp) > tol * std::max(1.0, std::abs(k_pm)))
            throw std::invalid_argument("Kernel2: K(1,-1) != K(-1,1)");
        if (k_pp < -tol || k_mm < -tol || k_pp * k_mm - k_pm * k_mp < -tol * std::max(1.0, k_pp * k_mm))
            throw std::invalid_argument("Kernel2: not positive semidefinite");
    }

    /// Diagonal kernel diag(k_pp, k_mm).
    static Kernel2 diagonal(double k_pp, double k_mm) { return Kernel2(k_pp, k_mm, 0.0, 0.0); }

    double k_pp() const noexcept { return k_pp_; }
    double k_mm() const noexcept { return k_mm_; }
    double k_pm() const noexcept { return k_pm_; }
    double k_mp() const noexcept { return k_mp_; }

private:
    double k_pp_, k_mm_, k_pm_, k_mp_;
};

/// Collapses a direction kernel into the center/radius weighting matrix:
/// a11 = K(1,1)+K(-1,-1)-[K(1,-1)+K(-1,1)],
/// a22 = K(1,1)+K(-1,-1)+[K(1,-1)+K(-1,1)],
/// a12 = K(1,1)-K(-1,-1).
inline AMatrix kernel_to_a(const Kernel2& k) {
    const double cross = k.k_pm() + k.k_mp();
    return AMatrix(k.k_pp() + k.k_mm() - cross,
                   k.k_pp() + k.k_mm() + cross,
                   k.k_pp() - k.k_mm());
}

/// Squared L2 distance between intervals:
/// (1/2)(dL)^2 + (1/2)(dU)^2 == (dC)^2 + (dR)^2.
inline double rho2_sq(const Interval& x, const Interval& y) noexcept {
    const double dl = x.lower() - y.lower();
    const double du = x.upper() - y.upper();
    return 0.5 * dl * dl + 0.5 * du * du;
}

/// Squared kernel metric in center/radius form:
/// a11*dC^2 + a22*dR^2 + 2*a12*dC*dR. Nonnegative for PSD A.
inline double rho_k_sq(const Interval& x, const Interval& y, const AMatrix& a) noexcept {
    const double dc = x.center() - y.center();
    const double dr = x.radius() - y.radius();
    return a.a11() * dc * dc + a.a22() * dr * dr + 2.0 * a.a12() * dc * dr;
}

/// Minkowski combination under signed weights: the combined center is the
/// weighted sum of centers, the combined radius weights each radius by the
/// magnitude of its coefficient (scalar multiplication by a negative weight
/// reflects an interval, it never flips its endpoints past each other).
inline Interval weighted_combine(std::span<const double> weights,
                                 std::span<const Interval> samples) {
    if (weights.size() != samples.size())
        throw std::invalid_argument("weighted_combine: size mismatch");
    if (weights.empty())
        throw std::invalid_argument("weighted_combine: empty input");
    double center = 0.0;
    double radius = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        center += weights[i] * samples[i].center();
        radius += std::abs(weights[i]) * samples[i].radius();
    }
    return Interval::from_center_radius(center, radius);
}

}  // namespace ikrige
