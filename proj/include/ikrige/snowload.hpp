#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ikrige/sample.hpp"

namespace ikrige {

/// Inverse standard normal CDF. Rational initial guess refined by one
/// Halley step against std::erfc; accurate to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double err = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

/// Snow-season day index: October 1st is -92, June 30th is 181, and there
/// is no day zero.
inline void validate_season_day(int d) {
    if (d == 0 || d < -92 || d > 181)
        throw std::invalid_argument("day of season must lie in [-92, 181] with no zero");
}

/// Climate-class parameters of the snow density growth curve.
struct SturmParams {
    double rho_max = 0.0;
    double rho_0 = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;

    void validate() const {
        if (!(rho_max >= rho_0) || rho_0 < 0.0 || k1 < 0.0 || k2 < 0.0)
            throw std::invalid_argument("SturmParams: need rho_max >= rho_0 >= 0 and k1, k2 >= 0");
    }
};

enum class ClimateClass { alpine, maritime, prairie, tundra, taiga };

inline SturmParams sturm_params(ClimateClass c) {
    switch (c) {
        case ClimateClass::alpine:   return {0.5975, 0.2237, 0.0012, 0.0038};
        case ClimateClass::maritime: return {0.5979, 0.2578, 0.0010, 0.0038};
        case ClimateClass::prairie:  return {0.5940, 0.2332, 0.016, 0.0031};
        case ClimateClass::tundra:   return {0.3630, 0.2425, 0.0029, 0.0049};
        case ClimateClass::taiga:    return {0.2170, 0.2170, 0.0000, 0.0000};
    }
    throw std::logic_error("unknown climate class");
}

inline ClimateClass climate_from_string(const std::string& s) {
    if (s == "alpine") return ClimateClass::alpine;
    if (s == "maritime") return ClimateClass::maritime;
    if (s == "prairie") return ClimateClass::prairie;
    if (s == "tundra") return ClimateClass::tundra;
    if (s == "taiga") return ClimateClass::taiga;
    throw std::invalid_argument("unknown climate class: " + s);
}

/// Density growth load model: kPa from depth (cm) and season day.
/// q = 0.0981 h [(rho_max - rho_0)(1 - exp(-k1 h - k2 d)) + rho_0].
inline double sturm_load(double depth_cm, int day, const SturmParams& p) {
    if (depth_cm < 0.0) throw std::invalid_argument("sturm_load: negative depth");
    validate_season_day(day);
    p.validate();
    const double growth = 1.0 - std::exp(-p.k1 * depth_cm - p.k2 * static_cast<double>(day));
    return 0.0981 * depth_cm * ((p.rho_max - p.rho_0) * growth + p.rho_0);
}

/// Colorado's blended conversion: two power curves mixed by an
/// elevation-dependent load parameter p that ramps linearly from 0 at
/// p_low_elev (default 1800 m) to 1 at p_high_elev (default 2600 m).
inline double colorado_load(double depth_cm, double elev_m, double p_low_elev = 1800.0,
                            double p_high_elev = 2600.0) {
    if (depth_cm < 0.0) throw std::invalid_argument("colorado_load: negative depth");
    if (!(p_high_elev > p_low_elev))
        throw std::invalid_argument("colorado_load: need p_high_elev > p_low_elev");
    const double inches = depth_cm / 2.54;
    const double f1 = 0.0479 * 0.279 * std::pow(inches, 1.36);
    const double f2 = 0.0479 * 0.584 * std::pow(inches, 1.15);
    const double p = std::clamp((elev_m - p_low_elev) / (p_high_elev - p_low_elev), 0.0, 1.0);
    return p * f1 + (1.0 - p) * f2;
}

/// Rocky Mountain Conversion Density, metric form. The two branches meet
/// with a small jump at 55.88 cm; that is how the method is defined.
inline double idaho_load(double depth_cm) {
    if (depth_cm < 0.0) throw std::invalid_argument("idaho_load: negative depth");
    return depth_cm < 55.88 ? 0.017 * depth_cm : 0.0445 * depth_cm - 1.5274;
}

/// Utah's elevation-switched density growth conversion: prairie-type
/// coefficients below 2113.6 m, alpine-type at or above it.
inline double utah_load(double depth_cm, int day, double elev_m) {
    if (depth_cm < 0.0) throw std::invalid_argument("utah_load: negative depth");
    validate_season_day(day);
    const double d = static_cast<double>(day);
    if (elev_m >= 2113.6)
        return 0.0981 * depth_cm *
               (0.3738 * (1.0 - std::exp(-0.0012 * depth_cm - 0.0038 * d)) + 0.2237);
    return 0.0981 * depth_cm *
           (0.3608 * (1.0 - std::exp(-0.0016 * depth_cm - 0.0031 * d)) + 0.2332);
}

/// 98th percentile of a log-normal fit to annual maxima: exp(mu + sigma z)
/// with mu, sigma the sample mean and (n-1)-divisor standard deviation of
/// the logs.
inline double lognormal_design_load(std::span<const double> maxima) {
    if (maxima.size() < 2)
        throw std::invalid_argument("lognormal_design_load: need at least 2 annual maxima");
    double mean = 0.0;
    for (double q : maxima) {
        if (!(q > 0.0)) throw std::invalid_argument("lognormal_design_load: maxima must be positive");
        mean += std::log(q);
    }
    mean /= static_cast<double>(maxima.size());
    double ss = 0.0;
    for (double q : maxima) {
        const double d = std::log(q) - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(maxima.size() - 1));
    static const double z98 = normal_quantile(0.98);
    return std::exp(mean + sd * z98);
}

/// One annual maximum at a station: depth always, a direct load
/// measurement when the site records loads natively.
struct YearlyMaximum {
    int year = 0;
    double depth_cm = 0.0;
    int day_of_season = 1;
    std::optional<double> load_kpa;
};

struct StationRecord {
    std::string id;
    Location loc;
    std::vector<YearlyMaximum> maxima;

    void validate() const {
        if (maxima.empty()) throw std::invalid_argument("StationRecord " + id + ": no yearly maxima");
        validate_location(loc);
        for (const auto& m : maxima) {
            if (m.depth_cm < 0.0 || (m.load_kpa && *m.load_kpa < 0.0))
                throw std::invalid_argument("StationRecord " + id + ": negative depth or load");
        }
    }
};

/// A named depth-to-load conversion g(depth_cm, day, elev_m) -> kPa.
struct ConversionMethod {
    std::string name;
    std::function<double(double, int, double)> convert;
};

inline ConversionMethod colorado_method() {
    return {"colorado", [](double h, int, double elev) { return colorado_load(h, elev); }};
}

inline ConversionMethod idaho_method() {
    return {"idaho", [](double h, int, double) { return idaho_load(h); }};
}

inline ConversionMethod utah_method() {
    return {"utah", [](double h, int d, double elev) { return utah_load(h, d, elev); }};
}

inline ConversionMethod sturm_method(ClimateClass c) {
    return {"sturm-" + std::to_string(static_cast<int>(c)),
            [p = sturm_params(c)](double h, int d, double) { return sturm_load(h, d, p); }};
}

/// The conversion set the interval construction defaults to.
inline std::vector<ConversionMethod> standard_methods() {
    return {colorado_method(), idaho_method(), utah_method()};
}

/// Builds a station's design-load interval: each conversion method maps the
/// yearly maxima to a load series (years with a direct measurement use it
/// verbatim), a log-normal design value is fitted per method, and the
/// interval spans the min/max of those values. All-direct stations collapse
/// to a zero-radius interval.
inline IntervalSample build_design_interval(const StationRecord& station,
                                            std::span<const ConversionMethod> methods) {
    station.validate();
    if (methods.empty())
        throw std::invalid_argument("build_design_interval: no conversion methods");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<double> loads(station.maxima.size());
    for (const auto& method : methods) {
        for (std::size_t y = 0; y < station.maxima.size(); ++y) {
            const auto& m = station.maxima[y];
            loads[y] = m.load_kpa ? *m.load_kpa
                                  : method.convert(m.depth_cm, m.day_of_season, station.loc.elevation);
        }
        const double design = lognormal_design_load(loads);
        lo = std::min(lo, design);
        hi = std::max(hi, design);
    }
    return {station.loc, Interval(lo, hi)};
}

/// Linear elevation trend of the log-scale interval centers.
struct TrendModel {
    double beta0 = 0.0;
    double beta1 = 0.0;  // per meter
};

struct DetrendResult {
    TrendModel trend;
    std::vector<IntervalSample> residuals;
};

/// Removes the elevation effect from log-scale intervals: centers lose an
/// OLS linear trend in elevation, radii are multiplied by log(elevation).
/// The log scaling keeps residual radii nonnegative.
inline DetrendResult detrend(std::span<const IntervalSample> samples) {
    if (samples.size() < 2) throw std::invalid_argument("detrend: need at least 2 samples");
    double mean_a = 0.0, mean_c = 0.0;
    for (const auto& s : samples) {
        if (!(s.loc.elevation > 1.0))
            throw std::invalid_argument("detrend: elevations must exceed 1 m");
        mean_a += s.loc.elevation;
        mean_c += s.value.center();
    }
    const double n = static_cast<double>(samples.size());
    mean_a /= n;
    mean_c /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& s : samples) {
        const double da = s.loc.elevation - mean_a;
        sxx += da * da;
        sxy += da * (s.value.center() - mean_c);
    }
    if (sxx <= 0.0) throw std::invalid_argument("detrend: all elevations equal");

    DetrendResult out;
    out.trend.beta1 = sxy / sxx;
    out.trend.beta0 = mean_c - out.trend.beta1 * mean_a;
    out.residuals.reserve(samples.size());
    for (const auto& s : samples) {
        const double rc = s.value.center() - out.trend.beta0 - out.trend.beta1 * s.loc.elevation;
        const double rr = s.value.radius() * std::log(s.loc.elevation);
        out.residuals.push_back({s.loc, Interval::from_center_radius(rc, rr)});
    }
    return out;
}

/// Inverse of detrend for a residual interval at a site.
inline Interval retrend(const TrendModel& trend, const Location& loc, const Interval& residual) {
    if (!(loc.elevation > 1.0)) throw std::invalid_argument("retrend: elevation must exceed 1 m");
    const double center = trend.beta0 + trend.beta1 * loc.elevation + residual.center();
    const double radius = residual.radius() / std::log(loc.elevation);
    return Interval::from_center_radius(center, radius);
}

inline IntervalSample retrend(const TrendModel& trend, const IntervalSample& residual) {
    return {residual.loc, retrend(trend, residual.loc, residual.value)};
}

/// Log-scale view of a positive interval, [log lower, log upper].
inline Interval to_log_scale(const Interval& v) {
    if (!(v.lower() > 0.0))
        throw std::invalid_argument("to_log_scale: interval must be strictly positive");
    return Interval(std::log(v.lower()), std::log(v.upper()));
}

inline Interval from_log_scale(const Interval& v) {
    return Interval(std::exp(v.lower()), std::exp(v.upper()));
}

}  // namespace ikrige
