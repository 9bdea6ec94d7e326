#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ikrige/interval.hpp"

namespace ikrige {

/// A measurement site: planar coordinates plus elevation (meters).
/// Distances between sites are Euclidean in the (x, y) plane; elevation is
/// a covariate, not a coordinate.
struct Location {
    double x = 0.0;
    double y = 0.0;
    double elevation = 0.0;
};

inline double distance(const Location& a, const Location& b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// An interval-valued observation at a known site.
struct IntervalSample {
    Location loc;
    Interval value;
};

inline void validate_location(const Location& loc) {
    if (!std::isfinite(loc.x) || !std::isfinite(loc.y) || !std::isfinite(loc.elevation))
        throw std::invalid_argument("Location: coordinates must be finite");
}

}  // namespace ikrige
