#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aedkit/common.hpp"

namespace aedkit::geo {

inline constexpr double kEarthRadiusM = 6371008.8; // mean Earth radius

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
    bool operator==(const LatLon&) const = default;
};

inline bool valid_coordinate(double lat, double lon) {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
}

// Haversine great-circle distance in meters.
inline double distance_m(double lat1, double lon1, double lat2, double lon2) {
    if (!valid_coordinate(lat1, lon1) || !valid_coordinate(lat2, lon2))
        throw ValidationError("invalid coordinates");
    constexpr double deg = std::numbers::pi / 180.0;
    const double dlat = (lat2 - lat1) * deg;
    const double dlon = (lon2 - lon1) * deg;
    const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1 * deg) * std::cos(lat2 * deg) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

inline double distance_m(const LatLon& a, const LatLon& b) {
    return distance_m(a.lat, a.lon, b.lat, b.lon);
}

// Small-offset move: east/north displacement in meters applied on the local
// tangent plane. Adequate at campus scale; used only for trace synthesis.
inline LatLon offset_m(const LatLon& origin, double east_m, double north_m) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double dlat = north_m / kEarthRadiusM / deg;
    const double dlon = east_m / (kEarthRadiusM * std::cos(origin.lat * deg)) / deg;
    return {origin.lat + dlat, origin.lon + dlon};
}

// Linear interpolation between two nearby points, f in [0,1].
inline LatLon lerp(const LatLon& a, const LatLon& b, double f) {
    return {a.lat + (b.lat - a.lat) * f, a.lon + (b.lon - a.lon) * f};
}

} // namespace aedkit::geo
