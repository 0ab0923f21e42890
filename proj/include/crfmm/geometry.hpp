#pragma once

#include <cmath>
#include <numbers>

namespace crfmm {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    bool valid() const {
        return std::isfinite(lon) && std::isfinite(lat) && lon >= -180.0 && lon <= 180.0 &&
               lat >= -90.0 && lat <= 90.0;
    }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct PlanePoint {
    double x = 0.0;
    double y = 0.0;

    friend PlanePoint operator+(PlanePoint a, PlanePoint b) { return {a.x + b.x, a.y + b.y}; }
    friend PlanePoint operator-(PlanePoint a, PlanePoint b) { return {a.x - b.x, a.y - b.y}; }
    friend PlanePoint operator*(double s, PlanePoint a) { return {s * a.x, s * a.y}; }
    friend bool operator==(PlanePoint a, PlanePoint b) = default;
};

inline double distance(PlanePoint a, PlanePoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Local equirectangular projection around a fixed origin. Accurate at city
/// scale; not meant for regional extents.
struct Projection {
    GeoPoint origin;
    double earth_radius = kEarthRadiusM;

    PlanePoint to_plane(GeoPoint p) const;
    GeoPoint from_plane(PlanePoint p) const;
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Clockwise angle from north of the vector a->b, in [0, 360).
/// Throws GeometryError("degenerate bearing") when a == b.
double bearing(PlanePoint a, PlanePoint b);

/// Smallest absolute difference between two headings, in [0, 180].
double bearing_diff(double b1, double b2);

/// Signed heading change from `from` to `to`, in (-180, 180]. Positive is clockwise.
double signed_heading_change(double from, double to);

struct SegmentProjection {
    PlanePoint closest;
    double offset_m = 0.0;  // along a->b, in [0, |ab|]
    double dist_m = 0.0;
};

/// Closest point of segment [a, b] to p. Throws GeometryError for a == b.
SegmentProjection project_onto_segment(PlanePoint p, PlanePoint a, PlanePoint b);

} // namespace crfmm
