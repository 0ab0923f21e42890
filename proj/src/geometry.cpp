#include "crfmm/geometry.hpp"

#include "crfmm/error.hpp"

#include <algorithm>

namespace crfmm {

PlanePoint Projection::to_plane(GeoPoint p) const {
    const double lat0 = deg2rad(origin.lat);
    return {earth_radius * deg2rad(p.lon - origin.lon) * std::cos(lat0),
            earth_radius * deg2rad(p.lat - origin.lat)};
}

GeoPoint Projection::from_plane(PlanePoint p) const {
    const double lat0 = deg2rad(origin.lat);
    return {origin.lon + rad2deg(p.x / (earth_radius * std::cos(lat0))),
            origin.lat + rad2deg(p.y / earth_radius)};
}

double bearing(PlanePoint a, PlanePoint b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    if (dx == 0.0 && dy == 0.0) throw GeometryError("degenerate bearing");
    double deg = rad2deg(std::atan2(dx, dy));
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg -= 360.0;
    return deg;
}

double bearing_diff(double b1, double b2) {
    const double d = std::fmod(std::fabs(b1 - b2), 360.0);
    return std::min(d, 360.0 - d);
}

double signed_heading_change(double from, double to) {
    double d = std::fmod(to - from, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

SegmentProjection project_onto_segment(PlanePoint p, PlanePoint a, PlanePoint b) {
    const PlanePoint ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    if (len2 == 0.0) throw GeometryError("zero-length segment");
    const PlanePoint ap = p - a;
    const double t = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
    SegmentProjection out;
    out.closest = a + t * ab;
    out.offset_m = t * std::sqrt(len2);
    out.dist_m = distance(p, out.closest);
    return out;
}

} // namespace crfmm
