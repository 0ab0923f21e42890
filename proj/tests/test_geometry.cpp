#include "crfmm/error.hpp"
#include "crfmm/geometry.hpp"

#include <doctest.h>

using namespace crfmm;

TEST_CASE("projection of small offsets") {
    const Projection proj{{121.360958, 31.187778}};
    const PlanePoint o = proj.to_plane(proj.origin);
    CHECK(o.x == doctest::Approx(0.0));
    CHECK(o.y == doctest::Approx(0.0));

    // x = R cos(lat0) dlon, y = R dlat, both in radians.
    const double r = 6371000.0, dl = (121.361958 - 121.360958) * std::numbers::pi / 180.0;
    const double want_x = r * std::cos(31.187778 * std::numbers::pi / 180.0) * dl;
    const PlanePoint east = proj.to_plane({121.361958, 31.187778});
    CHECK(east.x == doctest::Approx(want_x).epsilon(1e-12));
    CHECK(std::fabs(east.x - 95.13) < 0.01);
    CHECK(std::fabs(east.y) < 0.01);

    const PlanePoint north = proj.to_plane({121.360958, 31.188778});
    CHECK(std::fabs(north.y - r * (31.188778 - 31.187778) * std::numbers::pi / 180.0) < 1e-9);
    CHECK(std::fabs(north.y - 111.19) < 0.01);

    const GeoPoint back = proj.from_plane(east);
    CHECK(back.lon == doctest::Approx(121.361958).epsilon(1e-12));
    CHECK(back.lat == doctest::Approx(31.187778).epsilon(1e-12));
}

TEST_CASE("bearings") {
    CHECK(bearing({0, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(bearing({0, 0}, {1, 0}) == doctest::Approx(90.0));
    CHECK(bearing({0, 0}, {1, 1}) == doctest::Approx(45.0));
    CHECK(bearing({0, 0}, {0, -1}) == doctest::Approx(180.0));
    CHECK(bearing({0, 0}, {-1, 0}) == doctest::Approx(270.0));
    CHECK_THROWS_AS(bearing({2, 3}, {2, 3}), GeometryError);

    CHECK(bearing_diff(249, 249) == 0.0);
    CHECK(bearing_diff(10, 350) == doctest::Approx(20.0));
    CHECK(bearing_diff(350, 10) == doctest::Approx(20.0));
    CHECK(bearing_diff(0, 180) == doctest::Approx(180.0));

    CHECK(signed_heading_change(0, 90) == doctest::Approx(90.0));
    CHECK(signed_heading_change(90, 0) == doctest::Approx(-90.0));
    CHECK(signed_heading_change(350, 10) == doctest::Approx(20.0));
    CHECK(signed_heading_change(0, 180) == doctest::Approx(180.0));
}

TEST_CASE("segment projection") {
    auto s = project_onto_segment({0, 3}, {-4, 0}, {4, 0});
    CHECK(s.closest.x == doctest::Approx(0.0));
    CHECK(s.closest.y == doctest::Approx(0.0));
    CHECK(s.offset_m == doctest::Approx(4.0));
    CHECK(s.dist_m == doctest::Approx(3.0));

    s = project_onto_segment({1, 0}, {-4, 0}, {4, 0});
    CHECK(s.dist_m == 0.0);
    CHECK(s.closest == PlanePoint{1, 0});

    s = project_onto_segment({9, 0}, {-4, 0}, {4, 0});
    CHECK(s.closest == PlanePoint{4, 0});
    CHECK(s.offset_m == doctest::Approx(8.0));
    CHECK(s.dist_m == doctest::Approx(5.0));

    CHECK_THROWS_AS(project_onto_segment({0, 0}, {1, 1}, {1, 1}), GeometryError);
}
