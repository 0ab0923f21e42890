#include "crfmm/error.hpp"
#include "crfmm/trajectory.hpp"

#include <doctest.h>
#include <set>
#include <sstream>

using namespace crfmm;

namespace {

const std::string kHeader = "car_id,longitude,latitude,speed,direction,occ,timestamp\n";

Trajectory evenly_spaced(std::size_t n, std::int64_t step) {
    Trajectory t{1, {}};
    for (std::size_t i = 0; i < n; ++i)
        t.observations.push_back({1, {121.4, 31.2}, 30.0, 0, false, 1270022400 + static_cast<std::int64_t>(i) * step});
    return t;
}

} // namespace

TEST_CASE("observation rows") {
    std::istringstream in(kHeader + "12971,121.360958,31.187778,61.2,249,1,2010-03-31 20:37:31\n");
    const auto parsed = parse_observations(in);
    REQUIRE(parsed.trajectories.size() == 1);
    const Observation& o = parsed.trajectories[0].observations.at(0);
    CHECK(o.car_id == 12971);
    CHECK(o.pos.lon == 121.360958);
    CHECK(o.pos.lat == 31.187778);
    CHECK(o.speed_kmh == 61.2);
    CHECK(o.direction == 249);
    CHECK(o.occupied);
    CHECK(format_timestamp(o.timestamp) == "2010-03-31 20:37:31");
    // 2010-03-31 is day 14699 since 1970-01-01.
    CHECK(o.timestamp == 14699LL * 86400 + 20 * 3600 + 37 * 60 + 31);
}

TEST_CASE("cleaning drops invalid rows with a reason") {
    std::istringstream in(kHeader +
                          "1,121.36,31.18,61.2,249,1,2010-13-99 99:99:99\n"
                          "1,121.36,123.4,61.2,249,1,2010-03-31 20:37:31\n"
                          "1,121.36,31.18,,249,1,2010-03-31 20:37:31\n"
                          "1,121.36,31.18,-3,249,1,2010-03-31 20:37:31\n"
                          "1,121.36,31.18,10,360,1,2010-03-31 20:37:31\n"
                          "1,121.36,31.18,10,10,2,2010-03-31 20:37:31\n"
                          "x,121.36,31.18,10,10,1,2010-03-31 20:37:31\n"
                          "1,121.36,31.18,10,10,1,2010-03-31 20:37:31\n"
                          "1,121.37,31.18,10,10,1,2010-03-31 20:37:31\n");
    const auto parsed = parse_observations(in);
    const auto& d = parsed.report.dropped;
    CHECK(parsed.report.rows_read == 9);
    CHECK(parsed.report.rows_kept == 1);
    CHECK(d.at("invalid timestamp") == 1);
    CHECK(d.at("invalid coordinates") == 1);
    CHECK(d.at("missing value") == 1);
    CHECK(d.at("invalid speed") == 1);
    CHECK(d.at("invalid direction") == 1);
    CHECK(d.at("invalid occupancy") == 1);
    CHECK(d.at("invalid car id") == 1);
    CHECK(d.at("duplicate timestamp") == 1);
    CHECK_FALSE(parse_timestamp("2010-02-29 00:00:00"));
    CHECK(parse_timestamp("2012-02-29 00:00:00"));
}

TEST_CASE("trajectories are grouped and time ordered") {
    std::istringstream in(kHeader +
                          "9,121.36,31.18,10,10,1,2010-03-31 20:00:20\n"
                          "3,121.36,31.18,10,10,1,2010-03-31 20:00:00\n"
                          "9,121.36,31.18,10,10,1,2010-03-31 20:00:10\n");
    const auto parsed = parse_observations(in);
    REQUIRE(parsed.trajectories.size() == 2);
    CHECK(parsed.trajectories[0].car_id == 3);
    CHECK(parsed.trajectories[1].observations[0].timestamp < parsed.trajectories[1].observations[1].timestamp);

    std::ostringstream out;
    write_observations(out, parsed.trajectories);
    std::istringstream again(out.str());
    const auto back = parse_observations(again);
    CHECK(back.trajectories[1].observations == parsed.trajectories[1].observations);
}

TEST_CASE("even sampling") {
    const auto t = evenly_spaced(25, 10);
    CHECK(even_sample_indices(t, 120) == std::vector<std::size_t>{0, 12, 24});
    const auto long_t = evenly_spaced(121, 10);
    const auto kept = even_sample_indices(long_t, 120);
    for (std::size_t i = 0; i < kept.size(); ++i) CHECK(kept[i] == 12 * i);
    CHECK(downsample_even(t, 10).observations == t.observations);
    CHECK_THROWS_AS(even_sample_indices(t, 5), DataError);
    CHECK(median_interval(t) == 10.0);
}

TEST_CASE("train/test split") {
    const auto s = split_train_test(124, 0.7, 3);
    CHECK(s.train.size() == 87);
    CHECK(s.test.size() == 37);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 124);
    const auto small = split_train_test(10, 0.7, 3);
    CHECK(small.train.size() == 7);
    CHECK(small.test.size() == 3);
    const auto again = split_train_test(124, 0.7, 3);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
}

TEST_CASE("ground truth invariants") {
    GroundTruth ok{{1, 2, 3}, {{1, 2}, {2, 3}}};
    CHECK_NOTHROW(ok.validate(3));
    GroundTruth bad_gap{{1, 2, 3}, {{9, 2}, {2, 3}}};
    CHECK_THROWS_WITH_AS(bad_gap.validate(3), doctest::Contains("inconsistent gap"), DataError);
    GroundTruth short_labels{{1, 2}, {{1, 2}}};
    CHECK_THROWS_WITH_AS(short_labels.validate(3), doctest::Contains("label count"), DataError);

    // Subsampling joins consecutive gaps, sharing boundary edges once.
    GroundTruth chain{{1, 1, 2, 3}, {{1}, {1, 2}, {2, 3}}};
    const GroundTruth sub = chain.subsample(std::vector<std::size_t>{0, 3});
    CHECK(sub.point_labels == std::vector<EdgeId>{1, 3});
    CHECK(sub.gap_paths == std::vector<std::vector<EdgeId>>{{1, 2, 3}});

    std::ostringstream out;
    write_ground_truth(out, 42, ok);
    std::istringstream in(out.str());
    const auto parsed = parse_ground_truth(in);
    CHECK(parsed.at(42).point_labels == ok.point_labels);
    CHECK(parsed.at(42).gap_paths == ok.gap_paths);
}
