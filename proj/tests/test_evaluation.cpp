#include "crfmm/error.hpp"
#include "crfmm/evaluation.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace crfmm;
using namespace crfmm::testing;

namespace {

Observation fix(const RoadNetwork& net, PlanePoint p, std::int64_t t, int dir) {
    return {1, net.projection().from_plane(p), 40.0, dir, true, 1270022400 + t};
}

// Four fixes moving east along the bottom row of a 2x4 grid: edges 1, 1, 2, 3.
struct Corridor {
    RoadNetwork net = grid(2, 4);
    Trajectory traj;
    GroundTruth truth{{1, 1, 2, 3}, {{1}, {1, 2}, {2, 3}}};
    LatticeBuild build;

    Corridor() {
        traj.car_id = 1;
        for (auto [x, t] : {std::pair{40.0, 0}, {150.0, 10}, {300.0, 20}, {500.0, 30}})
            traj.observations.push_back(fix(net, at(net, x, 4.0), t, 90));
        build = build_lattice(traj, net, LatticeConfig{});
    }
};

} // namespace

TEST_CASE("error rates") {
    const GroundTruth truth{{1, 2, 3, 4}, {{1, 2}, {2, 3}, {3, 4}}};
    const MatchResult perfect = from_ground_truth(1, truth);
    auto r = error_rates(perfect, truth);
    CHECK(r.point_error_rate() == 0.0);
    CHECK(r.path_error_rate() == 0.0);

    MatchResult wrong = perfect;
    for (auto& p : wrong.points) p = 99;
    for (auto& g : wrong.gaps) g = std::vector<EdgeId>{99};
    r = error_rates(wrong, truth);
    CHECK(r.point_error_rate() == 1.0);
    CHECK(r.path_error_rate() == 1.0);

    MatchResult some = perfect;
    some.points[2] = 7;
    some.gaps[0] = std::vector<EdgeId>{1, 7, 2};
    some.gaps[1].reset();  // unpredicted gap counts as an error
    r = error_rates(some, truth);
    CHECK(r.point_error_rate() == doctest::Approx(0.25));
    CHECK(r.path_error_rate() == doctest::Approx(2.0 / 3.0));
    CHECK(r.unpredicted_gaps == 1);

    MatchResult dropped = perfect;
    dropped.points[0].reset();
    r = error_rates(dropped, truth);
    CHECK(r.point_errors == 1);
    CHECK(r.unmatched_points == 1);

    MatchResult short_pred = perfect;
    short_pred.points.pop_back();
    CHECK_THROWS_AS(error_rates(short_pred, truth), DataError);
}

TEST_CASE("taxonomy: missing label, start/end, u-turn") {
    Corridor c;
    REQUIRE(c.build.pieces.size() == 1);
    REQUIRE(c.build.pieces[0].size() == 4);
    REQUIRE(label_lattice(c.build.pieces[0], c.truth).complete());

    // Truth planted on a far edge that no candidate covers.
    GroundTruth planted = c.truth;
    planted.point_labels[1] = 10;  // vertical edge at the far end of the grid
    planted.gap_paths[0] = {1, 10};
    planted.gap_paths[1] = {10, 2};
    MatchResult pred = from_ground_truth(1, c.truth);
    auto errs = categorize_errors(pred, planted, c.build, c.net);
    REQUIRE(!errs.empty());
    for (const auto& e : errs) CHECK(e.category == ErrorCategory::MissingLabel);

    // Wrong edge at the first layer.
    pred = from_ground_truth(1, c.truth);
    pred.points[0] = -1;
    errs = categorize_errors(pred, c.truth, c.build, c.net);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].category == ErrorCategory::StartEndPoint);

    // Middle gap predicted as edge, its reverse, and the edge again.
    pred = from_ground_truth(1, c.truth);
    pred.gaps[1] = std::vector<EdgeId>{1, -1, 1, 2};
    errs = categorize_errors(pred, c.truth, c.build, c.net);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].is_path);
    CHECK(errs[0].category == ErrorCategory::UTurn);

    const ErrorTaxonomy tax = summarize(errs);
    CHECK(tax.total() == 1);
    CHECK(tax.fraction(ErrorCategory::UTurn) == 1.0);
}

TEST_CASE("every error gets exactly one category") {
    Corridor c;
    MatchResult pred = from_ground_truth(1, c.truth);
    pred.points[1] = -1;
    pred.points[2] = 3;
    pred.gaps[0].reset();
    pred.gaps[2] = std::vector<EdgeId>{2, 7, 3};
    const auto errs = categorize_errors(pred, c.truth, c.build, c.net);
    const EvalReport r = error_rates(pred, c.truth);
    CHECK(errs.size() == r.point_errors + r.path_errors);
    CHECK(summarize(errs).total() == errs.size());
}

TEST_CASE("method report formats") {
    std::vector<MethodRow> rows{{"base_simple", 2, 0.3, 0.8, 0.31, 0.77}, {"CRFs_L1", 7, 0.1234, 0.5, 0.15, 0.55}};
    const std::string csv = emit_report(std::span(rows).first(1), ReportFormat::Csv);
    CHECK(csv == "method,feature_count,train_point,train_path,test_point,test_path\n"
                 "base_simple,2,0.3000,0.8000,0.3100,0.7700\n");
    const auto back = parse_report_json(emit_report(rows, ReportFormat::Json));
    CHECK(back == rows);
    CHECK_THROWS_AS(parse_report_format("xml"), DataError);
}
