#pragma once

#include "crfmm/road_network.hpp"

#include <vector>

namespace crfmm {

/// A directed route between two road states. The first and last edges are
/// traversed partially (from start_offset_m, up to end_offset_m).
struct Path {
    std::vector<EdgeId> edge_ids;
    double start_offset_m = 0.0;
    double end_offset_m = 0.0;
    double length_m = 0.0;
    std::vector<PlanePoint> geometry;

    /// Metres travelled on the i-th edge of the path.
    double traversed_on(const RoadNetwork& net, std::size_t i) const;
};

/// Up to k_max loop-free paths from `from` to `to`, ascending by length, each
/// no longer than length_cap_m. A same-edge forward move yields only the
/// direct path. Empty when unreachable within the cap.
std::vector<Path> feasible_paths(const RoadNetwork& net, const RoadState& from, const RoadState& to,
                                 std::size_t k_max, double length_cap_m);

struct TurnConfig {
    double straight_max_deg = 30.0;  // |delta| below this is straight
    double turn_max_deg = 150.0;     // |delta| above this is a u-turn
};

struct TurnCounts {
    int left = 0;
    int right = 0;
    int u_turn = 0;

    friend bool operator==(const TurnCounts&, const TurnCounts&) = default;
};

/// Classifies the heading change at every interior junction of the path.
TurnCounts count_turns(const RoadNetwork& net, const Path& path, const TurnConfig& cfg = {});

/// Shape-only helper shared with count_turns: classify one heading change.
void classify_turn(double delta_deg, const TurnConfig& cfg, TurnCounts& counts);

} // namespace crfmm
