#pragma once

#include "crfmm/paths.hpp"
#include "crfmm/trajectory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crfmm {

struct LatticeConfig {
    double radius_m = 50.0;
    double radius_max_m = 200.0;
    std::size_t max_candidates_k = 5;
    std::size_t paths_per_pair_k = 3;
    double length_cap_factor = 2.0;
    double length_cap_floor_m = 500.0;
    double speed_cap_kmh = 180.0;

    void validate() const;
    /// Tighter of the distance-based and speed-based caps for one gap.
    double length_cap(double straight_m, double dt_s) const;
};

/// Feasible paths of one gap, keyed by (candidate at t, candidate at t+1).
struct PathLayer {
    std::size_t from_count = 0;
    std::size_t to_count = 0;
    std::vector<std::vector<Path>> pairs;  // row-major [i * to_count + j]

    const std::vector<Path>& paths(std::size_t i, std::size_t j) const { return pairs[i * to_count + j]; }
    std::size_t path_count() const;
};

/// One connected piece of a trajectory: 2N-1 alternating layers.
struct Lattice {
    CarId car_id = 0;
    std::vector<std::size_t> obs_index;  // position in the source trajectory
    std::vector<Observation> observations;
    std::vector<PlanePoint> obs_xy;
    std::vector<std::vector<RoadState>> point_layers;
    std::vector<PathLayer> path_layers;

    std::size_t size() const { return point_layers.size(); }
};

struct LatticeBuild {
    std::vector<Lattice> pieces;
    std::vector<std::size_t> dropped;  // observations with no candidate within radius_max_m
};

/// Candidate generation with radius escalation, per-pair path enumeration and
/// splitting where no path continues any candidate reachable from the start of
/// the current piece.
LatticeBuild build_lattice(const Trajectory& traj, const RoadNetwork& net, const LatticeConfig& cfg);

/// Candidates of one observation with radius escalation; empty if none within radius_max.
std::vector<RoadState> candidate_states(const RoadNetwork& net, PlanePoint p, const LatticeConfig& cfg);

/// Position of the truth within each layer; nullopt marks a missing label.
struct LatticeLabels {
    std::vector<std::optional<std::size_t>> point;
    std::vector<std::optional<std::size_t>> path;  // index within the labelled candidate pair

    bool complete() const;
    std::size_t missing_count() const;
};

LatticeLabels label_lattice(const Lattice& lattice, const GroundTruth& truth);

/// Debug dump, versioned as "crfmm-lattice/1".
std::string lattice_to_json(const Lattice& lattice, int indent = -1);

} // namespace crfmm
