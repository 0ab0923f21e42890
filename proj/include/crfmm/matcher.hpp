#pragma once

#include "crfmm/model.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace crfmm {

/// Lattice pieces of one trajectory and their (raw or scaled) features.
struct PreparedTrajectory {
    CarId car_id = 0;
    std::size_t n_points = 0;
    LatticeBuild build;
    std::vector<FeatureLattice> features;
};

PreparedTrajectory prepare_trajectory(const Trajectory& traj, const RoadNetwork& net, const FeatureCatalog& catalog,
                                      const LatticeConfig& cfg);

/// Batch preparation over trajectories. Both kernels return identical output
/// in input order.
std::vector<PreparedTrajectory> prepare_all_serial(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                                   const FeatureCatalog& catalog, const LatticeConfig& cfg);
std::vector<PreparedTrajectory> prepare_all_parallel(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                                     const FeatureCatalog& catalog, const LatticeConfig& cfg,
                                                     int threads = 0);

struct PieceScore {
    std::size_t first_obs = 0;
    std::size_t last_obs = 0;
    double log_score = 0.0;
};

/// Decoded route: an edge per observation and an edge sequence per gap.
/// Unmatched observations and gaps not covered by one piece are nullopt.
struct MatchResult {
    CarId car_id = 0;
    std::vector<std::optional<EdgeId>> points;
    std::vector<std::optional<std::vector<EdgeId>>> gaps;
    std::vector<PieceScore> pieces;
    std::vector<std::size_t> dropped;

    std::size_t size() const { return points.size(); }
};

/// Viterbi over every piece of an already scaled trajectory.
MatchResult decode(const PreparedTrajectory& prepared, std::span<const double> weights);
/// Nearest candidate per observation, shortest path per gap.
MatchResult decode_nearest(const PreparedTrajectory& prepared);

MatchResult match(const Trajectory& traj, const RoadNetwork& net, const CrfModel& model);

std::vector<MatchResult> match_all_serial(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                          const CrfModel& model);
std::vector<MatchResult> match_all_parallel(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                            const CrfModel& model, int threads = 0);

/// Same block layout as the ground-truth file, with `?` for unmatched
/// entries and one `piece <first> <last> <log_score>` line per piece.
void write_match_results(std::ostream& out, std::span<const MatchResult> results);
std::vector<MatchResult> parse_match_results(std::istream& in);

/// A fully matched result viewed as ground truth; throws DataError otherwise.
GroundTruth as_ground_truth(const MatchResult& r);
MatchResult from_ground_truth(CarId car, const GroundTruth& truth);

} // namespace crfmm
