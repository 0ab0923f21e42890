#pragma once

#include "crfmm/road_network.hpp"
#include "crfmm/trajectory.hpp"

#include <cstdint>
#include <vector>

namespace crfmm {

/// Synthetic city: a jittered grid network and noisy taxi-like fixes.
struct GenConfig {
    std::size_t rows = 10;
    std::size_t cols = 10;
    double spacing_m = 200.0;
    double jitter_m = 20.0;
    double oneway_fraction = 0.1;
    std::vector<double> speed_choices_kmh{30.0, 50.0, 80.0};
    double noise_sigma_m = 15.0;
    double native_interval_s = 10.0;
    double heading_noise_deg = 10.0;
    double low_speed_fraction = 0.1;
    double low_speed_max_kmh = 7.2;  // low-speed fixes report speeds below this
    double turn_probability = 0.15;   // chance of leaving the straightest continuation at a junction
    GeoPoint origin{121.45, 31.22};
    std::int64_t start_time = 1270022400;  // 2010-03-31 08:00:00
    std::uint64_t seed = 7;

    void validate() const;
};

RoadNetwork gen_network(const GenConfig& cfg);

struct GeneratedTrajectory {
    Trajectory trajectory;
    GroundTruth truth;
    std::size_t route_edges = 0;  // shorter than requested when the walk hit a dead end
};

/// Random directed walk without immediate reversal, sampled every
/// native_interval_s with Gaussian position noise. Pure in its arguments.
GeneratedTrajectory gen_trajectory(const RoadNetwork& net, const GenConfig& cfg, std::size_t route_len_edges,
                                   CarId car_id, std::uint64_t seed);

/// `count` trajectories with car ids base_car_id, base_car_id + 1, ...
std::vector<GeneratedTrajectory> gen_trajectories(const RoadNetwork& net, const GenConfig& cfg,
                                                  std::size_t route_len_edges, std::size_t count,
                                                  CarId base_car_id = 10000);

} // namespace crfmm
