#pragma once

#include "crfmm/road_network.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crfmm {

using CarId = std::int64_t;

/// One raw GPS fix: `car_id,longitude,latitude,speed,direction,occ,timestamp`.
struct Observation {
    CarId car_id = 0;
    GeoPoint pos;
    double speed_kmh = 0.0;
    int direction = 0;  // degrees, [0, 359]
    bool occupied = false;
    std::int64_t timestamp = 0;  // seconds since epoch, wall clock

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Trajectory {
    CarId car_id = 0;
    std::vector<Observation> observations;

    std::size_t size() const { return observations.size(); }
    bool empty() const { return observations.empty(); }
};

/// Reference labels: one true edge per observation and the true edge sequence
/// of every gap between consecutive observations.
struct GroundTruth {
    std::vector<EdgeId> point_labels;
    std::vector<std::vector<EdgeId>> gap_paths;

    /// Throws DataError("label count" / "inconsistent gap") on violations.
    void validate(std::size_t n_points) const;
    /// Labels of a subsequence; gap paths between kept indices are joined.
    GroundTruth subsample(std::span<const std::size_t> kept) const;
};

struct CleaningReport {
    std::size_t rows_read = 0;
    std::size_t rows_kept = 0;
    std::map<std::string, std::size_t> dropped;  // reason -> count
};

/// `YYYY-MM-DD HH:MM:SS` to epoch seconds; nullopt for impossible dates.
std::optional<std::int64_t> parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t epoch_seconds);

struct ParsedObservations {
    std::vector<Trajectory> trajectories;  // ascending car_id
    CleaningReport report;
};

/// Reads the observations CSV, drops invalid rows (counted by reason) and
/// groups the survivors per car in time order. Duplicate timestamps keep the
/// first row. Throws DataError on an unreadable source or malformed header.
ParsedObservations parse_observations(std::istream& src);
ParsedObservations parse_observations(const std::filesystem::path& file);

void write_observations(std::ostream& out, std::span<const Trajectory> trajectories);

/// Indices kept by greedy even sampling: index 0, then the earliest
/// observation at least target_interval_s after the last kept one.
std::vector<std::size_t> even_sample_indices(const Trajectory& traj, double target_interval_s);
Trajectory downsample_even(const Trajectory& traj, double target_interval_s);
double median_interval(const Trajectory& traj);

struct TrainTestSplit {
    std::vector<std::size_t> train;  // indices into the input
    std::vector<std::size_t> test;
};

/// Seeded shuffle; the first round(ratio * n) go to train.
TrainTestSplit split_train_test(std::size_t count, double ratio_train, std::uint64_t seed);

/// Ground-truth blocks keyed by car id.
std::map<CarId, GroundTruth> parse_ground_truth(std::istream& src);
std::map<CarId, GroundTruth> parse_ground_truth(const std::filesystem::path& file);
/// Looks up and validates the labels of one trajectory.
GroundTruth load_ground_truth(const std::map<CarId, GroundTruth>& all, const Trajectory& traj);
void write_ground_truth(std::ostream& out, CarId car, const GroundTruth& truth);

} // namespace crfmm
