#pragma once

#include "crfmm/feature_lattice.hpp"
#include "crfmm/lattice.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace crfmm {

/// Low-speed accuracy filter: heading-derived values are replaced by val_0
/// when the reported speed is at or below v_min_kmh.
struct FilterConfig {
    double v_min_kmh = 7.2;
    double val_0 = 0.0;

    bool filtered(double speed_kmh) const { return !(speed_kmh > v_min_kmh); }
};

enum class PointFeature { DistanceError, BearingErrorFiltered, BearingError, LogDistance, PointBias };
enum class PathFeature {
    Length,
    AvgSpeedLimit,
    TravelTime,
    LengthRatio,
    ImpliedSpeedGap,
    LeftTurns,
    RightTurns,
    UTurns,
    PathBias
};

/// Ordered, named feature lists. Weight vectors index by position, so the
/// order is fixed once created.
class FeatureCatalog {
public:
    FeatureCatalog() = default;
    /// Throws DataError for unknown or repeated names.
    FeatureCatalog(std::vector<std::string> point_names, std::vector<std::string> path_names,
                   FilterConfig filter = {}, TurnConfig turns = {});

    /// distance_error, bearing_error_filtered, log_distance, point_bias |
    /// length, avg_speed_limit, travel_time_s, length_ratio, implied_speed_gap,
    /// left_turns, right_turns, u_turns, path_bias
    static FeatureCatalog standard(FilterConfig filter = {}, TurnConfig turns = {});

    const std::vector<std::string>& point_names() const { return point_names_; }
    const std::vector<std::string>& path_names() const { return path_names_; }
    std::size_t point_dim() const { return point_.size(); }
    std::size_t path_dim() const { return path_.size(); }
    std::size_t dim() const { return point_dim() + path_dim(); }
    const FilterConfig& filter() const { return filter_; }
    const TurnConfig& turns() const { return turns_; }
    void set_filter(FilterConfig f) { filter_ = f; }

    bool point_is_bias(std::size_t k) const { return point_[k] == PointFeature::PointBias; }
    bool path_is_bias(std::size_t k) const { return path_[k] == PathFeature::PathBias; }

    std::vector<double> point_features(const Observation& obs, const RoadState& state) const;
    /// Throws DataError when obs_b is not later than obs_a.
    std::vector<double> path_features(const RoadNetwork& net, const Path& path, const Observation& obs_a,
                                      PlanePoint xy_a, const Observation& obs_b, PlanePoint xy_b) const;

    static const std::vector<std::string>& known_point_names();
    static const std::vector<std::string>& known_path_names();

private:
    std::vector<std::string> point_names_;
    std::vector<std::string> path_names_;
    std::vector<PointFeature> point_;
    std::vector<PathFeature> path_;
    FilterConfig filter_;
    TurnConfig turns_;
};

/// Raw (unscaled) numeric lattice.
FeatureLattice extract_features(const Lattice& lattice, const RoadNetwork& net, const FeatureCatalog& catalog);

/// Per-feature min-max scaling to [0, 1]; bias features pass through.
struct Scaler {
    std::vector<double> point_min, point_max;
    std::vector<double> path_min, path_max;
    std::vector<bool> point_exempt, path_exempt;

    bool fitted() const { return !point_min.empty() || !path_min.empty(); }
    double scale_point(std::size_t k, double x) const;
    double scale_path(std::size_t k, double x) const;
    void apply(FeatureLattice& lattice) const;
};

/// Throws DataError on an empty training set.
Scaler fit_scaler(std::span<const FeatureLattice> train, const FeatureCatalog& catalog);

/// Feature-matrix export, one row per candidate (points) or per path (paths).
struct FeatureExportRow {
    CarId car_id;
    std::size_t piece;
    const Lattice* lattice;
    const FeatureLattice* features;
};
void write_point_matrix(std::ostream& out, const FeatureCatalog& catalog, std::span<const FeatureExportRow> rows);
void write_path_matrix(std::ostream& out, const FeatureCatalog& catalog, std::span<const FeatureExportRow> rows);

} // namespace crfmm
